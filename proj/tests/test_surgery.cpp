#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rfxy/reference.hpp"
#include "rfxy/rng.hpp"
#include "rfxy/surgery.hpp"

using namespace rfxy;
using namespace rfxy::surgery;
using geom::LatticeGeom;
using geom::Region;
using geom::Site;
using spin::ScalarField;
using spin::SpinConfig;

TEST_CASE("change of variables") {
    SUBCASE("zero field is the identity") {
        CHECK(cov_forward(0.7, 0.0) == 0.7);
        CHECK(cov_inverse(0.7, 0.0) == 0.7);
    }
    SUBCASE("theta = pi/2 is fixed for any g") {
        CHECK(cov_forward(M_PI_2, 0.43) == doctest::Approx(M_PI_2).epsilon(1e-15));
    }
    SUBCASE("frozen value from the defining formula") {
        CHECK(cov_forward(0.3, 0.1) == doctest::Approx(0.3 - 0.1 * std::cos(0.3)).epsilon(1e-15));
        CHECK(cov_forward(0.3, 0.1) == doctest::Approx(0.2044664).epsilon(1e-6));
        CHECK(std::abs(cov_inverse(cov_forward(0.3, 0.1), 0.1) - 0.3) <= 1e-12);
    }
    SUBCASE("round trips stay exact for |g| <= 0.5") {
        rng::Stream rs(5);
        for (int i = 0; i < 1000; ++i) {
            double theta = rs.uniform(-M_PI, M_PI);
            double g = rs.uniform(-0.5, 0.5);
            CHECK(std::abs(cov_inverse(cov_forward(theta, g), g) - theta) <= 1e-12);
        }
    }
    SUBCASE("|g| >= 1 is rejected") { CHECK_THROWS_AS(cov_inverse(0.1, 1.0), ParamError); }
}

namespace {

KSpec simple_kspec(int side, double mass, double tau, uint64_t seed = 0, double tau_jitter = 0.0) {
    KSpec ks;
    ks.region = Region::rectangle(0, 0, side, side);
    ks.m = ScalarField{GridD(side, side, mass), {0, 0}};
    rng::Stream rs(seed);
    for (auto s : ks.region.outer_boundary().sites()) ks.set_tau(s, tau + tau_jitter * rs.uniform(-1.0, 1.0));
    return ks;
}

} // namespace

TEST_CASE("k energy") {
    SUBCASE("zero masses, constant phi equal to tau") {
        auto ks = simple_kspec(3, 0.0, 0.4);
        ScalarField phi{GridD(3, 3, 0.4), {0, 0}};
        CHECK(k_energy(phi, ks) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("phi = 0 collects the full mass term") {
        auto ks = simple_kspec(3, 0.8, 0.0);
        ScalarField phi{GridD(3, 3, 0.0), {0, 0}};
        CHECK(k_energy(phi, ks) == doctest::Approx(0.25 * 0.8 * 9).epsilon(1e-14));
    }
    SUBCASE("random instance against a term-by-term oracle") {
        auto ks = simple_kspec(4, 0.0, 0.0, 3, 0.3);
        rng::Stream rs(9);
        GridD m(4, 4), phi(4, 4);
        for (auto& v : m.raw()) v = rs.uniform(0.0, 1.0);
        for (auto& v : phi.raw()) v = rs.uniform(-0.5, 0.5);
        ks.m = ScalarField{m, {0, 0}};
        ScalarField pf{phi, {0, 0}};
        double expect = 0.0;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                if (x + 1 < 4) expect += std::cos(phi(x, y) - phi(x + 1, y)) - 1.0;
                if (y + 1 < 4) expect += std::cos(phi(x, y) - phi(x, y + 1)) - 1.0;
                expect += 0.25 * m(x, y) * std::cos(phi(x, y)) * std::cos(phi(x, y));
            }
        for (auto s : ks.region.outer_boundary().sites()) {
            double t = *ks.tau_at(s);
            for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
                Site in{s.x + d.x, s.y + d.y};
                if (ks.region.contains(in)) expect += std::cos(phi(in.x, in.y) - t) - 1.0;
            }
        }
        CHECK(std::abs(k_energy(pf, ks) - expect) <= 1e-12);
    }
}

TEST_CASE("maximize_k") {
    SUBCASE("zero masses and constant boundary give the constant") {
        auto ks = simple_kspec(5, 0.0, 0.31);
        auto res = maximize_k(ks, true);
        for (auto s : ks.region.sites()) CHECK(res.nu.at(s) == doctest::Approx(0.31).epsilon(1e-8));
        CHECK(res.multi_start_agreed);
    }
    SUBCASE("zero boundary gives zero for any masses") {
        auto ks = simple_kspec(5, 0.7, 0.0);
        auto res = maximize_k(ks, true);
        for (auto s : ks.region.sites()) CHECK(std::abs(res.nu.at(s)) <= 1e-9);
    }
    SUBCASE("single site against a scalar root") {
        KSpec ks;
        ks.region = Region::rectangle(0, 0, 1, 1);
        ks.m = ScalarField{GridD(1, 1, 1.0), {0, 0}};
        for (auto s : ks.region.outer_boundary().sites()) ks.set_tau(s, 0.1);
        auto res = maximize_k(ks);
        // stationarity: 4 sin(nu - 0.1) + 0.5 sin(nu) cos(nu) = 0, bisection oracle
        double lo = 0.0, hi = 0.1;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            double f = 4.0 * std::sin(mid - 0.1) + 0.5 * std::sin(mid) * std::cos(mid);
            (f < 0 ? lo : hi) = mid;
        }
        double root = 0.5 * (lo + hi);
        CHECK(root > 0.0);
        CHECK(root < 0.1);
        CHECK(res.nu.at({0, 0}) == doctest::Approx(root).epsilon(1e-10));
    }
    SUBCASE("boundary above pi/5 is rejected") {
        auto ks = simple_kspec(3, 0.1, 0.7);
        CHECK_THROWS_AS(maximize_k(ks), ParamError);
    }
    SUBCASE("maximizer properties on a random instance") {
        auto ks = simple_kspec(8, 0.0, 0.0, 11, 0.5);
        rng::Stream rs(21);
        GridD m(8, 8);
        for (auto& v : m.raw()) v = rs.uniform(0.0, 0.15);
        ks.m = ScalarField{m, {0, 0}};
        auto res = maximize_k(ks, true);
        double msum = 0.0;
        for (double v : m.raw()) msum += v;
        CHECK(res.grad_inf <= 1e-8 * (1.0 + msum));
        CHECK(res.multi_start_agreed);
        double numax = 0.0, taumax = 0.0;
        for (auto s : ks.region.sites()) numax = std::max(numax, std::abs(res.nu.at(s)));
        for (auto& [k, t] : ks.tau) taumax = std::max(taumax, std::abs(t));
        CHECK(numax <= taumax + 1e-9);

        // solving the elliptic equation is the same as stationarity
        auto op = assemble_elliptic(res.nu, ks);
        CHECK(elliptic_residual(res.nu, op, ks) <= 1e-8 * (1.0 + msum));

        // convexity certificate on the window
        auto H = k_hessian_dense(res.nu, ks);
        int n = static_cast<int>(ks.region.size());
        Eigen::MatrixXd Hd(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) Hd(i, j) = H[static_cast<size_t>(i) * n + j];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
    SUBCASE("elliptic limits at nu = 0") {
        auto ks = simple_kspec(4, 0.5, 0.0);
        auto res = maximize_k(ks);
        auto op = assemble_elliptic(res.nu, ks);
        for (auto& [edge, c] : op.C) CHECK(c == doctest::Approx(1.0).epsilon(1e-9));
        for (auto& [site, v] : op.V) CHECK(v == doctest::Approx(0.25).epsilon(1e-9)); // m/2 = 0.25
        CHECK(elliptic_residual(res.nu, op, ks) <= 1e-10);
    }
    SUBCASE("interior decay of the standard clean instance") {
        // eps = 0.05 => base side 2*ceil(eps^-1 |log eps|^{-1/2}) = 24
        double eps = 0.05;
        double le = std::abs(std::log(eps));
        int side = 2 * static_cast<int>(std::ceil(1.0 / (eps * std::sqrt(le))));
        auto pm = ModelParams::from_epsilon(eps);
        double prev = 1e9, last = 1e9;
        for (int scale : {1, 2, 4}) {
            int l = side * scale;
            auto rf = field::sample_alpha(4242, l);
            auto fs = field::resolvent_apply_grid({field::Bc::D, l, pm.lambda, eps}, rf.alpha);
            KSpec ks;
            ks.region = Region::rectangle(0, 0, l, l);
            ks.m = fs.m;
            for (auto s : ks.region.outer_boundary().sites()) ks.set_tau(s, 0.2);
            auto res = maximize_k(ks);
            double center = std::abs(res.nu.at({l / 2, l / 2}));
            CHECK(center < prev);
            prev = center;
            last = center;
        }
        // from the second doubling on, the center has lost half the boundary
        // amplitude (frozen from the decay oracle: 0.190, 0.163, 0.092)
        CHECK(last <= 0.5 * 0.2);
    }
}

namespace {

struct DropletInstance {
    LatticeGeom dom{128};
    ModelParams params;
    CleanConstants consts;
    GridD alpha;
    SpinConfig sigma;
    coarse::ContourSet contours;
    coarse::PhaseField phase;
};

// A droplet of the opposite phase with a smooth interface ramp plus small
// angle noise, over a quenched field.
DropletInstance make_droplet(uint64_t seed, int n = 128, double radius = 24.0, bool reflected = false) {
    DropletInstance inst;
    inst.dom = LatticeGeom(n);
    inst.params = ModelParams::from_epsilon(0.1);
    inst.alpha = field::sample_alpha(seed, n).alpha;
    inst.sigma = SpinConfig(Region::rectangle(0, 0, n, n));
    rng::Stream rs(seed ^ 0xabcdef);
    double ramp = 3.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double d = std::hypot(x - n / 2, y - n / 2);
            double t = d <= radius ? M_PI : (d >= radius + ramp ? 0.0 : M_PI * (radius + ramp - d) / ramp);
            t += 0.04 * rs.normal();
            inst.sigma.set_theta({x, y}, reflected ? M_PI - t : t);
        }
    inst.phase = coarse::compute_phase_field(inst.sigma, inst.params, inst.dom);
    inst.contours = coarse::extract_contours(inst.phase.Psi, inst.phase.psi, inst.params, inst.dom);
    return inst;
}

} // namespace

TEST_CASE("droplet surgery pipeline") {
    auto inst = make_droplet(7);
    REQUIRE(inst.contours.contours.size() == 1);
    const auto& c = inst.contours.contours[0];
    REQUIRE(c.sign == 1);
    REQUIRE(!c.touches_boundary);

    classify::FieldProvider prov(inst.alpha, inst.params.epsilon, inst.params.lambda);
    auto ctx = make_context(c, inst.phase.Psi, prov, inst.consts, inst.params, inst.dom);

    SUBCASE("reference configuration is the field angles on clean boxes") {
        auto bar = reference_config(ctx);
        CHECK(bar.domain() == ctx.regions.delta_bar);
        int hb = std::max(inst.params.ell / 2, 1);
        geom::BlockGrid bg(hb);
        int checked = 0;
        for (auto a : bg.covering_anchors(ctx.regions.delta_bar)) {
            if (!prov.box_inside(a, hb)) continue;
            if (!classify::classify_box(prov, a, hb, ctx.consts, inst.params).xi) continue;
            auto bf = prov.box(a, hb);
            for (int y = 0; y < hb && checked < 200; ++y)
                for (int x = 0; x < hb; ++x) {
                    Site s{a.x + x, a.y + y};
                    if (!bar.has(s)) continue;
                    CHECK(bar.theta(s) == doctest::Approx(bf->d.g.v(x, y)).epsilon(1e-12));
                    ++checked;
                }
        }
        CHECK(checked > 0);
    }
    SUBCASE("all-dirty classification turns the reference into e1") {
        auto ctx2 = ctx;
        ctx2.consts = CleanConstants{1e9, 1.55, 1e8, 1.0 / 40.0, 9.0}; // impossible c_small
        auto bar = reference_config(ctx2);
        for (auto s : bar.domain().sites()) CHECK(bar.theta(s) == 0.0);
    }
    SUBCASE("mod1 is monotone and fixes the strips") {
        auto s1 = mod1_flip(inst.sigma, ctx);
        CHECK(spin::dirichlet_energy(s1, Region::rectangle(0, 0, 128, 128)) <=
              spin::dirichlet_energy(inst.sigma, Region::rectangle(0, 0, 128, 128)) + 1e-9);
    }
    SUBCASE("full pipeline yields a positive gap and localized changes") {
        auto rep = energy_gap(inst.sigma, ctx);
        CHECK(rep.gap > 0.0);
        // S differs from sigma only inside delta(Gamma), up to the prescribed
        // reflection of the interior components
        auto parts = geom::decompose_complement(ctx.contour.support, inst.dom);
        for (auto s : parts.exterior.subtract(ctx.regions.delta).sites())
            CHECK(rep.S.theta(s) == doctest::Approx(inst.sigma.theta(s)).epsilon(1e-12));
        int mismatched = 0;
        for (auto& interior : parts.interiors)
            for (auto s : interior.subtract(ctx.regions.delta).sites()) {
                double want = spin::wrap_angle(M_PI - inst.sigma.theta(s)); // reflected droplet core
                if (std::abs(spin::wrap_angle(rep.S.theta(s) - want)) > 1e-12) ++mismatched;
            }
        CHECK(mismatched == 0);
    }
    SUBCASE("gap is invariant under the global e2-axis reflection") {
        auto rep = energy_gap(inst.sigma, ctx);
        auto inst2 = make_droplet(7, 128, 24.0, true); // same seed, reflected spins
        REQUIRE(inst2.contours.contours.size() == 1);
        REQUIRE(inst2.contours.contours[0].sign == -1);
        classify::FieldProvider prov2(inst2.alpha, inst2.params.epsilon, inst2.params.lambda);
        auto ctx2 = make_context(inst2.contours.contours[0], inst2.phase.Psi, prov2, inst2.consts, inst2.params,
                                 inst2.dom);
        auto rep2 = energy_gap(inst2.sigma, ctx2);
        CHECK(rep2.gap == doctest::Approx(rep.gap).epsilon(1e-9));
        // S itself commutes with the reflection, pointwise
        for (auto s : rep.S.domain().sites())
            CHECK(std::abs(spin::wrap_angle(rep2.S.theta(s) - (M_PI - rep.S.theta(s)))) <= 1e-9);
    }
    SUBCASE("reference bookkeeping stays under the calibrated budget") {
        auto ctxb = make_context(c, inst.phase.Psi, prov, inst.consts, inst.params, inst.dom);
        reference_config(ctxb);
        bool found = false;
        for (auto& ev : ctxb.trace.events)
            if (ev.step == "reference/bookkeeping") {
                found = true;
                CHECK(ev.value <= 0.5 * ev.budget); // calibrated: measured about -0.03 of budget
            }
        CHECK(found);
    }
    SUBCASE("a constructed dirty island is tapered exactly onto e1") {
        // spike alpha on a block inside the plus middle strip
        REQUIRE(!ctx.regions.middle_plus.empty());
        Site hot = ctx.regions.middle_plus.sites()[ctx.regions.middle_plus.size() / 2];
        GridD spiked = inst.alpha;
        spiked(hot.x, hot.y) += 500.0;
        classify::FieldProvider prov2(spiked, inst.params.epsilon, inst.params.lambda);
        auto ctx2 = make_context(c, inst.phase.Psi, prov2, inst.consts, inst.params, inst.dom);
        auto s1 = mod1_flip(inst.sigma, ctx2);
        auto s2 = mod2_taper(s1, ctx2);
        CHECK(!(s2 == s1));
        CHECK(std::abs(spin::wrap_angle(s2.theta(hot))) <= 1e-12); // exactly +e1 on the dirty core
    }
    SUBCASE("fixed point: gluing the glued configuration changes nothing") {
        auto rep = energy_gap(inst.sigma, ctx);
        // -H(S) computed twice is identical (determinism of the pipeline)
        auto ctx2 = make_context(c, inst.phase.Psi, prov, inst.consts, inst.params, inst.dom);
        auto rep2 = energy_gap(inst.sigma, ctx2);
        CHECK(rep.gap == rep2.gap);
        CHECK(rep.S == rep2.S);
    }
}

TEST_CASE("mod1 on random contour configurations never decreases -H") {
    int trials = 30;
    for (int t = 0; t < trials; ++t) {
        auto inst = make_droplet(1000 + t);
        if (inst.contours.contours.size() != 1) continue;
        const auto& c = inst.contours.contours[0];
        if (c.sign == 0 || c.touches_boundary) continue;
        classify::FieldProvider prov(inst.alpha, inst.params.epsilon, inst.params.lambda);
        auto ctx = make_context(c, inst.phase.Psi, prov, inst.consts, inst.params, inst.dom);
        auto h = [&](const SpinConfig& s) {
            return spin::hamiltonian(s, Region::rectangle(0, 0, 128, 128), spin::BoundaryCondition::e1(),
                                     ScalarField{inst.alpha, {0, 0}}, inst.params.epsilon);
        };
        auto s1 = mod1_flip(inst.sigma, ctx);
        CHECK(h(s1) >= h(inst.sigma) - 1e-9 * (1.0 + std::abs(h(inst.sigma))));
    }
}

TEST_CASE("defect hull") {
    auto inst = make_droplet(40);
    classify::FieldProvider prov(inst.alpha, inst.params.epsilon, inst.params.lambda);
    auto ctx = make_context(inst.contours.contours[0], inst.phase.Psi, prov, inst.consts, inst.params, inst.dom);
    SUBCASE("aligned neighborhood keeps the hull equal to the seed") {
        SpinConfig aligned(Region::rectangle(0, 0, 128, 128), 0.02);
        Region seed = Region::rectangle(10, 10, 6, 6);
        CHECK(defect_hull(seed, aligned, +1, ctx) == seed);
    }
    SUBCASE("a small defect next to the seed is swallowed") {
        SpinConfig aligned(Region::rectangle(0, 0, 128, 128), 0.0);
        aligned.set_theta({16, 12}, 2.0); // cos = -0.42 < 0.9
        Region seed = Region::rectangle(10, 10, 6, 6);
        Region hull = defect_hull(seed, aligned, +1, ctx);
        CHECK(hull.contains(Site{16, 12}));
        for (auto x : hull.outer_boundary().sites())
            if (inst.dom.contains(x)) CHECK(std::cos(aligned.theta(x)) >= 0.9);
        // growth stays within 3*ell of the seed
        for (auto s : hull.sites()) {
            double best = 1e18;
            for (auto r : seed.sites()) best = std::min(best, std::hypot(s.x - r.x, s.y - r.y));
            CHECK(best <= 3.0 * inst.params.ell + 1e-9);
        }
    }
    SUBCASE("an impossible neighborhood raises") {
        SpinConfig bad(Region::rectangle(0, 0, 128, 128), M_PI); // everything points at -e1
        Region seed = Region::rectangle(60, 60, 4, 4);
        CHECK_THROWS_AS(defect_hull(seed, bad, +1, ctx), SurgeryError);
    }
}

TEST_CASE("mod2 and mod4 shape properties") {
    auto inst = make_droplet(77);
    REQUIRE(inst.contours.contours.size() == 1);
    classify::FieldProvider prov(inst.alpha, inst.params.epsilon, inst.params.lambda);
    auto ctx = make_context(inst.contours.contours[0], inst.phase.Psi, prov, inst.consts, inst.params, inst.dom);
    auto bar = reference_config(ctx);
    auto s1 = mod1_flip(inst.sigma, ctx);
    auto s2 = mod2_taper(s1, ctx);
    auto s3 = mod3_relax(s2, ctx);
    SUBCASE("clean middle strip keeps mod2 an identity") {
        bool any_dirty = false;
        for (auto& ev : ctx.trace.events)
            if (ev.step == "mod2/dirty_sites" && ev.value > 0) any_dirty = true;
        if (!any_dirty) CHECK(s2 == s1);
    }
    SUBCASE("mod4 pins the middle band exactly") {
        auto m4 = mod4_layers(s3, bar, ctx);
        CHECK(!m4.layer.empty());
        for (auto s : m4.layer_mid.sites()) {
            if (ctx.regions.collar_plus.contains(s))
                CHECK(std::abs(spin::wrap_angle(m4.sigma_c.theta(s))) <= 1e-12);
            if (ctx.regions.collar_minus.contains(s))
                CHECK(std::abs(spin::wrap_angle(m4.sigma_c.theta(s) - M_PI)) <= 1e-12);
        }
        // identity off the layer
        for (auto s : Region::rectangle(0, 0, 20, 20).sites())
            CHECK(m4.sigma_c.theta(s) == s3.theta(s));
    }
    SUBCASE("aligned configuration is fixed by the taper") {
        SpinConfig e1cfg(Region::rectangle(0, 0, 128, 128), 0.0);
        auto m4 = mod4_layers(e1cfg, bar, ctx);
        for (auto s : ctx.regions.collar_plus.intersect(m4.layer).sites())
            CHECK(m4.sigma_c.theta(s) == doctest::Approx(0.0));
    }
}

TEST_CASE("mod3 per-step inequality on clean boxes") {
    // standalone clean boxes at a workable scale
    double eps = 0.05;
    auto pm = ModelParams::from_epsilon(eps);
    int bs = 8;
    int ok = 0, total = 60;
    for (int t = 0; t < total; ++t) {
        auto rf = field::sample_alpha(52000 + t, bs);
        auto fs = field::resolvent_apply_grid({field::Bc::D, bs, pm.lambda, eps}, rf.alpha);
        rng::Stream rs(t);
        // smooth configuration near e1 with small tilt
        GridD theta(bs + 2, bs + 2);
        for (auto& v : theta.raw()) v = rs.uniform(-0.25, 0.25);

        Region Q = Region::rectangle(0, 0, bs, bs);
        SpinConfig cfg(Region::rectangle(-1, -1, bs + 2, bs + 2));
        for (int y = -1; y <= bs; ++y)
            for (int x = -1; x <= bs; ++x) cfg.set_theta({x, y}, theta(x + 1, y + 1));

        // phi on the box and boundary
        auto g_at = [&](Site s) {
            return (s.x >= 0 && s.x < bs && s.y >= 0 && s.y < bs) ? fs.g.v(s.x, s.y) : 0.0;
        };
        KSpec ks;
        ks.region = Q;
        ks.m = fs.m;
        bool window_ok = true;
        for (auto s : Q.outer_boundary().sites()) {
            double ph = cov_forward(cfg.theta(s), g_at(s));
            if (std::abs(ph) > M_PI / 5.0) window_ok = false;
            ks.set_tau(s, ph);
        }
        if (!window_ok) continue;
        auto mx = maximize_k(ks);
        SpinConfig next = cfg;
        for (auto s : Q.sites()) next.set_theta(s, cov_inverse(mx.nu.at(s), g_at(s)));

        auto frozen = spin::frozen_boundary(Q, cfg);
        double lhs = spin::dirichlet_energy_bc(next, Q, frozen);
        double rhs = 2.0 * (spin::dirichlet_energy_bc(cfg, Q, frozen) + field::energy_zero_bc(fs.g.v));
        CHECK(lhs <= rhs + 1e-9 * (1.0 + rhs));
        ++ok;
    }
    CHECK(ok >= total / 2);
}

TEST_CASE("cov decomposition error bound with the frozen constant") {
    // K = 0.2 frozen from the calibration run over this exact family
    const double K = 0.2;
    rng::Stream sel(424242);
    for (int t = 0; t < 200; ++t) {
        int l = 8 + 4 * (t % 3);
        double lam = std::pow(10.0, sel.uniform(-3.0, -1.0));
        double eps = sel.uniform(0.05, 0.5);
        double gscale = sel.uniform(0.05, 0.5);
        auto rf = field::sample_alpha(999000 + t, l);
        auto fs = field::resolvent_apply_grid({field::Bc::D, l, lam, 1.0}, rf.alpha);
        double ginf = 0;
        for (double v : fs.g.v.raw()) ginf = std::max(ginf, std::abs(v));
        GridD g(l, l);
        for (size_t i = 0; i < g.size(); ++i) g.raw()[i] = fs.g.v.raw()[i] * (gscale / std::max(ginf, 1e-12));
        Region R = Region::rectangle(0, 0, l, l);
        SpinConfig sigma(R);
        rng::Stream rs(77000 + t);
        double rough = sel.uniform(0.05, 0.45);
        double kx = rs.uniform(0.1, 0.6), ky = rs.uniform(0.1, 0.6), ph = rs.uniform(0, 6.28);
        for (auto s : R.sites()) sigma.set_theta(s, rough * std::sin(kx * s.x + ky * s.y + ph) + 0.05 * rs.normal());
        auto tau = spin::BoundaryCondition::explicit_bc();
        for (auto s : R.outer_boundary().sites()) tau.set(s, rs.uniform(-0.6, 0.6));
        auto audit = cov_audit(sigma, R, tau, ScalarField{g, {0, 0}}, lam, eps);
        double budget =
            gscale * (spin::dirichlet_energy_bc(sigma, R, tau) + field::energy_zero_bc(g) + lam * l * l);
        CHECK(std::abs(audit.err) <= K * budget);
    }
}

TEST_CASE("variational probe") {
    SUBCASE("zero alpha gives zero on both sides") {
        auto r = variational_probe(8, 0.0, GridD(8, 8, 0.0), 0.05);
        CHECK(r.quadratic_prediction == 0.0);
        CHECK(std::abs(r.numeric_max) <= 1e-12);
    }
    SUBCASE("the cos^2 law is exact") {
        auto rf = field::sample_alpha(3, 8);
        auto r0 = variational_probe(8, 0.0, rf.alpha, 0.05);
        for (double psi : {0.4, 1.0, M_PI_2}) {
            auto r = variational_probe(8, psi, rf.alpha, 0.05);
            CHECK(r.quadratic_prediction ==
                  doctest::Approx(r0.quadratic_prediction * std::cos(psi) * std::cos(psi)).epsilon(1e-12));
        }
    }
    SUBCASE("aligned angle beats the perpendicular one on most draws") {
        int wins = 0, n = 25;
        for (int i = 0; i < n; ++i) {
            auto rf = field::sample_alpha(700 + i, 16);
            auto a = variational_probe(16, 0.0, rf.alpha, 0.02);
            auto b = variational_probe(16, M_PI_2, rf.alpha, 0.02);
            if (a.numeric_max > b.numeric_max) ++wins;
        }
        CHECK(wins >= n - 1);
    }
}
