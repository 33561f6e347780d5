#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rfxy/field.hpp"
#include "rfxy/reference.hpp"
#include "rfxy/rng.hpp"

using namespace rfxy;
using namespace rfxy::field;
using geom::Site;

TEST_CASE("alpha sampling is reproducible and approximately N(0,1)") {
    auto a = sample_alpha(42, 16), b = sample_alpha(42, 16);
    CHECK(a.alpha == b.alpha);

    auto big = sample_alpha(7, 1000);
    double sum = 0, sq = 0;
    for (double v : big.alpha.raw()) {
        sum += v;
        sq += v * v;
    }
    double n = static_cast<double>(big.alpha.size());
    double mean = sum / n, var = sq / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) <= 0.01);

    auto c = sample_alpha(8, 1000);
    double dot = 0;
    for (size_t i = 0; i < big.alpha.size(); ++i) dot += big.alpha.raw()[i] * c.alpha.raw()[i];
    CHECK(std::abs(dot / n) <= 4.0 / std::sqrt(n)); // cross-seed correlation
}

TEST_CASE("resolvent solves the massive Poisson problem") {
    SUBCASE("zero input gives zero field") {
        ResolventSpec spec{Bc::D, 8, 0.5, 1.0};
        auto fs = resolvent_apply_grid(spec, GridD(8, 8, 0.0));
        for (double v : fs.g.v.raw()) CHECK(v == 0.0);
    }
    SUBCASE("l=2 unit impulse, frozen dense-solve oracle") {
        ResolventSpec spec{Bc::D, 2, 1.0, 1.0};
        GridD alpha(2, 2, 0.0);
        alpha(0, 0) = 1.0;
        auto fs = resolvent_apply_grid(spec, alpha);
        CHECK(fs.g.v(0, 0) == doctest::Approx(23.0 / 105.0).epsilon(1e-12));
        CHECK(fs.g.v(1, 0) == doctest::Approx(1.0 / 21.0).epsilon(1e-12));
        CHECK(fs.g.v(0, 1) == doctest::Approx(1.0 / 21.0).epsilon(1e-12));
        CHECK(fs.g.v(1, 1) == doctest::Approx(2.0 / 105.0).epsilon(1e-12));
        auto dense = ref::dense_resolvent(spec, alpha);
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) CHECK(fs.g.v(x, y) == doctest::Approx(dense(x, y)).epsilon(1e-12));
    }
    SUBCASE("dense-solve agreement for both boundary conditions") {
        for (int l : {4, 8, 16})
            for (auto bc : {Bc::D, Bc::N}) {
                ResolventSpec spec{bc, l, 0.05, 0.7};
                auto rf = sample_alpha(1000 + l, l);
                auto fs = resolvent_apply(spec, rf);
                auto dense = ref::dense_resolvent(spec, rf.alpha);
                double scale = 0.0;
                for (double v : dense.raw()) scale = std::max(scale, std::abs(v));
                for (int y = 0; y < l; ++y)
                    for (int x = 0; x < l; ++x) CHECK(std::abs(fs.g.v(x, y) - dense(x, y)) <= 1e-9 * scale);
                double amax = 0.0;
                for (double v : rf.alpha.raw()) amax = std::max(amax, std::abs(v));
                CHECK(fs.residual <= 1e-10 * spec.epsilon * amax);
            }
    }
    SUBCASE("lambda <= 0 rejected") {
        CHECK_THROWS_AS(resolvent_apply_grid(ResolventSpec{Bc::N, 4, 0.0, 1.0}, GridD(4, 4, 0.0)), ParamError);
    }
    SUBCASE("constant alpha under Neumann gives the constant mode eps c / lambda") {
        ResolventSpec spec{Bc::N, 8, 0.37, 0.5};
        auto fs = resolvent_apply_grid(spec, GridD(8, 8, 2.0));
        for (double v : fs.g.v.raw()) CHECK(v == doctest::Approx(0.5 * 2.0 / 0.37).epsilon(1e-12));
    }
    SUBCASE("linearity and self-adjointness") {
        ResolventSpec spec{Bc::D, 8, 0.1, 1.0};
        auto a1 = sample_alpha(1, 8), a2 = sample_alpha(2, 8);
        GridD mix(8, 8);
        for (size_t i = 0; i < mix.size(); ++i) mix.raw()[i] = 2.0 * a1.alpha.raw()[i] - 3.0 * a2.alpha.raw()[i];
        auto g1 = resolvent_apply(spec, a1).g.v;
        auto g2 = resolvent_apply(spec, a2).g.v;
        auto gm = resolvent_apply_grid(spec, mix).g.v;
        for (size_t i = 0; i < mix.size(); ++i)
            CHECK(std::abs(gm.raw()[i] - (2.0 * g1.raw()[i] - 3.0 * g2.raw()[i])) <= 1e-10);
        double lhs = 0, rhs = 0;
        for (size_t i = 0; i < mix.size(); ++i) {
            lhs += g1.raw()[i] * a2.alpha.raw()[i];
            rhs += a1.alpha.raw()[i] * g2.raw()[i];
        }
        CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
}

TEST_CASE("eigen pairs") {
    SUBCASE("zeta at k = (pi/2, pi/2) equals 4") {
        double k = M_PI_2;
        double z = 4.0 * (std::sin(k / 2) * std::sin(k / 2) + std::sin(k / 2) * std::sin(k / 2));
        CHECK(std::abs(z - 4.0) <= 4e-15);
        // Neumann l=16 has the mode j = 8 with k = pi/2 on both axes
        const auto& b = basis_table(Bc::N, 16);
        CHECK(std::abs(b.k[8] - M_PI_2) <= 1e-15);
        CHECK(std::abs(2.0 * b.zeta[8] - 4.0) <= 4e-15);
    }
    SUBCASE("Neumann zero mode is constant with zeta 0") {
        auto pairs = eigen_pairs(ResolventSpec{Bc::N, 4, 1.0, 1.0});
        CHECK(pairs[0].zeta == 0.0);
        for (double v : pairs[0].vec.raw()) CHECK(v == doctest::Approx(0.25));
    }
    SUBCASE("every l=16 pair satisfies the eigen relation to 1e-10") {
        for (auto bc : {Bc::D, Bc::N}) {
            ResolventSpec spec{bc, 16, 0.3, 1.0};
            for (const auto& p : eigen_pairs(spec)) {
                GridD lhs = apply_operator(spec, p.vec);
                for (int y = 0; y < 16; ++y)
                    for (int x = 0; x < 16; ++x)
                        CHECK(std::abs(lhs(x, y) - (p.zeta + spec.lambda) * p.vec(x, y)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("annulus decomposition") {
    ResolventSpec spec{Bc::D, 16, 0.05, 0.8};
    auto rf = sample_alpha(33, 16);
    SUBCASE("summing all annuli reproduces the normalized field") {
        GridD total(16, 16, 0.0);
        for (int s = 0; s < annulus_count(16); ++s) {
            auto part = annulus_project(spec, rf.alpha, s);
            for (size_t i = 0; i < total.size(); ++i) total.raw()[i] += part.raw()[i];
        }
        auto g = resolvent_apply(spec, rf).g.v;
        for (size_t i = 0; i < total.size(); ++i)
            CHECK(std::abs(total.raw()[i] - g.raw()[i] / spec.epsilon) <= 1e-10);
    }
    SUBCASE("a single excited mode lands in exactly one annulus") {
        const auto& b = basis_table(Bc::D, 16);
        GridD alpha(16, 16);
        int j1 = 2, j2 = 3;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) alpha(x, y) = b.V[j1 * 16 + x] * b.V[j2 * 16 + y];
        int home = annulus_of(b.k[j1], b.k[j2], 16);
        for (int s = 0; s < annulus_count(16); ++s) {
            auto part = annulus_project(spec, alpha, s);
            double norm = 0.0;
            for (double v : part.raw()) norm = std::max(norm, std::abs(v));
            if (s == home) CHECK(norm > 0.0);
            else CHECK(norm <= 1e-12);
        }
    }
    SUBCASE("annulus values at a site agree with per-annulus projections") {
        Site x{7, 9};
        auto vals = annulus_values_at(spec, rf.alpha, x);
        for (int s = 0; s < annulus_count(16); ++s) {
            auto part = annulus_project(spec, rf.alpha, s);
            CHECK(std::abs(vals[s] - part(x.x, x.y)) <= 1e-11);
        }
    }
    SUBCASE("empty annulus has zero variance") {
        // Dirichlet has no zero mode, so the last annulus is empty at l=16
        CHECK(exact_annulus_variance(spec, annulus_count(16) - 1, {8, 8}) == 0.0);
    }
    SUBCASE("Monte Carlo variance matches the exact spectral sum") {
        ResolventSpec s32{Bc::D, 32, 0.02, 1.0};
        Site x{16, 16};
        int samples = 4000;
        int bins = annulus_count(32);
        std::vector<double> sum(bins, 0.0), sq(bins, 0.0);
        for (int i = 0; i < samples; ++i) {
            auto rfi = sample_alpha(5000 + i, 32);
            auto vals = annulus_values_at(s32, rfi.alpha, x);
            for (int s = 0; s < bins; ++s) {
                sum[s] += vals[s];
                sq[s] += vals[s] * vals[s];
            }
        }
        for (int s = 0; s < bins; ++s) {
            double mean = sum[s] / samples;
            double var = sq[s] / samples - mean * mean;
            double exact = exact_annulus_variance(s32, s, x);
            if (exact == 0.0) {
                CHECK(std::abs(var) <= 1e-20);
                continue;
            }
            double se = exact * std::sqrt(2.0 / samples); // chi^2 standard error
            CHECK(std::abs(var - exact) <= 5.0 * se);
        }
    }
    SUBCASE("variance ratio against the lemma scale") {
        ResolventSpec big{Bc::D, 256, 1e-3, 1.0};
        Site x{128, 128};
        for (int s = 0; s < annulus_count(256); ++s) {
            if (std::pow(2.0, -s) < 4.0 / 256) break; // mid-range annuli only
            double v = exact_annulus_variance(big, s, x);
            double scale = std::pow(2.0, -2.0 * s) / std::pow(big.lambda + std::pow(2.0, -2.0 * s), 2.0);
            CHECK(v / scale >= 1e-2);
            CHECK(v / scale <= 1e2);
        }
    }
    SUBCASE("distinct annuli are uncorrelated") {
        ResolventSpec s16{Bc::D, 16, 0.05, 1.0};
        Site x{8, 8};
        int samples = 4000, bins = annulus_count(16);
        std::vector<std::vector<double>> vals(samples);
        for (int i = 0; i < samples; ++i) vals[i] = annulus_values_at(s16, sample_alpha(61000 + i, 16).alpha, x);
        for (int a = 0; a < bins; ++a)
            for (int b = a + 1; b < bins; ++b) {
                double va = exact_annulus_variance(s16, a, x), vb = exact_annulus_variance(s16, b, x);
                if (va == 0.0 || vb == 0.0) continue;
                double ma = 0, mb = 0, cov = 0;
                for (auto& v : vals) {
                    ma += v[a];
                    mb += v[b];
                }
                ma /= samples;
                mb /= samples;
                for (auto& v : vals) cov += (v[a] - ma) * (v[b] - mb);
                cov /= samples;
                double se = std::sqrt(va * vb / samples);
                CHECK(std::abs(cov) <= 4.0 * se);
            }
    }
    SUBCASE("pair increment variance") {
        CHECK(pair_increment_variance(spec, 2, {5, 5}, {5, 5}) == 0.0);
        ResolventSpec big{Bc::D, 256, 1e-3, 1.0};
        Site x{128, 128}, y{129, 128};
        for (int s = 2; s <= 5; ++s) {
            double v = pair_increment_variance(big, s, x, y);
            double scale = std::pow(2.0, -4.0 * s) / std::pow(big.lambda + std::pow(2.0, -2.0 * s), 2.0);
            CHECK(v / scale >= 1e-2);
            CHECK(v / scale <= 1e2);
        }
    }
}

TEST_CASE("zeta_bar_sq quadrature") {
    SUBCASE("monotone in lambda") { CHECK(zeta_bar_sq(1e-4) > zeta_bar_sq(1e-2)); }
    SUBCASE("lambda * zeta_bar_sq stays of order one") {
        for (double lam : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2}) {
            double v = lam * zeta_bar_sq(lam);
            CHECK(v >= 0.4);
            CHECK(v <= 1.2);
        }
    }
    SUBCASE("agrees with the graded midpoint oracle") {
        for (double lam : {1.0, 1e-2, 1e-4}) {
            double mine = zeta_bar_sq(lam);
            double oracle = ref::zeta_bar_sq_midpoint(lam, 1500);
            CHECK(std::abs(mine - oracle) <= 1e-6 * oracle);
        }
    }
    SUBCASE("rejects nonpositive lambda") { CHECK_THROWS_AS(zeta_bar_sq(0.0), ParamError); }
}

TEST_CASE("Dirichlet/Neumann energy difference") {
    SUBCASE("zero alpha gives zero difference") {
        CHECK(energy_diff_DN(GridD(8, 8, 0.0), 8, 0.1, 1.0) == 0.0);
    }
    SUBCASE("per-term values match the quadratic forms") {
        int l = 8;
        double lam = 0.2, eps = 0.6;
        auto rf = sample_alpha(3, l);
        auto gd = resolvent_apply_grid({Bc::D, l, lam, eps}, rf.alpha);
        auto gn = resolvent_apply_grid({Bc::N, l, lam, eps}, rf.alpha);
        // Parseval: E(g|0) = sum zeta_k ghat_k^2 for the matching basis
        auto modes_d = to_modes(Bc::D, gd.g.v);
        const auto& bd = basis_table(Bc::D, l);
        double spectral = 0.0;
        for (int j2 = 0; j2 < l; ++j2)
            for (int j1 = 0; j1 < l; ++j1) spectral += (bd.zeta[j1] + bd.zeta[j2]) * modes_d(j1, j2) * modes_d(j1, j2);
        CHECK(std::abs(energy_zero_bc(gd.g.v) - spectral) <= 1e-8 * std::max(1.0, spectral));
        CHECK(energy_diff_DN(rf.alpha, l, lam, eps) ==
              doctest::Approx(energy_zero_bc(gd.g.v) - energy_internal(gn.g.v)).epsilon(1e-12));
    }
    SUBCASE("sample mean tracks the exact expectation") {
        int l = 16;
        double lam = 10.0 / (l * l), eps = 1.0;
        double expect = expected_energy_diff_DN(l, lam, eps);
        double acc = 0.0, acc2 = 0.0;
        int n = 200;
        for (int i = 0; i < n; ++i) {
            double v = energy_diff_DN(sample_alpha(900 + i, l).alpha, l, lam, eps);
            acc += v;
            acc2 += v * v;
        }
        double mean = acc / n;
        double sd = std::sqrt(std::max(acc2 / n - mean * mean, 0.0));
        CHECK(std::abs(mean - expect) <= 5.0 * sd / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("sup tail experiment") {
    ResolventSpec spec{Bc::D, 16, 0.05, 0.3};
    auto rows = sup_tail_experiment(spec, {0.0, 1.0, 2.0}, 200, 4242);
    CHECK(rows[0].p_hat == 1.0);
    CHECK(rows[1].p_hat >= rows[2].p_hat);
    for (auto& r : rows) {
        CHECK(r.ci_lo <= r.p_hat);
        CHECK(r.p_hat <= r.ci_hi);
    }
}
