#include <algorithm>
#include <cmath>

#include "rfxy/surgery.hpp"

namespace rfxy::surgery {

namespace {

constexpr double kWindow = M_PI / 5.0;

ScalarField global_alpha(const SurgeryContext& ctx) {
    return ScalarField{ctx.provider->alpha(), {0, 0}};
}

Region lattice_region(const LatticeGeom& dom) { return Region::rectangle(0, 0, dom.side, dom.side); }

double minus_h(const SpinConfig& s, const SurgeryContext& ctx) {
    return spin::hamiltonian(s, lattice_region(ctx.dom), spin::BoundaryCondition::e1(), global_alpha(ctx),
                             ctx.eps());
}

int block_scale(const ModelParams& p) { return std::max(p.L / 16, 1); }

/// Distance-squared lookup against a region, with "infinity" outside the pad.
struct Dist2 {
    GridI grid;
    geom::Bounds b;
    bool empty;
    Dist2(const Region& r, int pad) : empty(r.empty()) {
        if (!empty) {
            grid = r.euclidean_dist2(pad);
            b = r.bounds().inflated(pad);
        }
    }
    double dist(Site s) const {
        if (empty || !b.contains(s)) return 1e18;
        return std::sqrt(static_cast<double>(grid(s.x - b.x0, s.y - b.y0)));
    }
};

} // namespace

double SurgeryContext::soft_budget() const {
    return params.epsilon * params.epsilon * std::pow(params.logeps(), 5.0 / 8.0) *
           static_cast<double>(contour.support.size());
}

SurgeryContext make_context(const coarse::Contour& c, const GridI& Psi, const classify::FieldProvider& provider,
                            const CleanConstants& cc, const ModelParams& p, const LatticeGeom& dom) {
    SurgeryContext ctx;
    ctx.contour = c;
    ctx.regions = coarse::contour_regions(c, Psi, p, dom);
    ctx.provider = &provider;
    ctx.consts = cc;
    ctx.params = p;
    ctx.dom = dom;
    return ctx;
}

SpinConfig reference_config(SurgeryContext& ctx) {
    const auto& p = ctx.params;
    int hb = std::max(p.ell / 2, 1);
    const Region& db = ctx.regions.delta_bar;
    SpinConfig bar(db, 0.0);

    geom::BlockGrid bg(hb);
    double max_q_sum = 0.0;
    int clean_boxes = 0, dirty_boxes = 0;
    for (auto a : bg.covering_anchors(db)) {
        if (!ctx.provider->box_inside(a, hb)) {
            ++dirty_boxes; // cannot control the field: treat as dirty, keep e1
            continue;
        }
        auto rep = classify::classify_box(*ctx.provider, a, hb, ctx.consts, p);
        if (!rep.xi) {
            ++dirty_boxes;
            continue;
        }
        ++clean_boxes;
        auto bf = ctx.provider->box(a, hb);
        double msum = 0.0;
        for (double v : bf->d.m.v.raw()) msum += v;
        max_q_sum += 0.25 * msum;
        for (int y = 0; y < hb; ++y)
            for (int x = 0; x < hb; ++x) {
                Site s{a.x + x, a.y + y};
                if (db.contains(s)) bar.set_theta(s, bf->d.g.v(x, y));
            }
    }
    ctx.trace.log("reference/clean_boxes", clean_boxes, clean_boxes + dirty_boxes);

    // Lemma-5.1 style bookkeeping: sum Max_Q + H_S(sigma_bar) against the budget
    double mh_bar = spin::hamiltonian(bar, db, spin::ext_boundary(db, ctx.dom), global_alpha(ctx), ctx.eps());
    ctx.trace.log("reference/bookkeeping", max_q_sum - mh_bar, ctx.soft_budget());
    return bar;
}

Region defect_hull(const Region& R, const SpinConfig& sigma, int sign, const SurgeryContext& ctx) {
    if (R.empty()) return R;
    int reach = 3 * ctx.params.ell;
    Dist2 capd(R, reach + 2);

    Region A = R;
    for (int round = 0;; ++round) {
        if (round > 4 * reach * reach + 8) throw SurgeryError("defect_hull: closure failed to stabilize");
        std::vector<Site> add;
        for (auto& comp : geom::connected_components(A)) {
            for (auto x : comp.outer_boundary().sites()) {
                if (!ctx.dom.contains(x)) {
                    if (sign < 0) throw SurgeryError("defect_hull: negative hull escapes the lattice");
                    continue; // exterior is e1: fine for sign +1
                }
                if (sign * std::cos(sigma.theta(x)) < 0.9) add.push_back(x);
            }
        }
        if (add.empty()) break;
        for (auto s : add)
            if (capd.dist(s) > reach) throw SurgeryError("defect_hull: growth left the 3*ell reach of the seed");
        A = A.unite(Region(std::move(add)));
    }
    return A;
}

SpinConfig mod1_flip(const SpinConfig& sigma, SurgeryContext& ctx) {
    Region ap = defect_hull(ctx.regions.middle_plus, sigma, +1, ctx);
    Region am = defect_hull(ctx.regions.middle_minus, sigma, -1, ctx);
    if (!ap.intersect(am).empty()) throw SurgeryError("mod1: opposite defect hulls collide");

    SpinConfig out = sigma;
    auto flip_wrong = [&](const Region& hull, int sign) {
        for (auto s : hull.sites()) {
            double c = std::cos(sigma.theta(s));
            if (sign * c < 0.0) out.reflect_e1(s);
        }
    };
    flip_wrong(ap, +1);
    flip_wrong(am, -1);

    // Lemma flip (2): signs agree on the middle strips afterwards
    for (auto s : ctx.regions.middle_plus.sites())
        if (std::cos(out.theta(s)) < 0.0 && std::cos(sigma.theta(s)) != 0.0)
            throw SurgeryError("mod1: positive strip kept a negative spin");
    for (auto s : ctx.regions.middle_minus.sites())
        if (std::cos(out.theta(s)) > 0.0 && std::cos(sigma.theta(s)) != 0.0)
            throw SurgeryError("mod1: negative strip kept a positive spin");

    // Lemma flip (3): block averages never lose e1 mass on M^+-
    geom::BlockGrid bg(ctx.params.ell);
    for (auto side : {&ctx.regions.M_plus, &ctx.regions.M_minus})
        for (auto a : bg.contained_anchors(*side)) {
            auto before = spin::block_magnetization(sigma, a, ctx.params.ell);
            auto after = spin::block_magnetization(out, a, ctx.params.ell);
            if (std::abs(after[0]) < std::abs(before[0]) - 1e-12)
                throw SurgeryError("mod1: block magnetization decreased");
        }

    // Lemma flip (4): exact energy monotonicity
    double h0 = minus_h(sigma, ctx), h1 = minus_h(out, ctx);
    double tol = 1e-9 * (1.0 + std::abs(h0));
    ctx.trace.log("mod1/minus_h_gain", h1 - h0, 0.0, true, h1 >= h0 - tol);
    if (h1 < h0 - tol) throw SurgeryError("mod1: -H decreased");
    double e0 = spin::dirichlet_energy(sigma, lattice_region(ctx.dom));
    double e1 = spin::dirichlet_energy(out, lattice_region(ctx.dom));
    if (e1 > e0 + tol) throw SurgeryError("mod1: Dirichlet energy increased");
    return out;
}

SpinConfig mod2_taper(const SpinConfig& sigma1, SurgeryContext& ctx) {
    const auto& p = ctx.params;
    int bs = block_scale(p);
    geom::BlockGrid bg(bs);

    std::vector<Site> dirty;
    for (auto a : bg.covering_anchors(ctx.regions.M)) {
        bool bad = !ctx.provider->box_inside(a, bs) ||
                   !classify::classify_box(*ctx.provider, a, bs, ctx.consts, p).xi;
        if (bad) dirty.push_back(a);
    }
    Region D = geom::blocks_region(dirty, bs).intersect(ctx.dom).intersect(ctx.regions.M);
    Region Dp = D.intersect(ctx.regions.collar_plus);
    Region Dm = D.intersect(ctx.regions.collar_minus);
    ctx.trace.log("mod2/dirty_sites", static_cast<double>(D.size()), static_cast<double>(ctx.regions.M.size()));
    if (Dp.empty() && Dm.empty()) return sigma1;

    double reach = p.L / 16.0;
    int pad = static_cast<int>(std::ceil(reach)) + 2;
    Dist2 dp(Dp, pad), dm(Dm, pad);
    if (!Dp.empty() && !Dm.empty()) {
        for (auto s : Dp.sites())
            if (dm.dist(s) <= 2.0 * reach) throw SurgeryError("mod2: dirty neighborhoods of opposite sign collide");
    }

    SpinConfig out = sigma1;
    auto taper_side = [&](const Dist2& dd, int sign) {
        if (dd.empty) return;
        for (auto s : lattice_region(ctx.dom).sites()) {
            double d = dd.dist(s);
            if (d > reach) continue;
            double theta = sigma1.theta(s);
            double u = sign > 0 ? spin::wrap_angle(theta) : spin::wrap_angle(theta - M_PI);
            if (std::abs(u) > M_PI / 3.0 + 1e-9)
                throw SurgeryError("mod2: angle outside the taper window");
            double tau = std::min(16.0 * d / p.L, 1.0);
            out.set_theta(s, sign > 0 ? tau * u : tau * u + M_PI);
        }
    };
    taper_side(dp, +1);
    taper_side(dm, -1);

    double dh = minus_h(out, ctx) - minus_h(sigma1, ctx);
    ctx.trace.log("mod2/abs_dh", std::abs(dh), ctx.soft_budget());
    return out;
}

namespace {

// Working angles of a box under the +- reflection convention: for sign -1 the
// configuration is reflected across the e2 axis (theta -> pi - theta), so both
// cases relax towards angle 0.
double working_angle(const SpinConfig& s, Site x, int sign, const LatticeGeom& dom) {
    double theta = dom.contains(x) && s.has(x) ? s.theta(x) : 0.0; // ext boundary is e1
    return sign > 0 ? spin::wrap_angle(theta) : spin::wrap_angle(M_PI - theta);
}

} // namespace

SpinConfig mod3_relax(const SpinConfig& sigma2, SurgeryContext& ctx) {
    const auto& p = ctx.params;
    int bs = block_scale(p);
    int half = std::max(bs / 2, 1);

    SpinConfig cur = sigma2;
    std::vector<Region> relaxed_cores;
    int boxes_done = 0, boxes_skipped = 0;

    auto relax_side = [&](const Region& good, int sign) {
        if (good.empty()) return;
        // anchors of Q*_{bs} fully inside the good set, row-major
        std::vector<Site> anchors;
        auto b = good.bounds();
        for (int ay = (b.y0 / half) * half - bs; ay <= b.y1; ay += half)
            for (int ax = (b.x0 / half) * half - bs; ax <= b.x1; ax += half) {
                bool inside = true;
                for (int y = ay; y < ay + bs && inside; ++y)
                    for (int x = ax; x < ax + bs; ++x)
                        if (!good.contains(x, y)) {
                            inside = false;
                            break;
                        }
                if (inside && ctx.provider->box_inside({ax, ay}, bs)) anchors.push_back({ax, ay});
            }
        std::sort(anchors.begin(), anchors.end());

        for (auto a : anchors) {
            auto bf = ctx.provider->box(a, bs);
            const GridD& g = bf->d.g.v;
            double ginf = 0.0;
            for (double v : g.raw()) ginf = std::max(ginf, std::abs(v));
            if (ginf >= 1.0) throw SurgeryError("mod3: |g| >= 1 in box, change of variables is singular");

            Region Q = Region::rectangle(a.x, a.y, bs, bs);
            auto g_at = [&](Site s) {
                return (s.x >= a.x && s.x < a.x + bs && s.y >= a.y && s.y < a.y + bs) ? g(s.x - a.x, s.y - a.y)
                                                                                      : 0.0;
            };
            // phi on Q and its outer boundary; collect the too-steep set B
            std::map<std::pair<int, int>, double> phi;
            std::vector<Site> bad;
            auto visit = [&](Site s) {
                double ph = cov_forward(working_angle(cur, s, sign, ctx.dom), g_at(s));
                phi[{s.x, s.y}] = ph;
                if (std::abs(ph) > kWindow) bad.push_back(s);
            };
            for (auto s : Q.sites()) visit(s);
            for (auto s : Q.outer_boundary().sites()) visit(s);

            Region R = Q;
            if (!bad.empty()) R = Q.subtract(geom::thicken(Region(std::move(bad)), 1, 2));
            if (R.empty()) {
                ++boxes_skipped;
                continue;
            }

            KSpec ks;
            ks.region = R;
            ks.m = bf->d.m;
            for (auto s : R.outer_boundary().sites()) ks.set_tau(s, phi.at({s.x, s.y}));

            auto mx = maximize_k(ks);
            // phi_bar = nu on R, phi elsewhere; invert on Q
            SpinConfig next = cur;
            for (auto s : R.sites()) {
                double theta_w = cov_inverse(mx.nu.at(s), g_at(s));
                next.set_theta(s, sign > 0 ? theta_w : M_PI - theta_w);
            }

            // per-step Dirichlet inequality (Lemma mod3, first display)
            auto frozen = spin::frozen_boundary(Q, cur);
            double lhs = spin::dirichlet_energy_bc(next, Q, frozen);
            double rhs = 2.0 * (spin::dirichlet_energy_bc(cur, Q, frozen) + field::energy_zero_bc(g));
            ctx.trace.log("mod3/step_energy", lhs, rhs, true, lhs <= rhs + 1e-9);
            if (lhs > rhs + 1e-9 * (1.0 + rhs)) throw SurgeryError("mod3: per-step Dirichlet inequality failed");

            // only edges meeting Q change, so -H moves by the local difference
            auto local_mh = [&](const SpinConfig& cfg) {
                double acc = -0.5 * spin::dirichlet_energy_bc(cfg, Q, frozen);
                for (auto s : Q.sites()) acc += ctx.eps() * ctx.provider->alpha_at(s) * std::sin(cfg.theta(s));
                return acc;
            };
            double dh = local_mh(next) - local_mh(cur);
            ctx.trace.log("mod3/step_dh", dh, -p.epsilon * p.epsilon * std::pow(p.logeps(), 5.0 / 8.0) * bs * bs);
            cur = next;
            relaxed_cores.push_back(R);
            ++boxes_done;
        }
    };

    Region good_plus = ctx.regions.M_plus, good_minus = ctx.regions.M_minus;
    {
        // remove the dirty blocks (sigma2 already forced them to +-e1)
        int pad = 0;
        (void)pad;
        geom::BlockGrid bg(bs);
        std::vector<Site> dirty;
        for (auto a : bg.covering_anchors(ctx.regions.M)) {
            bool bad = !ctx.provider->box_inside(a, bs) ||
                       !classify::classify_box(*ctx.provider, a, bs, ctx.consts, p).xi;
            if (bad) dirty.push_back(a);
        }
        Region D = geom::blocks_region(dirty, bs);
        good_plus = good_plus.subtract(D);
        good_minus = good_minus.subtract(D);
    }
    relax_side(good_plus, +1);
    relax_side(good_minus, -1);
    ctx.trace.log("mod3/boxes", boxes_done, boxes_done + boxes_skipped);

    // interior flatness of the relaxed union (soft, logged only)
    Region all;
    for (auto& r : relaxed_cores) all = all.unite(r);
    if (!all.empty()) {
        double le = p.logeps();
        double margin = 6.0 / p.epsilon * std::pow(le, -0.45);
        Dist2 od(all.outer_boundary(), static_cast<int>(margin) + 2);
        double worst = 0.0;
        bool any = false;
        for (auto s : all.sites())
            if (od.dist(s) >= margin) {
                any = true;
                worst = std::max(worst, std::abs(std::sin(cur.theta(s))));
            }
        if (any) ctx.trace.log("mod3/interior_flatness", worst, 32.0 / std::sqrt(le));
    }
    return cur;
}

Mod4Result mod4_layers(const SpinConfig& sigma3, const SpinConfig& sigma_bar, SurgeryContext& ctx) {
    const auto& p = ctx.params;
    double le = p.logeps();
    const Region& mid = ctx.regions.middle;
    if (mid.empty()) throw SurgeryError("mod4: empty middle strip");

    int J = std::max(2, static_cast<int>(std::ceil(std::sqrt(le))));
    int dside = std::max(1, static_cast<int>(p.L / (64.0 * std::sqrt(le))));

    // concentric depth bands per component, snapped to the dside grid
    std::vector<std::vector<Site>> band_sites(J);
    for (auto& comp : geom::connected_components(mid)) {
        Region outside = Region(comp.outer_boundary().sites());
        Dist2 depth(outside, 2);
        double maxd = 0.0;
        for (auto s : comp.sites()) maxd = std::max(maxd, depth.dist(s));
        double w = std::max(maxd / J, 1e-9);
        geom::BlockGrid bg(dside);
        std::map<std::pair<int, int>, int> square_band;
        for (auto s : comp.sites()) {
            auto a = bg.anchor_of(s);
            int j = std::min(J - 1, static_cast<int>(depth.dist(s) / w));
            auto it = square_band.find({a.x, a.y});
            if (it == square_band.end() || j < it->second) square_band[{a.x, a.y}] = j;
        }
        for (auto s : comp.sites()) {
            auto a = bg.anchor_of(s);
            band_sites[square_band.at({a.x, a.y})].push_back(s);
        }
    }

    // first good layer by the density pigeonhole
    double e_mid = spin::dirichlet_energy(sigma3, mid);
    double cmeas = std::max(e_mid / (p.epsilon * p.epsilon * std::pow(le, 1.0 + p.chi) *
                                     std::max<double>(static_cast<double>(mid.size()), 1.0)),
                            1e-12);
    int chosen = -1;
    std::vector<Region> layers(J);
    for (int j = 0; j < J; ++j) {
        layers[j] = Region(std::move(band_sites[j]));
        if (layers[j].empty()) continue;
        double w = static_cast<double>(layers[j].size()) / static_cast<double>(mid.size());
        ctx.trace.log("mod4/layer_width", w, 2.0 / std::sqrt(le));
        double e = spin::dirichlet_energy(sigma3, layers[j]);
        bool good = e <= 4.0 * cmeas * p.epsilon * p.epsilon * std::pow(le, 1.0 + p.chi) *
                             static_cast<double>(layers[j].size());
        if (good && chosen < 0) chosen = j;
    }
    if (chosen < 0) throw SurgeryError("mod4: no good layer (pigeonhole violated)");

    Mod4Result res;
    res.layer_index = chosen;
    res.layer = layers[chosen];
    double tmid = std::max(0.0, p.L / (128.0 * std::sqrt(le)) - 100.0);
    if (tmid <= 0.0) {
        res.layer_mid = res.layer;
    } else {
        std::vector<Site> keep;
        Dist2 ib(res.layer.inner_boundary(), static_cast<int>(tmid) + 2);
        for (auto s : res.layer.sites())
            if (ib.dist(s) >= tmid) keep.push_back(s);
        res.layer_mid = Region(std::move(keep));
        if (res.layer_mid.empty()) res.layer_mid = res.layer;
    }

    Dist2 dmid(res.layer_mid, static_cast<int>(p.L) + 2);
    auto tau_of = [&](Site s) {
        double d = dmid.dist(s);
        return std::min(1.0, 128.0 * std::sqrt(le) * d / p.L);
    };

    // sigma^C: taper sigma3 towards the collar-sign ground state on the layer
    res.sigma_c = sigma3;
    for (auto s : res.layer.sites()) {
        double tau = tau_of(s);
        if (ctx.regions.collar_plus.contains(s)) {
            res.sigma_c.set_theta(s, tau * spin::wrap_angle(sigma3.theta(s)));
        } else if (ctx.regions.collar_minus.contains(s)) {
            res.sigma_c.set_theta(s, tau * spin::wrap_angle(sigma3.theta(s) - M_PI) + M_PI);
        }
    }

    // sigma_bar^C: orient the reference to the contour sign, then taper.  The
    // printed two-branch taper of the reference would put a pi twist inside
    // the glued region and break the Lemma mod67 bound, so the reference
    // follows one orientation (see the decisions ledger).
    int sign = ctx.contour.sign;
    if (sign == 0) throw SurgeryError("mod4: unsigned contour");
    res.sigma_bar_c = sigma_bar;
    if (sign < 0)
        for (auto s : sigma_bar.domain().sites()) res.sigma_bar_c.reflect_e1(s);
    for (auto s : res.layer.sites()) {
        if (!res.sigma_bar_c.has(s)) continue;
        double tau = tau_of(s);
        double th = res.sigma_bar_c.theta(s);
        if (sign > 0)
            res.sigma_bar_c.set_theta(s, tau * spin::wrap_angle(th));
        else
            res.sigma_bar_c.set_theta(s, tau * spin::wrap_angle(th - M_PI) + M_PI);
    }

    // exactness on the middle band
    for (auto s : res.layer_mid.sites()) {
        if (ctx.regions.collar_plus.contains(s) && std::abs(spin::wrap_angle(res.sigma_c.theta(s))) > 1e-12)
            throw SurgeryError("mod4: sigma^C missed +e1 on the middle band");
        if (ctx.regions.collar_minus.contains(s) &&
            std::abs(spin::wrap_angle(res.sigma_c.theta(s) - M_PI)) > 1e-12)
            throw SurgeryError("mod4: sigma^C missed -e1 on the middle band");
    }

    double dh1 = std::abs(minus_h(res.sigma_c, ctx) - minus_h(sigma3, ctx));
    ctx.trace.log("mod4/dh_sigma", dh1, ctx.soft_budget());
    auto ext = spin::ext_boundary(sigma_bar.domain(), ctx.dom);
    double dh2 = std::abs(
        spin::hamiltonian(res.sigma_bar_c, sigma_bar.domain(), ext, global_alpha(ctx), ctx.eps()) -
        spin::hamiltonian(sigma_bar, sigma_bar.domain(), ext, global_alpha(ctx), ctx.eps()));
    ctx.trace.log("mod4/dh_sigma_bar", dh2, ctx.soft_budget());
    return res;
}

SpinConfig glue_S(const SpinConfig& sigma, const Mod4Result& m4, SurgeryContext& ctx) {
    int sign = ctx.contour.sign;
    if (sign == 0) throw SurgeryError("glue_S: unsigned contour");
    if (ctx.contour.touches_boundary) throw SurgeryError("glue_S: contour touches the ambient boundary");

    const Region& delta = ctx.regions.delta;
    Region rest = delta.subtract(m4.layer_mid);
    Region gamma_tilde;
    for (auto& comp : geom::connected_components(rest))
        if (!comp.intersect(ctx.contour.support).empty()) gamma_tilde = gamma_tilde.unite(comp);
    gamma_tilde = gamma_tilde.unite(m4.layer_mid);

    SpinConfig S = m4.sigma_c;
    auto parts = geom::decompose_complement(gamma_tilde, ctx.dom);
    for (auto& interior : parts.interiors) {
        // label of the component, read off the contour labels where available
        int label = 0;
        for (auto s : interior.sites()) {
            int v = ctx.contour.label_at(s);
            if (v != 0) {
                label = v;
                break;
            }
        }
        if (label == -sign)
            for (auto s : interior.sites()) S.reflect_e1(s);
    }
    for (auto s : gamma_tilde.sites()) {
        if (!m4.sigma_bar_c.has(s)) throw SurgeryError("glue_S: reference does not cover the glued region");
        S.set_theta(s, m4.sigma_bar_c.theta(s));
    }
    (void)sigma;
    return S;
}

GapReport energy_gap(const SpinConfig& sigma, SurgeryContext& ctx) {
    auto bar = reference_config(ctx);
    auto s1 = mod1_flip(sigma, ctx);
    auto s2 = mod2_taper(s1, ctx);
    auto s3 = mod3_relax(s2, ctx);
    auto m4 = mod4_layers(s3, bar, ctx);
    auto S = glue_S(sigma, m4, ctx);

    GapReport rep;
    rep.minus_h_sigma = minus_h(sigma, ctx);
    rep.minus_h_s = minus_h(S, ctx);
    rep.gap = rep.minus_h_s - rep.minus_h_sigma;
    const auto& p = ctx.params;
    double scale = p.xi * p.xi * p.epsilon * p.epsilon * std::pow(p.logeps(), 1.0 - 4.0 * p.s) *
                   static_cast<double>(ctx.contour.support.size());
    rep.normalized_gap = rep.gap / scale;
    rep.S = std::move(S);
    ctx.trace.log("gap", rep.gap, 0.0, false, rep.gap > 0.0);
    return rep;
}

} // namespace rfxy::surgery
