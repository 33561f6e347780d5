#include "rfxy/classify.hpp"

#include <algorithm>
#include <cmath>

namespace rfxy::classify {

FieldProvider::FieldProvider(GridD alpha, double epsilon, double lambda)
    : alpha_(std::move(alpha)), epsilon_(epsilon), lambda_(lambda) {
    if (epsilon_ <= 0.0 || lambda_ <= 0.0) throw ParamError("FieldProvider: epsilon and lambda must be > 0");
}

std::shared_ptr<const BoxFields> FieldProvider::box(Site anchor, int side) const {
    if (!box_inside(anchor, side)) throw DomainError("FieldProvider: box leaves the alpha support");
    auto key = std::make_tuple(anchor.x, anchor.y, side);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    GridD local(side, side);
    double ainf = 0.0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            double v = alpha_(anchor.x + x, anchor.y + y);
            local(x, y) = v;
            ainf = std::max(ainf, std::abs(v));
        }
    auto bf = std::make_shared<BoxFields>();
    bf->alpha_inf = ainf;
    bf->d = field::resolvent_apply_grid({field::Bc::D, side, lambda_, epsilon_}, local);
    bf->n = field::resolvent_apply_grid({field::Bc::N, side, lambda_, epsilon_}, local);
    bf->d.g.origin = bf->d.m.origin = anchor;
    bf->n.g.origin = bf->n.m.origin = anchor;
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, std::move(bf)).first->second;
}

bool a_event_holds(const GridD& m, double epsilon, double A, LogBase base) {
    int l = m.nx();
    double l34 = std::pow(static_cast<double>(l), 0.75);
    int rlo = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(l))));
    int rhi = static_cast<int>(std::floor(l34));
    if (rhi < rlo) return true;

    // row prefix sums of m for O(r) disk sums
    GridD pre(l + 1, l, 0.0);
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) pre(x + 1, y) = pre(x, y) + m(x, y);
    auto row_sum = [&](int x0, int x1, int y) { // inclusive range clipped to the box
        x0 = std::max(x0, 0);
        x1 = std::min(x1, l - 1);
        if (x0 > x1) return 0.0;
        return pre(x1 + 1, y) - pre(x0, y);
    };

    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) {
            int dist = std::min(std::min(x + 1, l - x), std::min(y + 1, l - y));
            if (static_cast<double>(dist) < l34) continue;
            for (int r = rlo; r <= rhi; ++r) {
                double sum = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    int yy = y + dy;
                    if (yy < 0 || yy >= l) continue;
                    long rem = static_cast<long>(r) * r - static_cast<long>(dy) * dy;
                    int dx = static_cast<int>(std::sqrt(static_cast<double>(rem)));
                    while (static_cast<long>(dx) * dx > rem) --dx;
                    sum += row_sum(x - dx, x + dx, yy);
                }
                if (sum / (epsilon * epsilon * r * r) < A * logmag(static_cast<double>(r), base) - 1e-12)
                    return false;
            }
        }
    return true;
}

bool check_A_event(const field::FieldSample& fs, double epsilon, double A, LogBase base) {
    if (fs.spec.side < 16)
        throw ScaleError("check_A_event: scale below 16 leaves no qualifying core sites");
    return a_event_holds(fs.m.v, epsilon, A, base);
}

std::vector<Site> overlapping_squares(const FieldProvider& f, Site anchor, int L0) {
    std::vector<Site> out;
    int half = L0 / 2;
    std::vector<int> offs = half > 0 ? std::vector<int>{-half, 0, half} : std::vector<int>{0};
    for (int oy : offs)
        for (int ox : offs) {
            Site a{anchor.x + ox, anchor.y + oy};
            if (f.box_inside(a, L0)) out.push_back(a);
        }
    return out;
}

namespace {

// Exact per-site mean square of eps^{-1} g at scale L0: the trace formula
// (1/L0^2) sum_k (zeta_k + lambda)^{-2}, maximized over the two boundary
// conditions (the Neumann zero mode dominates below lambda^{-1/2}).  This is
// the paper's eps^2 lambda^{-1} threshold scale continued to small blocks.
double mean_square_scale(int L0, double lambda) {
    double best = 0.0;
    for (auto bc : {field::Bc::D, field::Bc::N}) {
        const auto& b = field::basis_table(bc, L0);
        double acc = 0.0;
        for (int j2 = 0; j2 < L0; ++j2)
            for (int j1 = 0; j1 < L0; ++j1) {
                double den = b.zeta[j1] + b.zeta[j2] + lambda;
                acc += 1.0 / (den * den);
            }
        best = std::max(best, acc / (static_cast<double>(L0) * L0));
    }
    return best;
}

double grad_inf_of(const field::FieldSample& fs) {
    const GridD& g = fs.g.v;
    int l = g.nx();
    double best = 0.0;
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) {
            double c = g(x, y);
            if (x + 1 < l) best = std::max(best, std::abs(c - g(x + 1, y)));
            if (y + 1 < l) best = std::max(best, std::abs(c - g(x, y + 1)));
            if (fs.spec.bc == field::Bc::D && (x == 0 || y == 0 || x == l - 1 || y == l - 1))
                best = std::max(best, std::abs(c));
        }
    return best;
}

double grad2_of(const field::FieldSample& fs) {
    return fs.spec.bc == field::Bc::D ? field::energy_zero_bc(fs.g.v) : field::energy_internal(fs.g.v);
}

double ginf_of(const field::FieldSample& fs) {
    double best = 0.0;
    for (double v : fs.g.v.raw()) best = std::max(best, std::abs(v));
    return best;
}

} // namespace

BoxReport classify_box(const FieldProvider& f, Site anchor, int L0, const CleanConstants& cc, const ModelParams& p) {
    auto squares = overlapping_squares(f, anchor, L0);
    if (squares.empty()) throw DomainError("classify_box: no overlapping square fits the ambient lattice");

    double le = p.logeps();
    double eps = f.epsilon(), lam = f.lambda();
    double thr_c2 = cc.C_tail * eps * std::sqrt(mean_square_scale(L0, lam)) * std::pow(le, cc.eta);
    double thr_c3 = cc.C_big * eps * le;
    double thr_c4_lo = cc.c_small * eps * eps * le, thr_c4_hi = cc.C_big * eps * eps * le;
    double thr_c5 = cc.C_big * le;
    double logL0 = logmag(static_cast<double>(L0), p.log_base);

    BoxReport rep;
    rep.c1 = rep.c2 = rep.c3 = rep.c4 = rep.c5 = rep.c6 = true;
    for (auto a : squares) {
        auto bf = f.box(a, L0);
        ++rep.squares_checked;
        if (!a_event_holds(bf->d.m.v, eps, cc.A, p.log_base)) rep.c1 = false;
        for (const auto* fs : {&bf->d, &bf->n}) {
            double gi = ginf_of(*fs), gr = grad_inf_of(*fs), g2 = grad2_of(*fs);
            double g2m = g2 / (static_cast<double>(L0) * L0);
            rep.g_inf = std::max(rep.g_inf, gi);
            rep.grad_inf = std::max(rep.grad_inf, gr);
            rep.grad2_mean = std::max(rep.grad2_mean, g2m);
            if (gi > thr_c2) rep.c2 = false;
            if (gr > thr_c3) rep.c3 = false;
            // a single-site Neumann box has no edges at all; (C4) is vacuous there
            bool has_edges = !(fs->spec.bc == field::Bc::N && L0 == 1);
            if (has_edges && (g2m < thr_c4_lo || g2m > thr_c4_hi)) rep.c4 = false;
        }
        rep.alpha_inf = std::max(rep.alpha_inf, bf->alpha_inf);
        if (bf->alpha_inf > thr_c5) rep.c5 = false;
        double gap = std::abs(grad2_of(bf->n) - grad2_of(bf->d));
        rep.energy_dn_gap = std::max(rep.energy_dn_gap, gap);
        if (L0 > 1 && gap > cc.C_tail * grad2_of(bf->n) / std::pow(logL0, 0.25)) rep.c6 = false;
    }
    rep.xi = rep.c1 && rep.c2 && rep.c3 && rep.c4 && rep.c5 && rep.c6;
    return rep;
}

FFunctions f_functions(const FieldProvider& f, Site anchor, int L0) {
    auto squares = overlapping_squares(f, anchor, L0);
    if (squares.empty()) throw DomainError("f_functions: no overlapping square fits the ambient lattice");
    FFunctions out;
    double inv = 1.0 / (static_cast<double>(L0) * L0);
    for (auto a : squares) {
        auto bf = f.box(a, L0);
        for (const auto* fs : {&bf->d, &bf->n}) {
            double g22 = 0.0;
            for (double v : fs->g.v.raw()) g22 += v * v;
            out.F = std::max(out.F, g22 * inv);
            out.F_grad = std::max(out.F_grad, grad2_of(*fs) * inv);
        }
        out.F_inf = std::max(out.F_inf, bf->alpha_inf);
    }
    return out;
}

ControlledReport controlled(const Region& Y, int L0, const FieldProvider& f, const CleanConstants& cc,
                            const ModelParams& p) {
    geom::BlockGrid bg(L0);
    auto anchors = bg.contained_anchors(Y);
    if (anchors.size() * static_cast<size_t>(L0) * L0 != Y.size())
        throw DomainError("controlled: region is not L0-measurable");
    if (geom::connected_components(Y).size() > 1) throw DomainError("controlled: region is not connected");

    double le = p.logeps();
    double eps = f.epsilon(), lam = f.lambda();
    double f_scale = eps * eps * mean_square_scale(L0, lam); // R2's threshold scale
    double NY = static_cast<double>(anchors.size());

    double sum_dirty = 0, sum_r1 = 0, sum_r2 = 0, sum_r3 = 0;
    ControlledReport rep;
    rep.boxes = static_cast<int>(anchors.size());
    // (R1) keeps the printed thresholds; (R2) and (R3) carry the C_tail slack
    // because their printed cutoffs sit below the typical statistic at these
    // scales (Neumann zero mode for F, sup of |alpha| for F_inf).
    for (auto a : anchors) {
        auto br = classify_box(f, a, L0, cc, p);
        if (!br.xi) {
            sum_dirty += 1.0;
            ++rep.dirty_boxes;
        }
        auto ff = f_functions(f, a, L0);
        if (ff.F_grad >= eps * eps * std::pow(le, 1.0 + p.chi)) sum_r1 += ff.F_grad;
        if (ff.F >= cc.C_tail * f_scale * std::pow(le, p.chi)) sum_r2 += ff.F;
        if (ff.F_inf >= cc.C_tail * std::pow(le, p.chi)) sum_r3 += ff.F_inf;
    }
    rep.r0 = sum_dirty <= std::pow(le, -p.rho) * NY;
    rep.r1 = sum_r1 <= eps * eps * std::pow(le, p.zeta) * NY;
    rep.r2 = sum_r2 <= cc.C_tail * f_scale * std::pow(le, p.zeta) * NY;
    rep.r3 = sum_r3 <= cc.C_tail * std::pow(le, p.zeta) * NY;
    rep.controlled = rep.r0 && rep.r1 && rep.r2 && rep.r3;
    return rep;
}

RegionReport regular(const Region& Y, const FieldProvider& f, const CleanConstants& cc, const ModelParams& p,
                     const LatticeGeom& dom) {
    Region dY = geom::thicken(Y, p.L, p.L).intersect(dom);
    RegionReport rep;
    rep.half_ell = controlled(dY, std::max(p.ell / 2, 1), f, cc, p);
    rep.ell = controlled(dY, std::max(p.ell, 1), f, cc, p);
    rep.L16 = controlled(dY, std::max(p.L / 16, 1), f, cc, p);
    rep.regular = rep.half_ell.controlled && rep.ell.controlled && rep.L16.controlled;
    return rep;
}

DirtyRegion dirty_region(const LatticeGeom& dom, const FieldProvider& f, const CleanConstants& cc,
                         const ModelParams& p, int budget_blocks) {
    int L = p.L;
    if (dom.side % L != 0) throw DomainError("dirty_region: ambient side must be a multiple of L");
    int nb = dom.side / L;

    // seed with blocks that are individually bad
    std::vector<Site> seeds;
    for (int by = 0; by < nb; ++by)
        for (int bx = 0; bx < nb; ++bx) {
            Region blk = Region::rectangle(bx * L, by * L, L, L);
            if (!regular(blk, f, cc, p, dom).regular) seeds.push_back({bx * L, by * L});
        }

    DirtyRegion out;
    Region acc;
    auto comps = geom::block_components(seeds, L);
    out.components = static_cast<int>(comps.size());
    for (auto& comp : comps) {
        if (static_cast<int>(comp.size()) > budget_blocks) {
            out.complete = false;
            comp.resize(budget_blocks);
        }
        Region Y = geom::blocks_region(comp, L);
        acc = acc.unite(geom::closed_hull(Y, L).intersect(dom));
    }
    out.region = acc;
    return out;
}

} // namespace rfxy::classify
