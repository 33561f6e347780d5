#include "rfxy/coarse.hpp"

#include <cmath>
#include <sstream>

namespace rfxy::coarse {

namespace {

// Prefix-sum table with one cell of padding: P(x+1, y+1) = sum over [0..x][0..y].
struct Prefix {
    GridD p;
    explicit Prefix(const GridD& g) : p(g.nx() + 1, g.ny() + 1, 0.0) {
        for (int y = 0; y < g.ny(); ++y)
            for (int x = 0; x < g.nx(); ++x) p(x + 1, y + 1) = g(x, y) + p(x, y + 1) + p(x + 1, y) - p(x, y);
    }
    // sum over x in [x0, x1), y in [y0, y1)
    double rect(int x0, int y0, int x1, int y1) const {
        if (x1 <= x0 || y1 <= y0) return 0.0;
        return p(x1, y1) - p(x0, y1) - p(x1, y0) + p(x0, y0);
    }
};

struct AnchorLattice {
    int step, lo, count; // anchors lo + i*step, i in [0, count)
};

AnchorLattice anchors_for(int domain_side, int box_side, int step) {
    AnchorLattice a;
    a.step = std::max(step, 1);
    a.lo = 0;
    a.count = domain_side >= box_side ? (domain_side - box_side) / a.step + 1 : 0;
    return a;
}

// Stamp Euclidean disks of radius `rad` around flagged anchors.
void stamp_disks(GridB& blocked, const std::vector<Site>& centers, int rad) {
    long r2 = static_cast<long>(rad) * rad;
    for (auto c : centers)
        for (int dy = -rad; dy <= rad; ++dy) {
            long rem = r2 - static_cast<long>(dy) * dy;
            if (rem < 0) continue;
            int dx = static_cast<int>(std::sqrt(static_cast<double>(rem)));
            while (static_cast<long>(dx) * dx > rem) --dx;
            int y = c.y + dy;
            if (y < 0 || y >= blocked.ny()) continue;
            int x0 = std::max(c.x - dx, 0), x1 = std::min(c.x + dx, blocked.nx() - 1);
            for (int x = x0; x <= x1; ++x) blocked(x, y) = 1;
        }
}

GridD cos_grid(const SpinConfig& sigma, const LatticeGeom& dom) {
    GridD c(dom.side, dom.side);
    for (int y = 0; y < dom.side; ++y)
        for (int x = 0; x < dom.side; ++x) c(x, y) = std::cos(sigma.theta({x, y}));
    return c;
}

} // namespace

GridI compute_psi0(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, ell = p.ell;
    // per-edge energies
    GridD hor(std::max(n - 1, 1), n, 0.0), ver(n, std::max(n - 1, 1), 0.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double t = sigma.theta({x, y});
            if (x + 1 < n) hor(x, y) = spin::edge_energy(t, sigma.theta({x + 1, y}));
            if (y + 1 < n) ver(x, y) = spin::edge_energy(t, sigma.theta({x, y + 1}));
        }
    Prefix ph(hor), pv(ver);
    double thr = p.psi0_threshold();

    auto ax = anchors_for(n, ell, ell / 2);
    std::vector<Site> bad;
    for (int iy = 0; iy < ax.count; ++iy)
        for (int ix = 0; ix < ax.count; ++ix) {
            int x0 = ix * ax.step, y0 = iy * ax.step;
            double e = ph.rect(x0, y0, x0 + ell - 1, y0 + ell) + pv.rect(x0, y0, x0 + ell, y0 + ell - 1);
            if (e > thr) bad.push_back({x0, y0});
        }
    GridB blocked(n, n, 0);
    stamp_disks(blocked, bad, 2 * ell);
    GridI out(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (blocked(x, y)) out(x, y) = 0;
    return out;
}

GridI compute_psi1(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, ell = p.ell;
    Prefix pc(cos_grid(sigma, dom));
    auto ax = anchors_for(n, ell, ell / 2);
    std::vector<Site> not_plus, not_minus;
    double inv = 1.0 / (static_cast<double>(ell) * ell);
    for (int iy = 0; iy < ax.count; ++iy)
        for (int ix = 0; ix < ax.count; ++ix) {
            int x0 = ix * ax.step, y0 = iy * ax.step;
            double avg = pc.rect(x0, y0, x0 + ell, y0 + ell) * inv;
            if (!(avg >= 1.0 - p.xi)) not_plus.push_back({x0, y0});
            if (!(avg <= -1.0 + p.xi)) not_minus.push_back({x0, y0});
        }
    GridB plus_blocked(n, n, 0), minus_blocked(n, n, 0);
    stamp_disks(plus_blocked, not_plus, 2 * ell);
    stamp_disks(minus_blocked, not_minus, 2 * ell);
    GridI out(n, n, 0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (!plus_blocked(x, y)) out(x, y) = 1;
            else if (!minus_blocked(x, y)) out(x, y) = -1;
        }
    return out;
}

GridI psi_product(const GridI& psi0, const GridI& psi1) {
    GridI out(psi0.nx(), psi0.ny(), 0);
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] = psi0.raw()[i] * psi1.raw()[i];
    return out;
}

GridI compute_Psi(const GridI& psi, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, L = p.L;
    if (n % L != 0) throw DomainError("compute_Psi: domain side must be a multiple of L");
    int nb = n / L;
    GridI all_plus(nb, nb, 1), all_minus(nb, nb, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            int v = psi(x, y);
            if (v != 1) all_plus(x / L, y / L) = 0;
            if (v != -1) all_minus(x / L, y / L) = 0;
        }
    // anchor distance |r' - r|_2 <= 2L  <=>  block offsets with |d|_2 <= 2
    GridI blockPsi(nb, nb, 0);
    long lim = 4; // (2L)^2 / L^2
    for (int by = 0; by < nb; ++by)
        for (int bx = 0; bx < nb; ++bx) {
            bool plus = true, minus = true;
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx) {
                    if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy > lim) continue;
                    int xx = bx + dx, yy = by + dy;
                    if (xx < 0 || xx >= nb || yy < 0 || yy >= nb) continue;
                    if (!all_plus(xx, yy)) plus = false;
                    if (!all_minus(xx, yy)) minus = false;
                }
            blockPsi(bx, by) = plus ? 1 : (minus ? -1 : 0);
        }
    GridI out(n, n, 0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) out(x, y) = blockPsi(x / L, y / L);
    return out;
}

ContourSet extract_contours(const GridI& Psi, const GridI& psi, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, L = p.L;
    std::vector<Site> zero_anchors;
    for (int by = 0; by * L < n; ++by)
        for (int bx = 0; bx * L < n; ++bx)
            if (Psi(bx * L, by * L) == 0) zero_anchors.push_back({bx * L, by * L});

    ContourSet cs;
    for (auto& comp : geom::block_components(zero_anchors, L)) {
        Contour c;
        c.anchors = comp;
        std::sort(c.anchors.begin(), c.anchors.end());
        c.support = geom::blocks_region(comp, L);
        c.delta = geom::thicken(c.support, L, L).intersect(dom);
        for (auto s : c.delta.sites()) c.labels[{s.x, s.y}] = psi(s.x, s.y);

        for (auto s : c.support.inner_boundary().sites())
            if (s.x == 0 || s.y == 0 || s.x == n - 1 || s.y == n - 1) c.touches_boundary = true;

        auto parts = geom::decompose_complement(c.support, dom);
        Region dext = c.delta.intersect(parts.exterior);
        bool any_plus = false, any_minus = false, any_zero = false;
        for (auto s : dext.sites()) {
            int v = psi(s.x, s.y);
            if (v > 0) any_plus = true;
            else if (v < 0) any_minus = true;
            else any_zero = true;
        }
        if (any_plus && !any_minus && !any_zero) c.sign = 1;
        else if (any_minus && !any_plus && !any_zero) c.sign = -1;
        else c.sign = 0;
        cs.contours.push_back(std::move(c));
    }
    return cs;
}

PhaseField compute_phase_field(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom) {
    PhaseField f;
    f.params = p;
    f.psi0 = compute_psi0(sigma, p, dom);
    f.psi1 = compute_psi1(sigma, p, dom);
    f.psi = psi_product(f.psi0, f.psi1);
    f.Psi = compute_Psi(f.psi, p, dom);
    return f;
}

ContourSet contours_of(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom) {
    auto f = compute_phase_field(sigma, p, dom);
    return extract_contours(f.Psi, f.psi, p, dom);
}

bool compatible(const Contour& a, const Contour& b) {
    if (!a.delta.intersect(b.support).empty()) return false;
    for (auto s : a.delta.intersect(b.delta).sites())
        if (a.label_at(s) != b.label_at(s)) return false;
    return true;
}

ContourRegions contour_regions(const Contour& c, const GridI& Psi, const ModelParams& p, const LatticeGeom& dom) {
    ContourRegions r;
    int L = p.L;
    r.delta = c.delta;
    r.delta_bar = geom::thicken(c.support, std::max(L / 2, 1), std::max(L / 2, 1)).intersect(dom);
    r.collar = c.delta.subtract(c.support).intersect(dom);

    std::vector<Site> cp, cm;
    for (auto s : r.collar.sites()) {
        int v = Psi(s.x, s.y);
        if (v > 0) cp.push_back(s);
        else if (v < 0) cm.push_back(s);
    }
    r.collar_plus = Region(std::move(cp));
    r.collar_minus = Region(std::move(cm));

    Region ib = c.support.inner_boundary();
    int pad = 2 * L + 4;
    GridI d2 = ib.euclidean_dist2(pad);
    auto b = ib.bounds().inflated(pad);
    double lo = (L / 8.0) * (L / 8.0), hi = (3.0 * L / 8.0) * (3.0 * L / 8.0);
    std::vector<Site> mid;
    for (auto s : r.collar.sites()) {
        if (!b.contains(s)) continue;
        double dd = d2(s.x - b.x0, s.y - b.y0);
        if (dd >= lo && dd <= hi) mid.push_back(s);
    }
    r.middle = Region(std::move(mid));
    r.middle_plus = r.middle.intersect(r.collar_plus);
    r.middle_minus = r.middle.intersect(r.collar_minus);

    // L/16-blocks within Euclidean distance 3 of the middle strip
    int bs = std::max(L / 16, 1);
    if (!r.middle.empty()) {
        GridI md2 = r.middle.euclidean_dist2(4 + bs);
        auto mb = r.middle.bounds().inflated(4 + bs);
        geom::BlockGrid bg(bs);
        Site lo_a = bg.anchor_of({mb.x0, mb.y0});
        std::vector<Site> anchors;
        for (int ay = lo_a.y; ay <= mb.y1; ay += bs)
            for (int ax = lo_a.x; ax <= mb.x1; ax += bs) {
                long best = std::numeric_limits<long>::max();
                for (int y = std::max(ay, mb.y0); y < std::min(ay + bs, mb.y1 + 1); ++y)
                    for (int x = std::max(ax, mb.x0); x < std::min(ax + bs, mb.x1 + 1); ++x)
                        best = std::min<long>(best, md2(x - mb.x0, y - mb.y0));
                if (best <= 9) anchors.push_back({ax, ay});
            }
        r.M = geom::blocks_region(anchors, bs).intersect(dom);
    }
    r.M_plus = r.M.intersect(r.collar_plus);
    r.M_minus = r.M.intersect(r.collar_minus);

    auto parts = geom::decompose_complement(c.support, dom);
    r.delta_ext = c.delta.intersect(parts.exterior);
    Region interiors;
    for (auto& in : parts.interiors) interiors = interiors.unite(in);
    Region dint = c.delta.intersect(interiors);
    std::vector<Site> ip, im;
    for (auto s : dint.sites()) {
        int v = c.label_at(s);
        if (v > 0) ip.push_back(s);
        else if (v < 0) im.push_back(s);
    }
    r.delta_int_plus = Region(std::move(ip));
    r.delta_int_minus = Region(std::move(im));
    return r;
}

bool config_has_contour(const SpinConfig& sigma, const Contour& c, const ModelParams& p, const LatticeGeom& dom) {
    auto f = compute_phase_field(sigma, p, dom);
    // support must be a maximal component of {Psi = 0}
    for (auto a : c.anchors)
        if (f.Psi(a.x, a.y) != 0) return false;
    int L = p.L;
    for (auto a : c.anchors)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                Site n{a.x + dx * L, a.y + dy * L};
                if (!dom.contains(n) || c.support.contains(n)) continue;
                if (f.Psi(n.x, n.y) == 0) return false; // not maximal
            }
    for (auto s : c.delta.sites())
        if (f.psi(s.x, s.y) != c.label_at(s)) return false;
    return true;
}

std::string to_json(const ContourSet& cs) {
    std::ostringstream os;
    os << "{\"contours\":[";
    for (size_t i = 0; i < cs.contours.size(); ++i) {
        const auto& c = cs.contours[i];
        if (i) os << ",";
        os << "{\"sign\":" << c.sign << ",\"touches_boundary\":" << (c.touches_boundary ? "true" : "false")
           << ",\"size\":" << c.support.size() << ",\"anchors\":[";
        for (size_t j = 0; j < c.anchors.size(); ++j) {
            if (j) os << ",";
            os << "[" << c.anchors[j].x << "," << c.anchors[j].y << "]";
        }
        os << "],\"labels\":[";
        bool first = true;
        for (auto& [k, v] : c.labels) {
            if (!first) os << ",";
            first = false;
            os << "[" << k.first << "," << k.second << "," << v << "]";
        }
        os << "]}";
    }
    os << "]}";
    return os.str();
}

} // namespace rfxy::coarse
