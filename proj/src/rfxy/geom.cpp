#include "rfxy/geom.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <queue>

namespace rfxy::geom {

Region::Region(std::vector<Site> sites) : sites_(std::move(sites)) {
    std::sort(sites_.begin(), sites_.end());
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
    rebuild();
}

void Region::rebuild() {
    if (sites_.empty()) {
        bbox_ = Bounds{};
        mask_ = GridB{};
        return;
    }
    bbox_ = Bounds{sites_[0].x, sites_[0].y, sites_[0].x, sites_[0].y};
    for (auto s : sites_) {
        bbox_.x0 = std::min(bbox_.x0, s.x);
        bbox_.x1 = std::max(bbox_.x1, s.x);
        bbox_.y0 = std::min(bbox_.y0, s.y);
        bbox_.y1 = std::max(bbox_.y1, s.y);
    }
    mask_ = GridB(bbox_.width(), bbox_.height(), 0);
    for (auto s : sites_) mask_(s.x - bbox_.x0, s.y - bbox_.y0) = 1;
}

Region Region::rectangle(int x0, int y0, int w, int h) {
    std::vector<Site> v;
    v.reserve(static_cast<size_t>(std::max(w, 0)) * std::max(h, 0));
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) v.push_back({x, y});
    return Region(std::move(v));
}

Region Region::unite(const Region& o) const {
    std::vector<Site> v;
    v.reserve(sites_.size() + o.sites_.size());
    std::merge(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(), std::back_inserter(v));
    return Region(std::move(v));
}

Region Region::intersect(const Region& o) const {
    std::vector<Site> v;
    std::set_intersection(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(), std::back_inserter(v));
    return Region(std::move(v));
}

Region Region::subtract(const Region& o) const {
    std::vector<Site> v;
    std::set_difference(sites_.begin(), sites_.end(), o.sites_.begin(), o.sites_.end(), std::back_inserter(v));
    return Region(std::move(v));
}

Region Region::intersect(const LatticeGeom& ambient) const {
    std::vector<Site> v;
    for (auto s : sites_)
        if (ambient.contains(s)) v.push_back(s);
    return Region(std::move(v));
}

namespace {
constexpr std::array<Site, 4> kNbr4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
constexpr std::array<Site, 8> kNbr8{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
} // namespace

Region Region::inner_boundary() const {
    std::vector<Site> v;
    for (auto s : sites_) {
        for (auto d : kNbr4) {
            if (!contains(s.x + d.x, s.y + d.y)) {
                v.push_back(s);
                break;
            }
        }
    }
    return Region(std::move(v));
}

Region Region::outer_boundary() const {
    std::vector<Site> v;
    for (auto s : sites_) {
        for (auto d : kNbr4) {
            Site n{s.x + d.x, s.y + d.y};
            if (!contains(n)) v.push_back(n);
        }
    }
    return Region(std::move(v));
}

GridI Region::chebyshev_distance(int pad) const {
    Bounds b = bbox_.inflated(pad);
    const int big = std::numeric_limits<int>::max() / 4;
    GridI d(std::max(b.width(), 1), std::max(b.height(), 1), big);
    if (empty()) return d;
    for (auto s : sites_) d(s.x - b.x0, s.y - b.y0) = 0;
    // two-pass chamfer over the 8-neighborhood gives exact ℓ∞ distance
    for (int y = 0; y < d.ny(); ++y)
        for (int x = 0; x < d.nx(); ++x) {
            int v = d(x, y);
            if (x > 0) v = std::min(v, d(x - 1, y) + 1);
            if (y > 0) {
                v = std::min(v, d(x, y - 1) + 1);
                if (x > 0) v = std::min(v, d(x - 1, y - 1) + 1);
                if (x + 1 < d.nx()) v = std::min(v, d(x + 1, y - 1) + 1);
            }
            d(x, y) = v;
        }
    for (int y = d.ny() - 1; y >= 0; --y)
        for (int x = d.nx() - 1; x >= 0; --x) {
            int v = d(x, y);
            if (x + 1 < d.nx()) v = std::min(v, d(x + 1, y) + 1);
            if (y + 1 < d.ny()) {
                v = std::min(v, d(x, y + 1) + 1);
                if (x + 1 < d.nx()) v = std::min(v, d(x + 1, y + 1) + 1);
                if (x > 0) v = std::min(v, d(x - 1, y + 1) + 1);
            }
            d(x, y) = v;
        }
    return d;
}

GridI Region::euclidean_dist2(int pad) const {
    // exact squared Euclidean distance by scanning columns then rows
    // (Felzenszwalb-style lower envelope is overkill at these sizes)
    Bounds b = bbox_.inflated(pad);
    const int big = std::numeric_limits<int>::max() / 4;
    int w = std::max(b.width(), 1), h = std::max(b.height(), 1);
    // per column: distance to nearest region site in the same column
    GridI coldist(w, h, big);
    for (int x = 0; x < w; ++x) {
        int last = -big;
        for (int y = 0; y < h; ++y) {
            if (contains(Site{x + b.x0, y + b.y0})) last = y;
            coldist(x, y) = y - last;
        }
        last = big;
        for (int y = h - 1; y >= 0; --y) {
            if (contains(Site{x + b.x0, y + b.y0})) last = y;
            coldist(x, y) = std::min(coldist(x, y), last - y);
        }
    }
    GridI d2(w, h, big);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            long best = big;
            for (int xx = 0; xx < w; ++xx) {
                long dy = coldist(xx, y);
                if (dy >= big / 2) continue;
                long dx = xx - x;
                best = std::min(best, dx * dx + dy * dy);
            }
            d2(x, y) = static_cast<int>(std::min<long>(best, big));
        }
    return d2;
}

int Region::chebyshev_dist_to(Site s) const {
    if (empty()) return std::numeric_limits<int>::max() / 4;
    int best = std::numeric_limits<int>::max();
    for (auto t : sites_) best = std::min(best, std::max(std::abs(t.x - s.x), std::abs(t.y - s.y)));
    return best;
}

std::vector<Region> connected_components(const Region& r) {
    std::vector<Region> out;
    if (r.empty()) return out;
    Bounds b = r.bounds();
    GridB seen(b.width(), b.height(), 0);
    for (auto s : r.sites()) {
        if (seen(s.x - b.x0, s.y - b.y0)) continue;
        std::vector<Site> comp;
        std::queue<Site> q;
        q.push(s);
        seen(s.x - b.x0, s.y - b.y0) = 1;
        while (!q.empty()) {
            Site c = q.front();
            q.pop();
            comp.push_back(c);
            for (auto d : kNbr8) {
                Site n{c.x + d.x, c.y + d.y};
                if (!r.contains(n)) continue;
                auto& flag = seen(n.x - b.x0, n.y - b.y0);
                if (!flag) {
                    flag = 1;
                    q.push(n);
                }
            }
        }
        out.emplace_back(std::move(comp));
    }
    return out;
}

ComplementParts decompose_complement(const Region& r, const std::optional<LatticeGeom>& ambient) {
    ComplementParts parts;
    Bounds b;
    if (ambient) {
        b = ambient->bounds();
    } else {
        b = r.bounds().inflated(1);
        if (r.empty()) b = Bounds{0, 0, 0, 0};
    }
    int w = b.width(), h = b.height();
    GridI label(w, h, -1); // -1 unvisited, -2 region
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (r.contains(Site{x + b.x0, y + b.y0})) label(x, y) = -2;

    auto flood = [&](Site start, int id) {
        std::vector<Site> comp;
        std::queue<Site> q;
        q.push(start);
        label(start.x - b.x0, start.y - b.y0) = id;
        while (!q.empty()) {
            Site c = q.front();
            q.pop();
            comp.push_back(c);
            for (auto d : kNbr4) {
                Site n{c.x + d.x, c.y + d.y};
                if (!b.contains(n)) continue;
                auto& lv = label(n.x - b.x0, n.y - b.y0);
                if (lv == -1) {
                    lv = id;
                    q.push(n);
                }
            }
        }
        return comp;
    };

    // exterior: every complement site on the box frame belongs to it
    std::vector<Site> ext;
    for (int x = 0; x < w; ++x)
        for (int y : {0, h - 1}) {
            if (label(x, y) == -1) {
                auto c = flood({x + b.x0, y + b.y0}, 0);
                ext.insert(ext.end(), c.begin(), c.end());
            }
        }
    for (int y = 0; y < h; ++y)
        for (int x : {0, w - 1}) {
            if (label(x, y) == -1) {
                auto c = flood({x + b.x0, y + b.y0}, 0);
                ext.insert(ext.end(), c.begin(), c.end());
            }
        }
    parts.exterior = Region(std::move(ext));

    int id = 1;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (label(x, y) == -1) parts.interiors.emplace_back(flood({x + b.x0, y + b.y0}, id++));
    return parts;
}

Region interior_fill(const Region& r) {
    auto parts = decompose_complement(r);
    Region out;
    for (auto& in : parts.interiors) out = out.unite(in);
    return out;
}

Region thicken(const Region& region, int L0, int radius) {
    if (L0 < 1) throw ParamError("thicken: L0 must be >= 1");
    if (radius < 0) throw ParamError("thicken: radius must be >= 0");
    if (region.empty()) return Region{};
    BlockGrid bg(L0);
    GridI dist = region.chebyshev_distance(radius + L0);
    Bounds db = region.bounds().inflated(radius + L0);

    Site lo = bg.anchor_of({db.x0, db.y0});
    std::vector<Site> anchors;
    for (int ay = lo.y; ay <= db.y1; ay += L0)
        for (int ax = lo.x; ax <= db.x1; ax += L0) {
            int best = std::numeric_limits<int>::max();
            for (int y = std::max(ay, db.y0); y < std::min(ay + L0, db.y1 + 1); ++y)
                for (int x = std::max(ax, db.x0); x < std::min(ax + L0, db.x1 + 1); ++x)
                    best = std::min(best, dist(x - db.x0, y - db.y0));
            if (best < radius || best == 0) anchors.push_back({ax, ay});
        }
    return blocks_region(anchors, L0);
}

Region closed_hull(const Region& region, int L) {
    if (region.empty()) return Region{};
    return thicken(region, L, L).unite(interior_fill(region));
}

Region boundary(const Region& r, BoundarySide side) {
    return side == BoundarySide::inner ? r.inner_boundary() : r.outer_boundary();
}

std::vector<Site> BlockGrid::covering_anchors(const Region& r) const {
    std::vector<Site> out;
    for (auto s : r.sites()) out.push_back(anchor_of(s));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Site> BlockGrid::contained_anchors(const Region& r) const {
    std::vector<Site> out;
    for (auto a : covering_anchors(r)) {
        bool full = true;
        for (int y = a.y; y < a.y + block_side && full; ++y)
            for (int x = a.x; x < a.x + block_side; ++x)
                if (!r.contains(x, y)) {
                    full = false;
                    break;
                }
        if (full) out.push_back(a);
    }
    return out;
}

std::vector<std::vector<Site>> block_components(const std::vector<Site>& anchors, int L0) {
    std::map<std::pair<int, int>, int> idx;
    for (size_t i = 0; i < anchors.size(); ++i) idx[{anchors[i].x, anchors[i].y}] = static_cast<int>(i);
    std::vector<int> comp(anchors.size(), -1);
    std::vector<std::vector<Site>> out;
    for (size_t i = 0; i < anchors.size(); ++i) {
        if (comp[i] >= 0) continue;
        int id = static_cast<int>(out.size());
        out.emplace_back();
        std::queue<int> q;
        q.push(static_cast<int>(i));
        comp[i] = id;
        while (!q.empty()) {
            int c = q.front();
            q.pop();
            out[id].push_back(anchors[c]);
            for (auto d : kNbr8) {
                auto it = idx.find({anchors[c].x + d.x * L0, anchors[c].y + d.y * L0});
                if (it != idx.end() && comp[it->second] < 0) {
                    comp[it->second] = id;
                    q.push(it->second);
                }
            }
        }
    }
    return out;
}

Region blocks_region(const std::vector<Site>& anchors, int L0) {
    std::vector<Site> v;
    v.reserve(anchors.size() * static_cast<size_t>(L0) * L0);
    for (auto a : anchors)
        for (int y = a.y; y < a.y + L0; ++y)
            for (int x = a.x; x < a.x + L0; ++x) v.push_back({x, y});
    return Region(std::move(v));
}

std::string to_json(const Region& r) {
    std::ostringstream os;
    os << "[";
    bool first = true;
    for (auto s : r.sites()) {
        if (!first) os << ",";
        first = false;
        os << "[" << s.x << "," << s.y << "]";
    }
    os << "]";
    return os.str();
}

std::string blocks_to_json(const std::vector<Site>& anchors, int L0) {
    std::ostringstream os;
    os << "{\"block_side\":" << L0 << ",\"anchors\":[";
    for (size_t i = 0; i < anchors.size(); ++i) {
        if (i) os << ",";
        os << "[" << anchors[i].x << "," << anchors[i].y << "]";
    }
    os << "]}";
    return os.str();
}

} // namespace rfxy::geom
