#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <queue>
#include <set>

#include "rfxy/geom.hpp"
#include "rfxy/rng.hpp"

using namespace rfxy;
using namespace rfxy::geom;

namespace {

// Geometric oracle: connectivity of the union of closed unit boxes, checked on
// a half-step raster (box of site (x,y) covers cells [2x, 2x+2] x [2y, 2y+2]).
int closure_component_count(const std::vector<Site>& sites) {
    if (sites.empty()) return 0;
    int x0 = sites[0].x, x1 = sites[0].x, y0 = sites[0].y, y1 = sites[0].y;
    for (auto s : sites) {
        x0 = std::min(x0, s.x);
        x1 = std::max(x1, s.x);
        y0 = std::min(y0, s.y);
        y1 = std::max(y1, s.y);
    }
    int w = 2 * (x1 - x0) + 3, h = 2 * (y1 - y0) + 3;
    GridB cells(w, h, 0);
    for (auto s : sites)
        for (int dy = 0; dy <= 2; ++dy)
            for (int dx = 0; dx <= 2; ++dx) cells(2 * (s.x - x0) + dx, 2 * (s.y - y0) + dy) = 1;
    GridB seen(w, h, 0);
    int comps = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!cells(x, y) || seen(x, y)) continue;
            ++comps;
            std::queue<std::pair<int, int>> q;
            q.push({x, y});
            seen(x, y) = 1;
            while (!q.empty()) {
                auto [cx, cy] = q.front();
                q.pop();
                const int dxs[4] = {1, -1, 0, 0}, dys[4] = {0, 0, 1, -1};
                for (int i = 0; i < 4; ++i) {
                    int nx = cx + dxs[i], ny = cy + dys[i];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (cells(nx, ny) && !seen(nx, ny)) {
                        seen(nx, ny) = 1;
                        q.push({nx, ny});
                    }
                }
            }
        }
    return comps;
}

} // namespace

TEST_CASE("connected components of block sets") {
    int L0 = 4;
    SUBCASE("edge-sharing blocks form one component") {
        auto comps = block_components({{0, 0}, {L0, 0}}, L0);
        CHECK(comps.size() == 1);
    }
    SUBCASE("corner-sharing blocks form one component") {
        auto comps = block_components({{0, 0}, {L0, L0}}, L0);
        CHECK(comps.size() == 1);
    }
    SUBCASE("separated blocks form two components") {
        auto comps = block_components({{0, 0}, {2 * L0, 0}}, L0);
        CHECK(comps.size() == 2);
    }
}

TEST_CASE("8-connectivity matches closure connectivity on random site sets") {
    rng::Stream rs(20240811ULL);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Site> sites;
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x)
                if (rs.uniform() < 0.35) sites.push_back({x, y});
        Region r(sites);
        CHECK(static_cast<int>(connected_components(r).size()) == closure_component_count(sites));
    }
}

TEST_CASE("decompose_complement") {
    SUBCASE("annulus has one interior component") {
        Region outer = Region::rectangle(0, 0, 12, 12);
        Region hole = Region::rectangle(4, 4, 4, 4);
        Region ann = outer.subtract(hole);
        auto parts = decompose_complement(ann);
        REQUIRE(parts.interiors.size() == 1);
        CHECK(parts.interiors[0] == hole);
    }
    SUBCASE("solid square has no interior") {
        auto parts = decompose_complement(Region::rectangle(0, 0, 6, 6));
        CHECK(parts.interiors.empty());
    }
    SUBCASE("nested annuli: flood-fill oracle") {
        // outer annulus 20x20 with 12x12 hole ; inner annulus 8x8 with 4x4 hole
        Region outer = Region::rectangle(0, 0, 20, 20).subtract(Region::rectangle(4, 4, 12, 12));
        Region inner = Region::rectangle(6, 6, 8, 8).subtract(Region::rectangle(8, 8, 4, 4));
        auto parts = decompose_complement(outer);
        REQUIRE(parts.interiors.size() == 1);
        Region interior = parts.interiors[0];
        CHECK(inner.subtract(interior).empty());                      // inner annulus sits in the hole
        CHECK(interior.contains(Site{10, 10}));                       // innermost hole included
        CHECK(interior.size() == 144);                                // the full 12x12 hole
    }
    SUBCASE("parts partition the ambient") {
        LatticeGeom amb(16);
        Region r = Region::rectangle(2, 2, 9, 9).subtract(Region::rectangle(5, 5, 2, 2));
        auto parts = decompose_complement(r, amb);
        size_t total = r.size() + parts.exterior.size();
        for (auto& in : parts.interiors) {
            total += in.size();
            CHECK(in.intersect(parts.exterior).empty());
            CHECK(in.intersect(r).empty());
        }
        CHECK(total == 256);
    }
}

TEST_CASE("thicken") {
    int L0 = 4;
    Region blk = Region::rectangle(0, 0, L0, L0);
    SUBCASE("radius 1 on an L0-measurable region keeps only meeting blocks") {
        Region two = blk.unite(Region::rectangle(L0, 0, L0, L0));
        CHECK(thicken(two, L0, 1) == two);
    }
    SUBCASE("single block, radius L0+1 gives the 3x3 neighborhood") {
        Region t = thicken(blk, L0, L0 + 1);
        CHECK(t == Region::rectangle(-L0, -L0, 3 * L0, 3 * L0));
        // exhaustive distance-scan oracle
        std::vector<Site> expect;
        for (int ay = -3 * L0; ay <= 3 * L0; ay += L0)
            for (int ax = -3 * L0; ax <= 3 * L0; ax += L0) {
                int best = 1 << 20;
                for (int y = ay; y < ay + L0; ++y)
                    for (int x = ax; x < ax + L0; ++x)
                        for (auto s : blk.sites()) best = std::min(best, std::max(std::abs(x - s.x), std::abs(y - s.y)));
                if (best < L0 + 1)
                    for (int y = ay; y < ay + L0; ++y)
                        for (int x = ax; x < ax + L0; ++x) expect.push_back({x, y});
            }
        CHECK(t == Region(expect));
    }
    SUBCASE("empty region") { CHECK(thicken(Region{}, L0, 3).empty()); }
    SUBCASE("monotone in region and radius, idempotent-style fixed point") {
        Region small = Region::rectangle(0, 0, 2, 2);
        Region big = Region::rectangle(0, 0, 6, 2);
        CHECK(thicken(small, L0, 5).subtract(thicken(big, L0, 5)).empty());
        CHECK(thicken(small, L0, 3).subtract(thicken(small, L0, 5)).empty());
        Region fix = thicken(blk, L0, 1);
        CHECK(thicken(fix, L0, 1) == fix);
    }
}

TEST_CASE("closed hull") {
    int L = 4;
    SUBCASE("solid square: hull equals thickening") {
        Region sq = Region::rectangle(0, 0, 8, 8);
        CHECK(closed_hull(sq, L) == thicken(sq, L, L));
    }
    SUBCASE("annulus: hull fills the hole") {
        Region ann = Region::rectangle(0, 0, 12, 12).subtract(Region::rectangle(4, 4, 4, 4));
        Region hull = closed_hull(ann, L);
        CHECK(hull == thicken(ann, L, L).unite(Region::rectangle(4, 4, 4, 4)));
        CHECK(hull.contains(Site{5, 5}));
    }
    SUBCASE("empty") { CHECK(closed_hull(Region{}, L).empty()); }
    SUBCASE("hull of hull grows weakly") {
        Region ann = Region::rectangle(0, 0, 12, 12).subtract(Region::rectangle(4, 4, 4, 4));
        Region h1 = closed_hull(ann, L);
        CHECK(h1.subtract(closed_hull(h1, L)).empty());
    }
}

TEST_CASE("boundaries") {
    SUBCASE("1x1") {
        Region r = Region::rectangle(3, 3, 1, 1);
        CHECK(boundary(r, BoundarySide::inner) == r);
        CHECK(boundary(r, BoundarySide::outer) == Region({{2, 3}, {4, 3}, {3, 2}, {3, 4}}));
    }
    SUBCASE("3x3 enumeration oracle") {
        Region r = Region::rectangle(0, 0, 3, 3);
        CHECK(boundary(r, BoundarySide::inner).size() == 8);
        CHECK(boundary(r, BoundarySide::outer).size() == 12);
    }
    SUBCASE("full ambient square") {
        LatticeGeom amb(5);
        Region r = Region::rectangle(0, 0, 5, 5);
        Region out = boundary(r, BoundarySide::outer);
        CHECK(out.size() == 20); // ring outside Λ_N, corners excluded
        CHECK(out.intersect(amb).empty());
    }
}

TEST_CASE("serialization") {
    Region r({{1, 2}, {0, 0}});
    CHECK(geom::to_json(r) == "[[0,0],[1,2]]");
    CHECK(geom::blocks_to_json({{0, 0}, {4, 0}}, 4) == "{\"block_side\":4,\"anchors\":[[0,0],[4,0]]}");
}

TEST_CASE("block grid anchors") {
    BlockGrid bg(4);
    CHECK(bg.anchor_of({5, 7}) == Site{4, 4});
    CHECK(bg.anchor_of({-1, -5}) == Site{-4, -8});
    Region r = Region::rectangle(2, 2, 4, 4);
    auto cover = bg.covering_anchors(r);
    CHECK(cover.size() == 4);
    auto inside = bg.contained_anchors(Region::rectangle(0, 0, 8, 4));
    CHECK(inside.size() == 2);
}
