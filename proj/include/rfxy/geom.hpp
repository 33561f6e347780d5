#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rfxy/errors.hpp"
#include "rfxy/grid.hpp"

namespace rfxy::geom {

struct Site {
    int x = 0, y = 0;
    friend bool operator==(Site a, Site b) { return a.x == b.x && a.y == b.y; }
    friend bool operator<(Site a, Site b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }
};

struct Bounds {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1; // inclusive; empty iff x1 < x0

    bool empty() const { return x1 < x0 || y1 < y0; }
    int width() const { return empty() ? 0 : x1 - x0 + 1; }
    int height() const { return empty() ? 0 : y1 - y0 + 1; }
    bool contains(Site s) const { return !empty() && s.x >= x0 && s.x <= x1 && s.y >= y0 && s.y <= y1; }
    Bounds inflated(int r) const { return empty() ? *this : Bounds{x0 - r, y0 - r, x1 + r, y1 + r}; }
};

/// Λ_N = {0..N-1}^2.
struct LatticeGeom {
    int side = 1;
    explicit LatticeGeom(int n) : side(n) {
        if (n < 1) throw ParamError("LatticeGeom: side must be >= 1");
    }
    bool contains(Site s) const { return s.x >= 0 && s.x < side && s.y >= 0 && s.y < side; }
    Bounds bounds() const { return {0, 0, side - 1, side - 1}; }
};

/// A finite set of lattice sites.  Stored as a sorted coordinate list plus a
/// bitmap over the bounding box so membership queries are O(1).
class Region {
  public:
    Region() = default;
    explicit Region(std::vector<Site> sites);
    static Region rectangle(int x0, int y0, int w, int h);

    bool empty() const { return sites_.empty(); }
    size_t size() const { return sites_.size(); }
    const std::vector<Site>& sites() const& { return sites_; }
    // keeps range-for over `make_region().sites()` safe: the vector is moved
    // out of the temporary instead of dangling behind it
    std::vector<Site> sites() && { return std::move(sites_); }
    const Bounds& bounds() const& { return bbox_; }
    Bounds bounds() && { return bbox_; }

    bool contains(Site s) const {
        if (!bbox_.contains(s)) return false;
        return mask_(s.x - bbox_.x0, s.y - bbox_.y0) != 0;
    }
    bool contains(int x, int y) const { return contains(Site{x, y}); }

    Region unite(const Region& o) const;
    Region intersect(const Region& o) const;
    Region subtract(const Region& o) const;
    Region intersect(const LatticeGeom& ambient) const;

    bool operator==(const Region& o) const { return sites_ == o.sites_; }

    /// Sites of this region at Euclidean distance <= 1 from the complement.
    Region inner_boundary() const;
    /// Complement sites at Euclidean distance <= 1 from this region.  Throws
    /// DomainError for the full ambient square with `ambient == nullptr`
    /// semantics handled by the caller; here the result is always finite.
    Region outer_boundary() const;

    /// Chebyshev (ℓ∞) distance transform on `bounds().inflated(pad)`:
    /// grid value = min ℓ∞ distance to the region (0 on the region itself).
    GridI chebyshev_distance(int pad) const;
    /// Euclidean-squared distance transform on the inflated bounding box.
    GridI euclidean_dist2(int pad) const;

    /// Minimum ℓ∞ distance from `s` to the region (large value if empty).
    int chebyshev_dist_to(Site s) const;

  private:
    std::vector<Site> sites_;
    Bounds bbox_;
    GridB mask_;
    void rebuild();
};

/// Connected components of a set of sites under 8-connectivity (two sites are
/// adjacent iff their closed unit boxes intersect).
std::vector<Region> connected_components(const Region& r);

/// Components of the complement.  `ambient` bounds the world; when absent the
/// lattice is treated as infinite and the exterior is the unique unbounded
/// component.  Complement connectivity is 4-connectivity, matching
/// connectivity of the open complement of the closed-box union.
struct ComplementParts {
    Region exterior;
    std::vector<Region> interiors;
};
ComplementParts decompose_complement(const Region& r, const std::optional<LatticeGeom>& ambient = std::nullopt);

/// Union of all interior components.
Region interior_fill(const Region& r);

/// Blocks Q_{L0}(r), r ∈ L0·Z², whose ℓ∞ site distance to `region` is < radius,
/// together with every block meeting the region.  Result is L0-measurable.
Region thicken(const Region& region, int L0, int radius);

/// cl(A) = thicken(A, L, L) ∪ Int(A).
Region closed_hull(const Region& region, int L);

enum class BoundarySide { inner, outer };
Region boundary(const Region& r, BoundarySide side);

/// Grid of L0-blocks anchored on L0·Z².
struct BlockGrid {
    int block_side = 1;
    explicit BlockGrid(int L0) : block_side(L0) {
        if (L0 < 1) throw ParamError("BlockGrid: block side must be >= 1");
    }
    /// Anchor of the block containing `s`.
    Site anchor_of(Site s) const {
        auto fl = [this](int v) { return v >= 0 ? (v / block_side) * block_side : -(((-v - 1) / block_side) + 1) * block_side; };
        return {fl(s.x), fl(s.y)};
    }
    Region block(Site anchor) const { return Region::rectangle(anchor.x, anchor.y, block_side, block_side); }
    /// Anchors of all blocks meeting `r`.
    std::vector<Site> covering_anchors(const Region& r) const;
    /// Anchors of all blocks fully inside `r`.
    std::vector<Site> contained_anchors(const Region& r) const;
};

/// Connected components of a set of same-grid blocks, under closed-box
/// adjacency of the blocks (8-connectivity on the block grid).  Returns the
/// component block-anchor lists.
std::vector<std::vector<Site>> block_components(const std::vector<Site>& anchors, int L0);

/// Region built from a list of block anchors.
Region blocks_region(const std::vector<Site>& anchors, int L0);

/// JSON array of [x, y] pairs.
std::string to_json(const Region& r);
/// Block-set form: {"block_side": L0, "anchors": [[x, y], ...]}.
std::string blocks_to_json(const std::vector<Site>& anchors, int L0);

} // namespace rfxy::geom
