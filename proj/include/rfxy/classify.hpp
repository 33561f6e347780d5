#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rfxy/field.hpp"
#include "rfxy/geom.hpp"
#include "rfxy/params.hpp"

namespace rfxy::classify {

using geom::LatticeGeom;
using geom::Region;
using geom::Site;
using spin::ScalarField;

/// Both resolvent fields of one square, driven by the global quenched alpha.
struct BoxFields {
    field::FieldSample d, n; // g and m anchored at the box corner
    double alpha_inf = 0.0;
};

/// Computes and caches per-box field samples for a fixed quenched alpha.
/// Read paths are thread-safe; the cache is shared.
class FieldProvider {
  public:
    FieldProvider(GridD alpha, double epsilon, double lambda);

    int ambient_side() const { return alpha_.nx(); }
    double epsilon() const { return epsilon_; }
    double lambda() const { return lambda_; }
    const GridD& alpha() const { return alpha_; }
    double alpha_at(Site s) const { return alpha_(s.x, s.y); }

    bool box_inside(Site anchor, int side) const {
        return anchor.x >= 0 && anchor.y >= 0 && anchor.x + side <= alpha_.nx() && anchor.y + side <= alpha_.ny();
    }
    /// Field samples for [anchor, anchor+side)^2; throws DomainError if the
    /// box leaves the alpha support.
    std::shared_ptr<const BoxFields> box(Site anchor, int side) const;

  private:
    GridD alpha_;
    double epsilon_, lambda_;
    mutable std::mutex mutex_;
    mutable std::map<std::tuple<int, int, int>, std::shared_ptr<const BoxFields>> cache_;
};

/// The A_Q event with vacuous-truth semantics: quantifiers over core sites
/// (dist to the outer boundary >= L0^{3/4}) and integer radii in
/// [ceil(L0^{1/2}), floor(L0^{3/4})]; an empty range means the event holds.
bool a_event_holds(const GridD& m, double epsilon, double A, LogBase base);

/// Public operation form: rejects scales below 16, where the core-site set is
/// empty and the event carries no information.
bool check_A_event(const field::FieldSample& fs, double epsilon, double A, LogBase base);

struct BoxReport {
    bool c1 = false, c2 = false, c3 = false, c4 = false, c5 = false, c6 = false;
    bool xi = false; // clean iff all six hold on every overlapping Q'
    int squares_checked = 0;
    // worst-case measured statistics over the overlapping squares
    double g_inf = 0, grad_inf = 0, grad2_mean = 0, alpha_inf = 0, energy_dn_gap = 0;
};

/// Anchors of the squares in Q*_{L0} (all four half-shift classes) that
/// intersect the L0-box at `anchor` and fit inside the ambient lattice.
std::vector<Site> overlapping_squares(const FieldProvider& f, Site anchor, int L0);

/// Clean/dirty verdict for the L0-box at `anchor`.
BoxReport classify_box(const FieldProvider& f, Site anchor, int L0, const CleanConstants& cc, const ModelParams& p);

struct FFunctions {
    double F = 0, F_grad = 0, F_inf = 0;
};
FFunctions f_functions(const FieldProvider& f, Site anchor, int L0);

struct ControlledReport {
    bool r0 = false, r1 = false, r2 = false, r3 = false;
    bool controlled = false;
    int boxes = 0, dirty_boxes = 0;
};

/// (R0)-(R3) for an L0-measurable, bounded, connected Y.
ControlledReport controlled(const Region& Y, int L0, const FieldProvider& f, const CleanConstants& cc,
                            const ModelParams& p);

struct RegionReport {
    ControlledReport half_ell, ell, L16;
    bool regular = false;
};

/// Y is regular when δ_L(Y) is controlled at scales { ell/2, ell, L/16 }
/// (each clamped to >= 1).
RegionReport regular(const Region& Y, const FieldProvider& f, const CleanConstants& cc, const ModelParams& p,
                     const LatticeGeom& dom);

struct DirtyRegion {
    Region region;
    bool complete = true; // false when a component hit the size budget
    int components = 0;
};

/// Budgeted approximation of the dirty region: grow connected L-measurable
/// components around non-regular blocks and take the union of closed hulls.
DirtyRegion dirty_region(const LatticeGeom& dom, const FieldProvider& f, const CleanConstants& cc,
                         const ModelParams& p, int budget_blocks);

} // namespace rfxy::classify
