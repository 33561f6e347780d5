#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "rfxy/geom.hpp"
#include "rfxy/grid.hpp"
#include "rfxy/params.hpp"

namespace rfxy::spin {

using geom::LatticeGeom;
using geom::Region;
using geom::Site;

using Vec2 = std::array<double, 2>;

/// Wrap to the representative in (-pi, pi].
inline double wrap_angle(double t) {
    t = std::remainder(t, 2.0 * M_PI);
    if (t <= -M_PI) t += 2.0 * M_PI;
    return t;
}

inline Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Squared Euclidean distance of two unit spins given by angles,
/// 2 - 2 cos(a - b).
inline double edge_energy(double a, double b) { return 2.0 - 2.0 * std::cos(a - b); }

/// A scalar field with an anchored origin, e.g. alpha on Λ_N or a resolvent
/// field on a box.
struct ScalarField {
    GridD v;
    Site origin{0, 0};

    bool covers(Site s) const {
        return s.x >= origin.x && s.y >= origin.y && s.x < origin.x + v.nx() && s.y < origin.y + v.ny();
    }
    double at(Site s) const {
        if (!covers(s)) throw DomainError("ScalarField: site outside field support");
        return v(s.x - origin.x, s.y - origin.y);
    }
    double at_or(Site s, double fallback) const { return covers(s) ? v(s.x - origin.x, s.y - origin.y) : fallback; }
};

/// Angle per site of a region; the spin at x is (cos theta_x, sin theta_x).
class SpinConfig {
  public:
    SpinConfig() = default;
    explicit SpinConfig(Region domain, double angle = 0.0);

    const Region& domain() const { return domain_; }

    bool has(Site s) const { return domain_.contains(s); }
    double theta(Site s) const {
        if (!has(s)) throw DomainError("SpinConfig: no angle at requested site");
        return theta_(s.x - origin_.x, s.y - origin_.y);
    }
    void set_theta(Site s, double t) {
        if (!has(s)) throw DomainError("SpinConfig: cannot set angle outside domain");
        theta_(s.x - origin_.x, s.y - origin_.y) = wrap_angle(t);
    }
    Vec2 spin(Site s) const { return unit(theta(s)); }

    /// Reflect the spin at s across the e2 axis (negate the e1 component).
    void reflect_e1(Site s) { set_theta(s, M_PI - theta(s)); }

    bool operator==(const SpinConfig& o) const { return domain_ == o.domain_ && theta_ == o.theta_; }

  private:
    Region domain_;
    Site origin_{0, 0};
    GridD theta_;
};

enum class BcKind { free, constant_e1, explicit_map };

/// Boundary condition: free, e1 everywhere, or an explicit partial map from
/// boundary sites to unit spins (stored as angles).
struct BoundaryCondition {
    BcKind kind = BcKind::free;
    std::map<std::pair<int, int>, double> angles; // explicit values

    static BoundaryCondition free_bc() { return {}; }
    static BoundaryCondition e1() { return {BcKind::constant_e1, {}}; }
    static BoundaryCondition explicit_bc() { return {BcKind::explicit_map, {}}; }

    void set(Site s, double angle) { angles[{s.x, s.y}] = angle; }

    /// Angle at a boundary site, or nullopt when the site is free.
    std::optional<double> angle_at(Site s) const {
        switch (kind) {
            case BcKind::free: return std::nullopt;
            case BcKind::constant_e1: return 0.0;
            case BcKind::explicit_map: {
                auto it = angles.find({s.x, s.y});
                if (it == angles.end()) return std::nullopt;
                return it->second;
            }
        }
        return std::nullopt;
    }
};

/// The `ext` boundary condition of a region inside Λ_N: e1 on the part of the
/// outer boundary leaving Λ_N, free otherwise.
BoundaryCondition ext_boundary(const Region& r, const LatticeGeom& ambient);

/// Boundary condition that copies another configuration's angles on the outer
/// boundary of `r` (where available).
BoundaryCondition frozen_boundary(const Region& r, const SpinConfig& sigma);

/// Dirichlet energy over internal nearest-neighbor edges of R.
double dirichlet_energy(const SpinConfig& sigma, const Region& R);

/// Dirichlet energy over all edges meeting R, with sigma extended by tau on
/// the outer boundary; free boundary values contribute nothing.
double dirichlet_energy_bc(const SpinConfig& sigma, const Region& R, const BoundaryCondition& tau);

/// -H_R(sigma | tau): minus the Hamiltonian with random field alpha and field
/// strength eps.  The boundary term is the mismatch penalty -1/2 sum |sigma - tau|^2.
double hamiltonian(const SpinConfig& sigma, const Region& R, const BoundaryCondition& tau, const ScalarField& alpha,
                   double eps);

/// Block magnetization |Q|^{-1} sum of spins over Q_L(z).
Vec2 block_magnetization(const SpinConfig& sigma, Site anchor, int L);

/// sigma(Q) for an arbitrary region.
Vec2 block_average(const SpinConfig& sigma, const Region& Q);

/// Binary format: 8-byte header (uint32 N, uint32 version), then N*N
/// little-endian f64 angles in row-major order.  Square domains only.
void save_binary(const SpinConfig& sigma, const std::string& path);
SpinConfig load_binary(const std::string& path);

std::string to_json(const SpinConfig& sigma);

} // namespace rfxy::spin
