#pragma once

#include <map>
#include <vector>

#include "rfxy/geom.hpp"
#include "rfxy/params.hpp"
#include "rfxy/spin.hpp"

namespace rfxy::coarse {

using geom::LatticeGeom;
using geom::Region;
using geom::Site;
using spin::SpinConfig;

/// The three-valued phase grids.  psi0 takes values {0,1}; psi1, psi and Psi
/// take {-1,0,+1}.  All grids live on the full ambient lattice.
struct PhaseField {
    GridI psi0, psi1, psi, Psi;
    ModelParams params;
};

/// psi^0_z = 1 iff every half-grid square Q_ell(r), r in (ell/2)Z^2 with
/// |z - r|_2 <= 2 ell that fits inside the domain has Dirichlet energy at most
/// eps^2 |log eps|^{1+chi} ell^2.  Prefix sums make this O(domain).
GridI compute_psi0(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom);

/// psi^{1,xi}: +1 / -1 when every nearby square average has e1 component in
/// [1-xi, 1] resp. [-1, -1+xi]; 0 otherwise.
GridI compute_psi1(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom);

GridI psi_product(const GridI& psi0, const GridI& psi1);

/// Coarse-graining on scale L: per L-block, +-1 when psi is identically +-1 on
/// every in-domain block within 2L of it, else 0.
GridI compute_Psi(const GridI& psi, const ModelParams& p, const LatticeGeom& dom);

struct Contour {
    Region support;                              // sp(Γ), L-measurable, connected
    std::vector<Site> anchors;                   // L-block anchors of the support
    std::map<std::pair<int, int>, int> labels;   // psi on δ_L(Γ)
    int sign = 0;                                // +1 / -1, or 0 when unsigned
    bool touches_boundary = false;               // support meets the ambient edge
    Region delta;                                // δ_L(Γ) ∩ Λ_N

    int label_at(Site s) const {
        auto it = labels.find({s.x, s.y});
        return it == labels.end() ? 0 : it->second;
    }
};

struct ContourSet {
    std::vector<Contour> contours;
};

/// Maximal 8-connected components of {Psi = 0} on the L-block grid, with psi
/// labels on the L-thickened neighborhood and a +- classification read off the
/// exterior labels.
ContourSet extract_contours(const GridI& Psi, const GridI& psi, const ModelParams& p, const LatticeGeom& dom);

/// Full pipeline: psi0/psi1/psi/Psi plus contour extraction.
PhaseField compute_phase_field(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom);
ContourSet contours_of(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom);

/// δ(Γ1) ∩ sp(Γ2) = ∅ and labels agree on δ(Γ1) ∩ δ(Γ2).
bool compatible(const Contour& a, const Contour& b);

/// Regions attached to a contour used by the boundary surgery.
struct ContourRegions {
    Region collar;          // 𝔠(Γ) = δ_L(Γ) ∩ sp(Γ)^c ∩ Λ_N
    Region collar_plus;     // 𝔠^+ = {z ∈ 𝔠 : Ψ_z = +1}
    Region collar_minus;    // 𝔠^-
    Region middle;          // 𝔐: collar sites at distance [L/8, 3L/8] from ∂^i sp(Γ)
    Region middle_plus;     // 𝔐^±
    Region middle_minus;
    Region M;               // union of L/16-blocks within distance 3 of 𝔐
    Region M_plus, M_minus; // M ∩ 𝔠^±
    Region delta_bar;       // δ̄(Γ) = thicken(Γ, L/2, L/2) ∩ Λ_N
    Region delta;           // δ_L(Γ) ∩ Λ_N
    Region delta_ext;       // δ_L(Γ) ∩ Ext(Γ)
    Region delta_int_plus;  // δ_L(Γ) ∩ Int(Γ) ∩ {ψ(Γ) = ±1}
    Region delta_int_minus;
};

ContourRegions contour_regions(const Contour& c, const GridI& Psi, const ModelParams& p, const LatticeGeom& dom);

/// Re-derive psi on δ_L(Γ) from sigma and check it agrees with the contour's
/// labels (σ ∈ X(Γ) up to the support-label convention).
bool config_has_contour(const SpinConfig& sigma, const Contour& c, const ModelParams& p, const LatticeGeom& dom);

std::string to_json(const ContourSet& cs);

} // namespace rfxy::coarse
