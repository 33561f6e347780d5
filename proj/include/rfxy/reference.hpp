#pragma once

// Serial reference implementations used as independent oracles by the tests
// and as the baseline side of the benchmark.  Everything here is written
// directly from the definitions (dense linear solves, double loops, full
// quantifier scans) with no shared code path into the optimized kernels.

#include <vector>

#include "rfxy/field.hpp"
#include "rfxy/geom.hpp"
#include "rfxy/grid.hpp"
#include "rfxy/params.hpp"
#include "rfxy/spin.hpp"

namespace rfxy::ref {

/// Dense LU solve of (-Δ^bc + λ) g = eps α on Q_l.
GridD dense_resolvent(const field::ResolventSpec& spec, const GridD& alpha);

/// Dense assembly of the operator matrix (row-major l^2 x l^2).
std::vector<double> dense_operator(const field::ResolventSpec& spec);

/// Dirichlet energy by plain edge enumeration.
double dirichlet_energy(const spin::SpinConfig& sigma, const geom::Region& R);

/// Midpoint-rule oracle for zeta_bar_sq on a graded tensor mesh
/// (substitution k = pi u^3 resolves the small-lambda peak).
double zeta_bar_sq_midpoint(double lambda, int points_per_axis);

/// psi^0 / psi^1 / Psi grids evaluated by the full definitional scan
/// (every anchor within the 2l halo, every block within the 2L halo).
GridI psi0_scan(const spin::SpinConfig& sigma, const ModelParams& p, const geom::LatticeGeom& dom);
GridI psi1_scan(const spin::SpinConfig& sigma, const ModelParams& p, const geom::LatticeGeom& dom);
GridI psi_product(const GridI& psi0, const GridI& psi1);
GridI Psi_scan(const GridI& psi, const ModelParams& p, const geom::LatticeGeom& dom);

/// A-event by brute-force disk sums.
bool a_event_scan(const GridD& m, double epsilon, double A, LogBase base);

} // namespace rfxy::ref
