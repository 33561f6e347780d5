#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "rfxy/grid.hpp"
#include "rfxy/params.hpp"
#include "rfxy/spin.hpp"

namespace rfxy::field {

using geom::Site;
using spin::ScalarField;

/// i.i.d. standard normals on a square, regenerable bit-identically from
/// (seed, site).
struct RandomField {
    GridD alpha;
    uint64_t seed = 0;
    std::string generator = "ctr-splitmix64-boxmuller";
};

RandomField sample_alpha(uint64_t seed, int l);

enum class Bc { D, N };

/// Spec of a massive resolvent field g = eps (-Δ^bc + λ)^{-1} α on Q_l.
struct ResolventSpec {
    Bc bc = Bc::D;
    int side = 8;
    double lambda = 1.0;
    double epsilon = 1.0;
};

/// 1D orthonormal eigenbasis of the discrete Laplacian on a segment.
/// Dirichlet: v_j(x) = sqrt(2/(l+1)) sin(pi (j+1)(x+1)/(l+1)), zeta = 4 sin^2(pi (j+1)/(2(l+1))).
/// Neumann:   v_0 = sqrt(1/l), v_j(x) = sqrt(2/l) cos(pi j (x+1/2)/l), zeta = 4 sin^2(pi j/(2l)).
struct Basis1D {
    int l = 0;
    Bc bc = Bc::D;
    std::vector<double> V;     // V[j*l + x] = v_j(x)
    std::vector<double> zeta;  // per mode j
    std::vector<double> k;     // momentum per mode j
};

/// Shared per-(bc, side) basis table; computed once, read-only afterwards.
const Basis1D& basis_table(Bc bc, int l);

/// Forward transform: coefficients a_{j1 j2} = <v_{j1} ⊗ v_{j2}, f>.
GridD to_modes(Bc bc, const GridD& f);
/// Inverse transform.
GridD from_modes(Bc bc, const GridD& a);

struct FieldSample {
    ScalarField g;       // field values on the box
    ScalarField m;       // local masses m_x
    ResolventSpec spec;
    uint64_t seed = 0;   // seed of the source RandomField (0 when externally supplied)
    double residual = 0; // max-norm residual of (-Δ+λ)g = eps α
};

/// Solve (-Δ^bc + λ) g = eps α by separable eigenbasis transforms, and attach
/// the local masses.  The Dirichlet m includes the zero-extension boundary
/// edges; the Neumann m sums internal neighbors only.
FieldSample resolvent_apply(const ResolventSpec& spec, const RandomField& alpha);
FieldSample resolvent_apply_grid(const ResolventSpec& spec, const GridD& alpha, uint64_t seed = 0);

/// (-Δ^bc + λ) f evaluated by the direct stencil.
GridD apply_operator(const ResolventSpec& spec, const GridD& f);

struct EigenPair {
    double kx, ky, zeta;
    int j1, j2;
    GridD vec;
};
std::vector<EigenPair> eigen_pairs(const ResolventSpec& spec);

/// Momentum-space annuli A_s, s = 0 .. ceil(log2(l+1)).  Bin s holds
/// pi/2^{s+1} <= |k| < pi/2^s, with everything above pi/2 in s = 0 and the
/// Neumann zero mode in the last bin.
int annulus_count(int l);
int annulus_of(double kx, double ky, int l);

/// One annulus block of eps^{-1} g:  sum over modes in A_s of
/// a_k v_k(x) / (zeta_k + lambda).  Summing over all s reproduces eps^{-1} g.
GridD annulus_project(const ResolventSpec& spec, const GridD& alpha, int s);

/// All annulus components at one site, sharing a single forward transform.
std::vector<double> annulus_values_at(const ResolventSpec& spec, const GridD& alpha, Site x);

/// Var(gbar_{x, A_s}) as the exact spectral sum.
double exact_annulus_variance(const ResolventSpec& spec, int s, Site x);

/// Var(gbar_{x, A_s} - gbar_{y, A_s}).
double pair_increment_variance(const ResolventSpec& spec, int s, Site x, Site y);

/// zetabar_2^2 = ∫_{[0,pi]^2} (|k|^2 + λ)^{-2} dk, adaptive to rel. 1e-8.
double zeta_bar_sq(double lambda);

/// Energy of a grid with zero extension across the box boundary (= <f, -Δ^D f>).
double energy_zero_bc(const GridD& f);
/// Energy over internal edges only (= <f, -Δ^N f>).
double energy_internal(const GridD& f);

/// ΔE^{D,N} = E(g^D | 0) - E(g^N) for the two fields driven by the same alpha.
double energy_diff_DN(const GridD& alpha, int l, double lambda, double epsilon);
/// Its exact expectation, eps^2 [Σ_D - Σ_N] zeta/(zeta+λ)^2.
double expected_energy_diff_DN(int l, double lambda, double epsilon);

struct TailRow {
    double M = 0;
    long count = 0;
    long total = 0;
    double p_hat = 0, ci_lo = 0, ci_hi = 0;
};
/// Empirical P(||g||_inf >= M eps zetabar_2) with Wilson 95% intervals.
std::vector<TailRow> sup_tail_experiment(const ResolventSpec& spec, const std::vector<double>& Ms, int samples,
                                         uint64_t seed);

} // namespace rfxy::field
