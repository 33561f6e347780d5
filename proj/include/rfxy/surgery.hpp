#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfxy/classify.hpp"
#include "rfxy/coarse.hpp"
#include "rfxy/field.hpp"
#include "rfxy/spin.hpp"

namespace rfxy::surgery {

using geom::LatticeGeom;
using geom::Region;
using geom::Site;
using spin::ScalarField;
using spin::SpinConfig;

// ---------------------------------------------------------------------------
// Change of variables  phi = theta - cos(theta) g
// ---------------------------------------------------------------------------

inline double cov_forward(double theta, double g) { return theta - std::cos(theta) * g; }

/// Inverts theta - cos(theta) g = phi by safeguarded Newton; requires |g| < 1
/// (the derivative 1 + sin(theta) g stays positive).
double cov_inverse(double phi, double g);

GridD cov_forward_grid(const GridD& theta, const GridD& g);
GridD cov_inverse_grid(const GridD& phi, const GridD& g);

// ---------------------------------------------------------------------------
// The K functional and its maximizer
// ---------------------------------------------------------------------------

/// Region, masses and boundary angles for -K_R(phi | tau).  Boundary edges
/// towards sites missing from `tau` contribute nothing (free boundary).
struct KSpec {
    Region region;
    ScalarField m;
    std::map<std::pair<int, int>, double> tau;

    void set_tau(Site s, double angle) { tau[{s.x, s.y}] = angle; }
    std::optional<double> tau_at(Site s) const {
        auto it = tau.find({s.x, s.y});
        if (it == tau.end()) return std::nullopt;
        return it->second;
    }
    /// Adds tau = 0 (spin e1) on outer-boundary sites beyond the ambient
    /// lattice: the Lambda_N edge penalty written as boundary edges.
    void add_ambient_penalty(const LatticeGeom& dom);
};

/// -K_R(phi|tau) = sum_{e cap R != 0} [cos(grad_e phi) - 1] + 1/4 sum m cos^2 phi.
double k_energy(const ScalarField& phi, const KSpec& ks);

/// The change-of-variables decomposition -H = -K + B + Err, with the driving
/// alpha recovered from g through eps alpha = (-Delta^D_R + lambda) g and the
/// boundary term B returned separately for auditing.
struct CovAudit {
    double minus_h = 0, minus_k = 0, boundary_term = 0, err = 0;
};
CovAudit cov_audit(const SpinConfig& sigma, const Region& R, const spin::BoundaryCondition& tau,
                   const ScalarField& g, double lambda, double eps);

struct MaximizeResult {
    ScalarField nu;
    double grad_inf = 0;   // final gradient sup-norm
    double value = 0;      // -K at the maximizer
    int newton_iters = 0;
    bool multi_start_agreed = true;
};

/// Unique maximizer of -K_R(.|tau) for ||tau||_inf <= pi/5: harmonic-extension
/// start, clamp into [-pi/5, pi/5], damped Newton on the concave window.
MaximizeResult maximize_k(const KSpec& ks, bool witness_uniqueness = false);

struct EllipticOp {
    // conductances keyed by the oriented edge (site, axis): axis 0 = +x, 1 = +y
    std::map<std::tuple<int, int, int>, double> C;
    std::map<std::pair<int, int>, double> V;
};

/// C_xy = sin(nu_x - nu_y)/(nu_x - nu_y) on internal edges, V_x =
/// sin(nu_x)cos(nu_x) m_x / (2 nu_x); removable singularities by series.
EllipticOp assemble_elliptic(const ScalarField& nu, const KSpec& ks);

/// || sum_y C_xy (nu_x - nu_y) + V_x nu_x - boundary flux ||_inf with the
/// maximizer's boundary data; stationarity of -K makes this the gradient.
double elliptic_residual(const ScalarField& nu, const EllipticOp& op, const KSpec& ks);

/// Dense Hessian of K (positive semidefinite inside the pi/5 window) in the
/// site order of ks.region; used by the convexity certificate.
std::vector<double> k_hessian_dense(const ScalarField& nu, const KSpec& ks);

// ---------------------------------------------------------------------------
// Contour surgery
// ---------------------------------------------------------------------------

struct TraceEvent {
    std::string step;
    double value = 0, budget = 0;
    bool hard = false, ok = true;
};

struct SurgeryTrace {
    std::vector<TraceEvent> events;
    void log(const std::string& step, double value, double budget, bool hard = false, bool ok = true) {
        events.push_back({step, value, budget, hard, ok});
    }
    std::string to_json() const;
};

/// Everything the surgery steps need about one contour.
struct SurgeryContext {
    coarse::Contour contour;
    coarse::ContourRegions regions;
    const classify::FieldProvider* provider = nullptr;
    CleanConstants consts;
    ModelParams params;
    LatticeGeom dom{1};
    SurgeryTrace trace;

    double eps() const { return params.epsilon; }
    /// Budget eps^2 |log eps|^{5/8} |Gamma| used by the soft bounds.
    double soft_budget() const;
};

SurgeryContext make_context(const coarse::Contour& c, const GridI& Psi, const classify::FieldProvider& provider,
                            const CleanConstants& cc, const ModelParams& p, const LatticeGeom& dom);

/// Reference configuration sigma_bar on delta_bar(Gamma): theta = g^{lambda,D}
/// per clean ell/2-box, e1 on dirty boxes.  Logs the Lemma-5.1 style
/// bookkeeping sum{Max_Q} + H(sigma_bar) against the soft budget.
SpinConfig reference_config(SurgeryContext& ctx);

/// Smallest superset of R whose component boundaries carry a constant sign
/// `sign` with |sigma . e1| >= 9/10, grown by monotone closure.  Throws
/// SurgeryError when the growth leaves {dist(., R) <= 3 ell}.
Region defect_hull(const Region& R, const SpinConfig& sigma, int sign, const SurgeryContext& ctx);

/// Modification 1: reflect wrong-halfplane spins on the defect hulls of the
/// middle strips.  -H never decreases (exact).
SpinConfig mod1_flip(const SpinConfig& sigma, SurgeryContext& ctx);

/// Modification 2: taper spins near dirty boxes onto +-e1.
SpinConfig mod2_taper(const SpinConfig& sigma1, SurgeryContext& ctx);

/// Modification 3: sequential per-box relaxation through the change of
/// variables; asserts the per-step Dirichlet inequality exactly.
SpinConfig mod3_relax(const SpinConfig& sigma2, SurgeryContext& ctx);

struct Mod4Result {
    SpinConfig sigma_c;     // sigma^C, built from sigma3
    SpinConfig sigma_bar_c; // sigma_bar^C, built from sigma_bar
    Region layer;           // L_0, the selected good layer
    Region layer_mid;       // L_mid
    int layer_index = -1;
};

/// Modification 4: pick the first good layer of the middle strip and force
/// both configurations to +-e1 on its middle band.
Mod4Result mod4_layers(const SpinConfig& sigma3, const SpinConfig& sigma_bar, SurgeryContext& ctx);

/// Glue: sigma_bar^C on Gamma~, sigma^C outside with prescribed reflections of
/// the opposite-sign interior components.
SpinConfig glue_S(const SpinConfig& sigma, const Mod4Result& m4, SurgeryContext& ctx);

struct GapReport {
    double gap = 0;
    double normalized_gap = 0;
    double minus_h_sigma = 0, minus_h_s = 0;
    SpinConfig S;
};

/// Full pipeline: sigma -> mod1 -> mod2 -> mod3 -> mod4 -> glue, then
/// gap = -H(S|e1) + H(sigma|e1) over Lambda_N.
GapReport energy_gap(const SpinConfig& sigma, SurgeryContext& ctx);

// ---------------------------------------------------------------------------
// One-square variational probe
// ---------------------------------------------------------------------------

struct ProbeResult {
    double quadratic_prediction = 0; // (eps^2/2) cos^2(psi) <alpha^, (-Delta^N)^{-1} alpha^>
    double numeric_max = 0;          // projected ascent over theta = psi + theta^, |theta^| <= 0.3
    double difference = 0;
};

/// Both sides evaluated with the centered field alpha^ (the mean mode is the
/// discarded O(eps |sum alpha|) term of the heuristic).
ProbeResult variational_probe(int side, double psi, const GridD& alpha, double eps);

} // namespace rfxy::surgery
