#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rfxy/errors.hpp"

namespace rfxy {

enum class LogBase { natural, base2 };

/// |log x| in the configured base.  Every |log(·)| appearing in a threshold
/// or scale formula goes through this switch.
inline double logmag(double x, LogBase base) {
    double v = std::abs(std::log(x));
    return base == LogBase::natural ? v : v / std::log(2.0);
}

/// Model constants and the derived working scales.
///
/// The canonical construction ties the scales to epsilon:
///   log2(ell) = floor(log2(eps^-1 |log eps|^(-1/2 - s)))
///   log2(L)   = ceil (log2(eps^-1 |log eps|^(-1/2 + s)))
///   lambda    = eps^2 |log eps|^(1 + eta_lambda)
/// Tests may also construct params with explicit scales.
struct ModelParams {
    double epsilon = 0.1;
    double beta = 1.0;
    double s = 1.0 / 64.0;
    double eta_lambda = 1.0 / 16.0;
    double eta = 1.0 / 40.0;
    double chi = 1.0 / 32.0;
    double zeta = 1.0 / 32.0;
    double xi = 0.1;
    double rho = 5.0 / 4.0;
    LogBase log_base = LogBase::natural;

    int ell = 4;
    int L = 8;
    double lambda = 0.0;

    double logeps() const { return logmag(epsilon, log_base); }
    double logm(double x) const { return logmag(x, log_base); }

    static ModelParams from_epsilon(double eps, double beta = 1.0);

    /// Recompute ell, L, lambda from the current constants.
    void derive_scales();

    /// psi^0 box-energy threshold: eps^2 |log eps|^(1+chi) ell^2.
    double psi0_threshold() const { return epsilon * epsilon * std::pow(logeps(), 1.0 + chi) * ell * ell; }
};

int scale_ell(double eps, double s, LogBase base);
int scale_L(double eps, double s, LogBase base);

/// Thresholds for the clean-box conditions (C1)-(C6).  The paper fixes none
/// of these numerically; defaults come from tools/calibrate (see README).
struct CleanConstants {
    double A = 0.4;
    double C_big = 1.55;
    double c_small = 0.001;
    double eta = 1.0 / 40.0;
    /// Slack multiplier for the two conditions printed without a constant,
    /// (C2) and (C6); calibrated alongside the rest.
    double C_tail = 9.0;
};

/// Checks every parameter window; returns one message per violation.
std::vector<std::string> validate_params(const ModelParams& p);

} // namespace rfxy
