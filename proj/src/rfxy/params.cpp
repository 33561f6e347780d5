#include "rfxy/params.hpp"

#include <cmath>
#include <sstream>

namespace rfxy {

int scale_ell(double eps, double s, LogBase base) {
    double target = std::pow(logmag(eps, base), -0.5 - s) / eps;
    int k = static_cast<int>(std::floor(std::log2(target)));
    return 1 << std::max(k, 0);
}

int scale_L(double eps, double s, LogBase base) {
    double target = std::pow(logmag(eps, base), -0.5 + s) / eps;
    int k = static_cast<int>(std::ceil(std::log2(target)));
    return 1 << std::max(k, 0);
}

void ModelParams::derive_scales() {
    if (!(epsilon > 0.0) || epsilon >= 1.0) throw ParamError("ModelParams: epsilon must lie in (0, 1)");
    ell = scale_ell(epsilon, s, log_base);
    L = scale_L(epsilon, s, log_base);
    if (L <= ell) L = 2 * ell;
    lambda = epsilon * epsilon * std::pow(logeps(), 1.0 + eta_lambda);
}

ModelParams ModelParams::from_epsilon(double eps, double beta) {
    ModelParams p;
    p.epsilon = eps;
    p.beta = beta;
    p.derive_scales();
    return p;
}

namespace {
bool is_pow2(int v) { return v >= 1 && (v & (v - 1)) == 0; }
}

std::vector<std::string> validate_params(const ModelParams& p) {
    std::vector<std::string> out;
    auto bad = [&out](const std::string& msg) { out.push_back(msg); };

    if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) bad("epsilon not in (0, 1)");
    if (!(p.beta > 0.0)) bad("beta not > 0");
    if (!(p.s > 0.0 && p.s < 1.0 / 32.0)) bad("s not in (0, 1/32)");
    if (!(p.eta_lambda > 2.0 * p.s && p.eta_lambda < 1.0 / 8.0)) bad("eta_lambda not in (2s, 1/8)");
    if (!(p.eta > 0.0 && p.eta < p.eta_lambda / 2.0)) bad("eta not in (0, eta_lambda/2)");
    if (!(p.chi > 0.0 && p.chi < 1.0 / 16.0)) bad("chi not in (0, 1/16)");
    if (!(p.zeta > 0.0 && p.zeta < 1.0 / 16.0)) bad("zeta not in (0, 1/16)");
    if (p.rho != 1.25) bad("rho must equal 5/4");
    if (!(p.xi > 0.0 && p.xi < 1.0)) bad("xi not in (0, 1)");
    if (!is_pow2(p.ell)) bad("ell is not a power of two");
    if (!is_pow2(p.L)) bad("L is not a power of two");
    if (!(p.ell < p.L)) bad("ell must be < L");

    if (p.epsilon > 0.0 && p.epsilon < 1.0) {
        int ell_f = scale_ell(p.epsilon, p.s, p.log_base);
        int L_f = scale_L(p.epsilon, p.s, p.log_base);
        if (L_f <= ell_f) L_f = 2 * ell_f;
        if (p.ell != ell_f) {
            std::ostringstream os;
            os << "ell = " << p.ell << " differs from the floor formula value " << ell_f;
            bad(os.str());
        }
        if (p.L != L_f) {
            std::ostringstream os;
            os << "L = " << p.L << " differs from the ceil formula value " << L_f;
            bad(os.str());
        }
        double lam = p.epsilon * p.epsilon * std::pow(p.logeps(), 1.0 + p.eta_lambda);
        if (std::abs(p.lambda - lam) > 1e-12 * std::max(1.0, lam)) bad("lambda differs from eps^2 |log eps|^(1+eta_lambda)");
    }
    return out;
}

} // namespace rfxy
