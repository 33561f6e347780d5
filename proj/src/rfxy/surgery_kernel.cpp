#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <sstream>

#include "rfxy/rng.hpp"
#include "rfxy/surgery.hpp"

namespace rfxy::surgery {

double cov_inverse(double phi, double g) {
    if (std::abs(g) >= 1.0) throw ParamError("cov_inverse: requires |g| < 1");
    double t = phi; // derivative 1 + sin(t) g >= 1 - |g| > 0: monotone
    for (int it = 0; it < 100; ++it) {
        double f = t - std::cos(t) * g - phi;
        if (std::abs(f) <= 1e-13) return t;
        double d = 1.0 + std::sin(t) * g;
        double step = f / d;
        // safeguard: the root lies within |g| of phi
        double lo = phi - std::abs(g) - 1e-9, hi = phi + std::abs(g) + 1e-9;
        t = std::min(std::max(t - step, lo), hi);
    }
    double f = t - std::cos(t) * g - phi;
    if (std::abs(f) > 1e-12) throw NumericError("cov_inverse: Newton failed to converge");
    return t;
}

GridD cov_forward_grid(const GridD& theta, const GridD& g) {
    GridD out(theta.nx(), theta.ny());
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] = cov_forward(theta.raw()[i], g.raw()[i]);
    return out;
}

GridD cov_inverse_grid(const GridD& phi, const GridD& g) {
    GridD out(phi.nx(), phi.ny());
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] = cov_inverse(phi.raw()[i], g.raw()[i]);
    return out;
}

void KSpec::add_ambient_penalty(const LatticeGeom& dom) {
    for (auto s : region.outer_boundary().sites())
        if (!dom.contains(s)) set_tau(s, 0.0);
}

CovAudit cov_audit(const SpinConfig& sigma, const Region& R, const spin::BoundaryCondition& tau,
                   const ScalarField& g, double lambda, double eps) {
    auto g_at = [&](Site s) { return g.at_or(s, 0.0); }; // zero extension of the Dirichlet field

    // recover the driving alpha and the local masses from g
    auto b = R.bounds();
    GridD alpha_grid(b.width(), b.height(), 0.0), m_grid(b.width(), b.height(), 0.0);
    for (auto s : R.sites()) {
        double c = g_at(s), lap = lambda * c, mass = 0.0;
        for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
            Site n{s.x + d.x, s.y + d.y};
            double gn = R.contains(n) ? g_at(n) : 0.0;
            lap += c - gn;
            mass += (c - gn) * (c - gn);
        }
        alpha_grid(s.x - b.x0, s.y - b.y0) = lap / eps;
        m_grid(s.x - b.x0, s.y - b.y0) = mass;
    }
    ScalarField alpha{std::move(alpha_grid), {b.x0, b.y0}};

    CovAudit out;
    out.minus_h = spin::hamiltonian(sigma, R, tau, alpha, eps);

    KSpec ks;
    ks.region = R;
    ks.m = ScalarField{std::move(m_grid), {b.x0, b.y0}};
    GridD phi(b.width(), b.height(), 0.0);
    for (auto s : R.sites()) phi(s.x - b.x0, s.y - b.y0) = cov_forward(sigma.theta(s), g_at(s));
    for (auto s : R.outer_boundary().sites())
        if (auto a = tau.angle_at(s)) ks.set_tau(s, *a); // g vanishes there, so theta' = tau
    out.minus_k = k_energy(ScalarField{std::move(phi), {b.x0, b.y0}}, ks);

    for (auto s : R.inner_boundary().sites())
        for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (R.contains(n)) continue;
            if (auto a = tau.angle_at(n)) out.boundary_term += g_at(s) * std::sin(*a);
        }
    out.err = out.minus_h - out.minus_k - out.boundary_term;
    return out;
}

double k_energy(const ScalarField& phi, const KSpec& ks) {
    double acc = 0.0;
    for (auto s : ks.region.sites()) {
        double p = phi.at(s);
        for (auto d : {Site{1, 0}, Site{0, 1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (ks.region.contains(n)) acc += std::cos(p - phi.at(n)) - 1.0;
        }
        for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (ks.region.contains(n)) continue;
            if (auto t = ks.tau_at(n)) acc += std::cos(p - *t) - 1.0;
        }
        acc += 0.25 * ks.m.at(s) * std::cos(p) * std::cos(p);
    }
    return acc;
}

namespace {

struct KProblem {
    const KSpec& ks;
    std::vector<Site> sites;
    std::map<std::pair<int, int>, int> index;
    // per site: internal neighbor indices and boundary angles
    std::vector<std::vector<int>> nbr;
    std::vector<std::vector<double>> btau;
    std::vector<double> mass;

    explicit KProblem(const KSpec& spec) : ks(spec) {
        sites = spec.region.sites();
        for (size_t i = 0; i < sites.size(); ++i) index[{sites[i].x, sites[i].y}] = static_cast<int>(i);
        nbr.resize(sites.size());
        btau.resize(sites.size());
        mass.resize(sites.size());
        for (size_t i = 0; i < sites.size(); ++i) {
            mass[i] = spec.m.at(sites[i]);
            if (mass[i] < 0) throw ParamError("KSpec: masses must be nonnegative");
            for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
                Site n{sites[i].x + d.x, sites[i].y + d.y};
                auto it = index.find({n.x, n.y});
                if (spec.region.contains(n)) {
                    if (it != index.end()) nbr[i].push_back(it->second);
                } else if (auto t = spec.tau_at(n)) {
                    btau[i].push_back(*t);
                }
            }
        }
        // neighbor indices are discovered in site order; rebuild includes late ones
        for (size_t i = 0; i < sites.size(); ++i) {
            nbr[i].clear();
            for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
                Site n{sites[i].x + d.x, sites[i].y + d.y};
                auto it = index.find({n.x, n.y});
                if (it != index.end()) nbr[i].push_back(it->second);
            }
        }
    }

    double value(const std::vector<double>& v) const {
        double acc = 0.0;
        for (size_t i = 0; i < sites.size(); ++i) {
            for (int j : nbr[i])
                if (j > static_cast<int>(i)) acc += std::cos(v[i] - v[j]) - 1.0;
            for (double t : btau[i]) acc += std::cos(v[i] - t) - 1.0;
            acc += 0.25 * mass[i] * std::cos(v[i]) * std::cos(v[i]);
        }
        return acc;
    }

    void gradient(const std::vector<double>& v, std::vector<double>& g) const {
        g.assign(v.size(), 0.0);
        for (size_t i = 0; i < sites.size(); ++i) {
            double acc = -0.25 * mass[i] * std::sin(2.0 * v[i]);
            for (int j : nbr[i]) acc -= std::sin(v[i] - v[j]);
            for (double t : btau[i]) acc -= std::sin(v[i] - t);
            g[i] = acc;
        }
    }

    // Hessian of -K (negative semidefinite in the window)
    Eigen::SparseMatrix<double> hessian(const std::vector<double>& v) const {
        std::vector<Eigen::Triplet<double>> trip;
        for (size_t i = 0; i < sites.size(); ++i) {
            double diag = -0.5 * mass[i] * std::cos(2.0 * v[i]);
            for (int j : nbr[i]) {
                double c = std::cos(v[i] - v[j]);
                diag -= c;
                trip.emplace_back(static_cast<int>(i), j, c);
            }
            for (double t : btau[i]) diag -= std::cos(v[i] - t);
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
        }
        Eigen::SparseMatrix<double> H(static_cast<int>(sites.size()), static_cast<int>(sites.size()));
        H.setFromTriplets(trip.begin(), trip.end());
        return H;
    }

    std::vector<double> harmonic_init() const {
        // a few hundred Gauss-Seidel sweeps of the combinatorial Laplace
        // problem with the boundary data; plenty for a Newton starting point
        std::vector<double> v(sites.size(), 0.0);
        int sweeps = std::min<int>(400, 8 * static_cast<int>(std::sqrt(static_cast<double>(sites.size()))) + 50);
        for (int s = 0; s < sweeps; ++s)
            for (size_t i = 0; i < sites.size(); ++i) {
                double num = 0.0;
                int deg = 0;
                for (int j : nbr[i]) {
                    num += v[j];
                    ++deg;
                }
                for (double t : btau[i]) {
                    num += t;
                    ++deg;
                }
                if (deg > 0) v[i] = num / deg;
            }
        return v;
    }
};

constexpr double kWindow = M_PI / 5.0;

std::vector<double> solve_newton(const KProblem& prob, std::vector<double> v, double tol, int& iters) {
    // Projected Newton: the maximizer lies in [-pi/5, pi/5]^R where -K is
    // concave, so iterates are clamped back into the window after each step.
    const int n = static_cast<int>(v.size());
    auto clamp = [](double t) { return std::min(std::max(t, -kWindow), kWindow); };
    for (auto& t : v) t = clamp(t);
    std::vector<double> g(n), vn(n);
    double f = prob.value(v);
    iters = 0;
    for (int it = 0; it < 300; ++it) {
        prob.gradient(v, g);
        double gi = 0.0;
        for (double x : g) gi = std::max(gi, std::abs(x));
        if (gi <= tol) break;
        ++iters;
        Eigen::SparseMatrix<double> A = -prob.hessian(v); // SPD in the window
        for (int k = 0; k < n; ++k) A.coeffRef(k, k) += 1e-12;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(A);
        Eigen::VectorXd rhs(n);
        for (int k = 0; k < n; ++k) rhs[k] = g[k];
        Eigen::VectorXd step;
        if (chol.info() == Eigen::Success) {
            step = chol.solve(rhs);
        } else {
            step = rhs;
        }
        double slope = 0.0;
        for (int k = 0; k < n; ++k) slope += g[k] * step[k];
        if (slope <= 0.0) {
            for (int k = 0; k < n; ++k) step[k] = g[k];
            slope = 0.0;
            for (int k = 0; k < n; ++k) slope += g[k] * step[k];
        }
        // once the predicted gain falls below the value-evaluation noise the
        // line search cannot certify progress; the pure Newton step converges
        // quadratically from here
        if (slope <= 1e-12 * (1.0 + std::abs(f))) {
            for (int k = 0; k < n; ++k) v[k] = clamp(v[k] + step[k]);
            f = prob.value(v);
            continue;
        }
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 50; ++ls) {
            double progress = 0.0;
            for (int k = 0; k < n; ++k) {
                vn[k] = clamp(v[k] + t * step[k]);
                progress = std::max(progress, std::abs(vn[k] - v[k]));
            }
            if (progress == 0.0) break;
            double fn = prob.value(vn);
            if (fn > f) {
                v = vn;
                f = fn;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }
    return v;
}

ScalarField wrap_field(const KSpec& ks, const std::vector<double>& v, const std::vector<Site>& sites) {
    auto b = ks.region.bounds();
    GridD grid(std::max(b.width(), 1), std::max(b.height(), 1), 0.0);
    for (size_t i = 0; i < sites.size(); ++i) grid(sites[i].x - b.x0, sites[i].y - b.y0) = v[i];
    return ScalarField{std::move(grid), {b.x0, b.y0}};
}

} // namespace

MaximizeResult maximize_k(const KSpec& ks, bool witness_uniqueness) {
    for (auto& [site, t] : ks.tau)
        if (std::abs(t) > kWindow + 1e-12)
            throw ParamError("maximize_k: boundary angle exceeds pi/5");
    KProblem prob(ks);
    if (prob.sites.empty()) {
        MaximizeResult r;
        r.nu = ScalarField{GridD(1, 1, 0.0), {0, 0}};
        return r;
    }
    double msum = 0.0;
    for (double m : prob.mass) msum += m;
    double tol = 1e-10 * (1.0 + msum);

    int iters = 0;
    auto v = solve_newton(prob, prob.harmonic_init(), tol, iters);
    std::vector<double> g;
    prob.gradient(v, g);
    double gi = 0.0;
    for (double x : g) gi = std::max(gi, std::abs(x));
    if (gi > 1e-8 * (1.0 + msum)) {
        std::ostringstream os;
        os << "maximize_k: stationarity tolerance missed (grad " << gi << ", sites " << prob.sites.size()
           << ", mass sum " << msum << ")";
        throw NumericError(os.str());
    }

    MaximizeResult res;
    res.newton_iters = iters;
    res.grad_inf = gi;
    res.value = prob.value(v);
    if (witness_uniqueness) {
        rng::Stream rs(1234567);
        std::vector<double> zero(v.size(), 0.0), rand(v.size());
        for (auto& t : rand) t = rs.uniform(-kWindow, kWindow);
        for (auto start : {zero, rand}) {
            int it2 = 0;
            auto w = solve_newton(prob, start, tol, it2);
            for (size_t i = 0; i < v.size(); ++i)
                if (std::abs(w[i] - v[i]) > 1e-6) res.multi_start_agreed = false;
        }
    }
    res.nu = wrap_field(ks, v, prob.sites);
    return res;
}

namespace {

double sinc_ratio(double u) {
    if (std::abs(u) < 1e-4) return 1.0 - u * u / 6.0 + u * u * u * u / 120.0;
    return std::sin(u) / u;
}

double potential_ratio(double nu) {
    // sin(nu) cos(nu) / (2 nu) = sin(2 nu) / (4 nu)
    if (std::abs(nu) < 1e-4) {
        double n2 = nu * nu;
        return 0.5 - n2 / 3.0 + 2.0 * n2 * n2 / 15.0;
    }
    return std::sin(2.0 * nu) / (4.0 * nu);
}

} // namespace

EllipticOp assemble_elliptic(const ScalarField& nu, const KSpec& ks) {
    EllipticOp op;
    for (auto s : ks.region.sites()) {
        double vx = nu.at(s);
        if (std::abs(vx) > kWindow + 1e-9) throw ParamError("assemble_elliptic: nu outside the pi/5 window");
        op.V[{s.x, s.y}] = potential_ratio(vx) * ks.m.at(s);
        int axis = 0;
        for (auto d : {Site{1, 0}, Site{0, 1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (ks.region.contains(n)) op.C[{s.x, s.y, axis}] = sinc_ratio(vx - nu.at(n));
            ++axis;
        }
    }
    return op;
}

double elliptic_residual(const ScalarField& nu, const EllipticOp& op, const KSpec& ks) {
    double worst = 0.0;
    for (auto s : ks.region.sites()) {
        double vx = nu.at(s);
        double acc = op.V.at({s.x, s.y}) * vx;
        for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (ks.region.contains(n)) {
                acc += sinc_ratio(vx - nu.at(n)) * (vx - nu.at(n));
            } else if (auto t = ks.tau_at(n)) {
                acc += sinc_ratio(vx - *t) * (vx - *t);
            }
        }
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

std::vector<double> k_hessian_dense(const ScalarField& nu, const KSpec& ks) {
    KProblem prob(ks);
    std::vector<double> v(prob.sites.size());
    for (size_t i = 0; i < prob.sites.size(); ++i) v[i] = nu.at(prob.sites[i]);
    Eigen::SparseMatrix<double> H = prob.hessian(v);
    int n = static_cast<int>(prob.sites.size());
    std::vector<double> dense(static_cast<size_t>(n) * n, 0.0);
    for (int k = 0; k < H.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it)
            dense[static_cast<size_t>(it.row()) * n + it.col()] = -it.value(); // Hessian of K = -(Hessian of -K)
    return dense;
}

ProbeResult variational_probe(int side, double psi, const GridD& alpha, double eps) {
    int l = side;
    if (alpha.nx() != l || alpha.ny() != l) throw DomainError("variational_probe: alpha shape mismatch");
    // centered field
    double mean = 0.0;
    for (double v : alpha.raw()) mean += v;
    mean /= static_cast<double>(alpha.size());
    GridD hat(l, l);
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) hat(x, y) = alpha(x, y) - mean;

    ProbeResult out;
    // quadratic prediction through the Neumann modes with k != 0
    const auto& b = field::basis_table(field::Bc::N, l);
    GridD modes = field::to_modes(field::Bc::N, hat);
    double quad = 0.0;
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) {
            if (j1 == 0 && j2 == 0) continue;
            double z = b.zeta[j1] + b.zeta[j2];
            quad += modes(j1, j2) * modes(j1, j2) / z;
        }
    double c = std::cos(psi);
    out.quadratic_prediction = 0.5 * eps * eps * c * c * quad;

    // projected ascent of -H_Q(psi + that) over |that|_inf <= 0.3
    GridD that(l, l, 0.0);
    auto mh = [&](const GridD& th) {
        double acc = 0.0;
        for (int y = 0; y < l; ++y)
            for (int x = 0; x < l; ++x) {
                double t = psi + th(x, y);
                if (x + 1 < l) acc += std::cos(t - psi - th(x + 1, y)) - 1.0;
                if (y + 1 < l) acc += std::cos(t - psi - th(x, y + 1)) - 1.0;
                acc += eps * hat(x, y) * std::sin(t);
            }
        return acc;
    };
    double step = 0.2;
    double f = mh(that);
    GridD grad(l, l), trial(l, l);
    for (int it = 0; it < 600; ++it) {
        for (int y = 0; y < l; ++y)
            for (int x = 0; x < l; ++x) {
                double t = that(x, y);
                double acc = eps * hat(x, y) * std::cos(psi + t);
                auto pull = [&](int xx, int yy) {
                    if (xx >= 0 && xx < l && yy >= 0 && yy < l) acc -= std::sin(t - that(xx, yy));
                };
                pull(x - 1, y);
                pull(x + 1, y);
                pull(x, y - 1);
                pull(x, y + 1);
                grad(x, y) = acc;
            }
        bool improved = false;
        for (int ls = 0; ls < 25 && !improved; ++ls) {
            for (size_t i = 0; i < trial.size(); ++i)
                trial.raw()[i] = std::min(std::max(that.raw()[i] + step * grad.raw()[i], -0.3), 0.3);
            double fn = mh(trial);
            if (fn > f) {
                that = trial;
                f = fn;
                improved = true;
            } else {
                step *= 0.5;
            }
        }
        if (!improved || step < 1e-12) break;
        step = std::min(step * 1.8, 0.5);
    }
    out.numeric_max = f;
    out.difference = out.numeric_max - out.quadratic_prediction;
    return out;
}

std::string SurgeryTrace::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (size_t i = 0; i < events.size(); ++i) {
        if (i) os << ",";
        os << "{\"step\":\"" << events[i].step << "\",\"value\":" << events[i].value
           << ",\"budget\":" << events[i].budget << ",\"hard\":" << (events[i].hard ? "true" : "false")
           << ",\"ok\":" << (events[i].ok ? "true" : "false") << "}";
    }
    os << "]";
    return os.str();
}

} // namespace rfxy::surgery
