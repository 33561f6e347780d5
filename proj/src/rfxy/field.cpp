#include "rfxy/field.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rfxy/rng.hpp"

namespace rfxy::field {

RandomField sample_alpha(uint64_t seed, int l) {
    if (l < 1) throw ParamError("sample_alpha: l must be >= 1");
    RandomField rf;
    rf.seed = seed;
    rf.alpha = GridD(l, l);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) rf.alpha(x, y) = rng::counter_normal(seed, rng::site_counter(x, y));
    return rf;
}

namespace {

Basis1D make_basis(Bc bc, int l) {
    Basis1D b;
    b.l = l;
    b.bc = bc;
    b.V.resize(static_cast<size_t>(l) * l);
    b.zeta.resize(l);
    b.k.resize(l);
    if (bc == Bc::D) {
        double norm = std::sqrt(2.0 / (l + 1));
        for (int j = 0; j < l; ++j) {
            double kj = M_PI * (j + 1) / (l + 1);
            b.k[j] = kj;
            double s = std::sin(kj / 2.0);
            b.zeta[j] = 4.0 * s * s;
            for (int x = 0; x < l; ++x) b.V[static_cast<size_t>(j) * l + x] = norm * std::sin(kj * (x + 1));
        }
    } else {
        for (int j = 0; j < l; ++j) {
            double kj = M_PI * j / l;
            b.k[j] = kj;
            double s = std::sin(kj / 2.0);
            b.zeta[j] = 4.0 * s * s;
            double norm = j == 0 ? std::sqrt(1.0 / l) : std::sqrt(2.0 / l);
            for (int x = 0; x < l; ++x) b.V[static_cast<size_t>(j) * l + x] = norm * std::cos(kj * (x + 0.5));
        }
    }
    return b;
}

std::mutex g_basis_mutex;
std::map<std::pair<int, int>, std::unique_ptr<Basis1D>> g_basis_cache;

} // namespace

const Basis1D& basis_table(Bc bc, int l) {
    std::lock_guard<std::mutex> lock(g_basis_mutex);
    auto key = std::make_pair(static_cast<int>(bc), l);
    auto it = g_basis_cache.find(key);
    if (it == g_basis_cache.end()) it = g_basis_cache.emplace(key, std::make_unique<Basis1D>(make_basis(bc, l))).first;
    return *it->second;
}

namespace {

// out = op(V) * A * V  applied separably: rows first, then columns.
// mode = 0: analysis (V^T A V), mode = 1: synthesis (V A V^T).
GridD transform(const Basis1D& b, const GridD& a, bool analysis) {
    int l = b.l;
    GridD tmp(l, l), out(l, l);
    const double* V = b.V.data();
    // columns of `a` along x: tmp(j, y) = sum_x V[j,x] a(x,y)   (analysis)
    //                         tmp(x, y) = sum_j V[j,x] a(j,y)   (synthesis)
#pragma omp parallel for schedule(static)
    for (int y = 0; y < l; ++y) {
        const double* row = &a.raw()[static_cast<size_t>(y) * l];
        double* dst = &tmp.raw()[static_cast<size_t>(y) * l];
        for (int j = 0; j < l; ++j) dst[j] = 0.0;
        if (analysis) {
            for (int j = 0; j < l; ++j) {
                const double* basis = V + static_cast<size_t>(j) * l;
                double acc = 0.0;
                for (int x = 0; x < l; ++x) acc += basis[x] * row[x];
                dst[j] = acc;
            }
        } else {
            for (int j = 0; j < l; ++j) {
                const double* basis = V + static_cast<size_t>(j) * l;
                double c = row[j];
                for (int x = 0; x < l; ++x) dst[x] += basis[x] * c;
            }
        }
    }
#pragma omp parallel for schedule(static)
    for (int x = 0; x < l; ++x) {
        std::vector<double> col(l);
        for (int y = 0; y < l; ++y) col[y] = tmp(x, y);
        if (analysis) {
            for (int j = 0; j < l; ++j) {
                const double* basis = V + static_cast<size_t>(j) * l;
                double acc = 0.0;
                for (int y = 0; y < l; ++y) acc += basis[y] * col[y];
                out(x, j) = acc;
            }
        } else {
            std::vector<double> res(l, 0.0);
            for (int j = 0; j < l; ++j) {
                const double* basis = V + static_cast<size_t>(j) * l;
                double c = col[j];
                for (int y = 0; y < l; ++y) res[y] += basis[y] * c;
            }
            for (int y = 0; y < l; ++y) out(x, y) = res[y];
        }
    }
    return out;
}

} // namespace

GridD to_modes(Bc bc, const GridD& f) {
    if (f.nx() != f.ny()) throw ParamError("to_modes: square grids only");
    return transform(basis_table(bc, f.nx()), f, true);
}

GridD from_modes(Bc bc, const GridD& a) {
    if (a.nx() != a.ny()) throw ParamError("from_modes: square grids only");
    return transform(basis_table(bc, a.nx()), a, false);
}

GridD apply_operator(const ResolventSpec& spec, const GridD& f) {
    int l = spec.side;
    GridD out(l, l);
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) {
            double c = f(x, y), acc = spec.lambda * c;
            // Dirichlet: neighbors outside contribute (c - 0); Neumann: skipped.
            if (x > 0) acc += c - f(x - 1, y);
            else if (spec.bc == Bc::D) acc += c;
            if (x + 1 < l) acc += c - f(x + 1, y);
            else if (spec.bc == Bc::D) acc += c;
            if (y > 0) acc += c - f(x, y - 1);
            else if (spec.bc == Bc::D) acc += c;
            if (y + 1 < l) acc += c - f(x, y + 1);
            else if (spec.bc == Bc::D) acc += c;
            out(x, y) = acc;
        }
    return out;
}

namespace {

GridD masses_for(const ResolventSpec& spec, const GridD& g) {
    int l = spec.side;
    GridD m(l, l, 0.0);
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) {
            double c = g(x, y), acc = 0.0;
            auto edge = [&](int xx, int yy) {
                if (xx >= 0 && xx < l && yy >= 0 && yy < l) {
                    double d = c - g(xx, yy);
                    acc += d * d;
                } else if (spec.bc == Bc::D) {
                    acc += c * c; // zero extension across the boundary
                }
            };
            edge(x - 1, y);
            edge(x + 1, y);
            edge(x, y - 1);
            edge(x, y + 1);
            m(x, y) = acc;
        }
    return m;
}

} // namespace

FieldSample resolvent_apply_grid(const ResolventSpec& spec, const GridD& alpha, uint64_t seed) {
    if (spec.lambda <= 0.0) throw ParamError("resolvent_apply: lambda must be > 0");
    if (alpha.nx() != spec.side || alpha.ny() != spec.side) throw DomainError("resolvent_apply: alpha shape mismatch");
    const Basis1D& b = basis_table(spec.bc, spec.side);
    GridD modes = to_modes(spec.bc, alpha);
    int l = spec.side;
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) modes(j1, j2) *= spec.epsilon / (b.zeta[j1] + b.zeta[j2] + spec.lambda);
    GridD g = from_modes(spec.bc, modes);

    FieldSample fs;
    fs.spec = spec;
    fs.seed = seed;
    GridD lhs = apply_operator(spec, g);
    double res = 0.0;
    for (size_t i = 0; i < lhs.size(); ++i) res = std::max(res, std::abs(lhs.raw()[i] - spec.epsilon * alpha.raw()[i]));
    fs.residual = res;
    fs.m = ScalarField{masses_for(spec, g), {0, 0}};
    fs.g = ScalarField{std::move(g), {0, 0}};
    return fs;
}

FieldSample resolvent_apply(const ResolventSpec& spec, const RandomField& alpha) {
    return resolvent_apply_grid(spec, alpha.alpha, alpha.seed);
}

std::vector<EigenPair> eigen_pairs(const ResolventSpec& spec) {
    const Basis1D& b = basis_table(spec.bc, spec.side);
    int l = spec.side;
    std::vector<EigenPair> out;
    out.reserve(static_cast<size_t>(l) * l);
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) {
            EigenPair p;
            p.j1 = j1;
            p.j2 = j2;
            p.kx = b.k[j1];
            p.ky = b.k[j2];
            p.zeta = b.zeta[j1] + b.zeta[j2];
            p.vec = GridD(l, l);
            for (int y = 0; y < l; ++y)
                for (int x = 0; x < l; ++x)
                    p.vec(x, y) = b.V[static_cast<size_t>(j1) * l + x] * b.V[static_cast<size_t>(j2) * l + y];
            out.push_back(std::move(p));
        }
    return out;
}

int annulus_count(int l) { return static_cast<int>(std::ceil(std::log2(l + 1.0))) + 1; }

int annulus_of(double kx, double ky, int l) {
    int smax = annulus_count(l) - 1;
    double r = std::hypot(kx, ky);
    if (r == 0.0) return smax; // Neumann zero mode joins the last annulus
    // bin s: pi/2^{s+1} <= r < pi/2^s, clamped so s=0 is closed above
    int s = static_cast<int>(std::ceil(std::log2(M_PI / r))) - 1;
    return std::clamp(s, 0, smax);
}

GridD annulus_project(const ResolventSpec& spec, const GridD& alpha, int s) {
    const Basis1D& b = basis_table(spec.bc, spec.side);
    int l = spec.side;
    if (s < 0 || s >= annulus_count(l)) throw ParamError("annulus_project: s out of range");
    GridD modes = to_modes(spec.bc, alpha);
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) {
            if (annulus_of(b.k[j1], b.k[j2], l) == s)
                modes(j1, j2) /= (b.zeta[j1] + b.zeta[j2] + spec.lambda);
            else
                modes(j1, j2) = 0.0;
        }
    return from_modes(spec.bc, modes);
}

std::vector<double> annulus_values_at(const ResolventSpec& spec, const GridD& alpha, Site x) {
    const Basis1D& b = basis_table(spec.bc, spec.side);
    int l = spec.side;
    GridD modes = to_modes(spec.bc, alpha);
    std::vector<double> out(annulus_count(l), 0.0);
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) {
            int s = annulus_of(b.k[j1], b.k[j2], l);
            double vk = b.V[static_cast<size_t>(j1) * l + x.x] * b.V[static_cast<size_t>(j2) * l + x.y];
            out[s] += modes(j1, j2) * vk / (b.zeta[j1] + b.zeta[j2] + spec.lambda);
        }
    return out;
}

double exact_annulus_variance(const ResolventSpec& spec, int s, Site x) {
    const Basis1D& b = basis_table(spec.bc, spec.side);
    int l = spec.side;
    double acc = 0.0;
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) {
            if (annulus_of(b.k[j1], b.k[j2], l) != s) continue;
            double vk = b.V[static_cast<size_t>(j1) * l + x.x] * b.V[static_cast<size_t>(j2) * l + x.y];
            double den = b.zeta[j1] + b.zeta[j2] + spec.lambda;
            acc += vk * vk / (den * den);
        }
    return acc;
}

double pair_increment_variance(const ResolventSpec& spec, int s, Site x, Site y) {
    const Basis1D& b = basis_table(spec.bc, spec.side);
    int l = spec.side;
    double acc = 0.0;
    for (int j2 = 0; j2 < l; ++j2)
        for (int j1 = 0; j1 < l; ++j1) {
            if (annulus_of(b.k[j1], b.k[j2], l) != s) continue;
            double vx = b.V[static_cast<size_t>(j1) * l + x.x] * b.V[static_cast<size_t>(j2) * l + x.y];
            double vy = b.V[static_cast<size_t>(j1) * l + y.x] * b.V[static_cast<size_t>(j2) * l + y.y];
            double den = b.zeta[j1] + b.zeta[j2] + spec.lambda;
            acc += (vx - vy) * (vx - vy) / (den * den);
        }
    return acc;
}

namespace {

// Inner integral over y for fixed c = x^2 + lambda:
//   ∫_0^pi dy / (c + y^2)^2 = pi / (2c(c+pi^2)) + atan(pi/sqrt(c)) / (2 c^{3/2})
double inner_integral(double c) {
    double sc = std::sqrt(c);
    return M_PI / (2.0 * c * (c + M_PI * M_PI)) + std::atan(M_PI / sc) / (2.0 * c * sc);
}

double adaptive_simpson(double (*f)(double, double), double p, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm, p), frm = f(rm, p);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, p, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, p, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double zeta_integrand(double x, double lambda) { return inner_integral(x * x + lambda); }

} // namespace

double zeta_bar_sq(double lambda) {
    if (lambda <= 0.0) throw ParamError("zeta_bar_sq: lambda must be > 0");
    // split at the peak scale sqrt(lambda) so the adaptive pass converges fast
    double split = std::min(std::sqrt(lambda), M_PI / 2.0);
    double total = 0.0;
    double edges[3] = {0.0, split, M_PI};
    for (int i = 0; i < 2; ++i) {
        double a = edges[i], b = edges[i + 1];
        if (b <= a) continue;
        double fa = zeta_integrand(a, lambda), fb = zeta_integrand(b, lambda);
        double m = 0.5 * (a + b), fm = zeta_integrand(m, lambda);
        double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        double tol = 1e-9 * std::max(std::abs(whole), 1e-300);
        total += adaptive_simpson(zeta_integrand, lambda, a, b, fa, fm, fb, whole, tol, 48);
    }
    return total;
}

double energy_zero_bc(const GridD& f) {
    double e = 0.0;
    int nx = f.nx(), ny = f.ny();
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double c = f(x, y);
            double r = x + 1 < nx ? f(x + 1, y) : 0.0;
            double u = y + 1 < ny ? f(x, y + 1) : 0.0;
            e += (c - r) * (c - r) + (c - u) * (c - u);
            if (x == 0) e += c * c;
            if (y == 0) e += c * c;
        }
    return e;
}

double energy_internal(const GridD& f) {
    double e = 0.0;
    int nx = f.nx(), ny = f.ny();
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double c = f(x, y);
            if (x + 1 < nx) e += (c - f(x + 1, y)) * (c - f(x + 1, y));
            if (y + 1 < ny) e += (c - f(x, y + 1)) * (c - f(x, y + 1));
        }
    return e;
}

double energy_diff_DN(const GridD& alpha, int l, double lambda, double epsilon) {
    ResolventSpec d{Bc::D, l, lambda, epsilon}, n{Bc::N, l, lambda, epsilon};
    auto gd = resolvent_apply_grid(d, alpha);
    auto gn = resolvent_apply_grid(n, alpha);
    return energy_zero_bc(gd.g.v) - energy_internal(gn.g.v);
}

double expected_energy_diff_DN(int l, double lambda, double epsilon) {
    auto sum_for = [&](Bc bc) {
        const Basis1D& b = basis_table(bc, l);
        double acc = 0.0;
        for (int j2 = 0; j2 < l; ++j2)
            for (int j1 = 0; j1 < l; ++j1) {
                double z = b.zeta[j1] + b.zeta[j2];
                acc += z / ((z + lambda) * (z + lambda));
            }
        return acc;
    };
    return epsilon * epsilon * (sum_for(Bc::D) - sum_for(Bc::N));
}

namespace {
void wilson(long k, long n, double& lo, double& hi) {
    double z = 1.959963984540054;
    double p = n > 0 ? static_cast<double>(k) / n : 0.0;
    double z2n = z * z / n;
    double center = (p + z2n / 2.0) / (1.0 + z2n);
    double half = z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / (1.0 + z2n);
    lo = k == 0 ? 0.0 : std::max(0.0, center - half);
    hi = k == n ? 1.0 : std::min(1.0, center + half);
}
} // namespace

std::vector<TailRow> sup_tail_experiment(const ResolventSpec& spec, const std::vector<double>& Ms, int samples,
                                         uint64_t seed) {
    double zb = std::sqrt(zeta_bar_sq(spec.lambda));
    std::vector<long> counts(Ms.size(), 0);
    std::vector<double> sup(samples);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < samples; ++i) {
        auto rf = sample_alpha(seed + static_cast<uint64_t>(i), spec.side);
        auto fs = resolvent_apply(spec, rf);
        double mx = 0.0;
        for (double v : fs.g.v.raw()) mx = std::max(mx, std::abs(v));
        sup[i] = mx;
    }
    for (int i = 0; i < samples; ++i)
        for (size_t j = 0; j < Ms.size(); ++j)
            if (sup[i] >= Ms[j] * spec.epsilon * zb) ++counts[j];
    std::vector<TailRow> rows;
    for (size_t j = 0; j < Ms.size(); ++j) {
        TailRow r;
        r.M = Ms[j];
        r.count = counts[j];
        r.total = samples;
        r.p_hat = samples > 0 ? static_cast<double>(counts[j]) / samples : 0.0;
        wilson(counts[j], samples, r.ci_lo, r.ci_hi);
        rows.push_back(r);
    }
    return rows;
}

} // namespace rfxy::field
