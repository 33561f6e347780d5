#include <Eigen/Dense>
#include <cmath>

#include "rfxy/reference.hpp"

namespace rfxy::ref {

std::vector<double> dense_operator(const field::ResolventSpec& spec) {
    int l = spec.side;
    int n = l * l;
    std::vector<double> A(static_cast<size_t>(n) * n, 0.0);
    auto idx = [l](int x, int y) { return y * l + x; };
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) {
            int i = idx(x, y);
            double diag = spec.lambda;
            auto nbr = [&](int xx, int yy) {
                if (xx >= 0 && xx < l && yy >= 0 && yy < l) {
                    diag += 1.0;
                    A[static_cast<size_t>(i) * n + idx(xx, yy)] -= 1.0;
                } else if (spec.bc == field::Bc::D) {
                    diag += 1.0;
                }
            };
            nbr(x - 1, y);
            nbr(x + 1, y);
            nbr(x, y - 1);
            nbr(x, y + 1);
            A[static_cast<size_t>(i) * n + i] += diag;
        }
    return A;
}

GridD dense_resolvent(const field::ResolventSpec& spec, const GridD& alpha) {
    int l = spec.side;
    int n = l * l;
    auto raw = dense_operator(spec);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(raw.data(), n, n);
    Eigen::VectorXd b(n);
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) b[y * l + x] = spec.epsilon * alpha(x, y);
    Eigen::VectorXd g = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(b);
    GridD out(l, l);
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) out(x, y) = g[y * l + x];
    return out;
}

double dirichlet_energy(const spin::SpinConfig& sigma, const geom::Region& R) {
    double e = 0.0;
    const auto& sites = R.sites();
    for (size_t i = 0; i < sites.size(); ++i)
        for (size_t j = i + 1; j < sites.size(); ++j) {
            int dx = sites[i].x - sites[j].x, dy = sites[i].y - sites[j].y;
            if (dx * dx + dy * dy != 1) continue;
            auto a = sigma.spin(sites[i]), b = sigma.spin(sites[j]);
            e += (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
        }
    return e;
}

double zeta_bar_sq_midpoint(double lambda, int n) {
    // k_i = pi u^3: du-midpoint with Jacobian 3 pi u^2 per axis
    double h = 1.0 / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = (i + 0.5) * h;
        double x = M_PI * u * u * u;
        double jx = 3.0 * M_PI * u * u;
        for (int j = 0; j < n; ++j) {
            double v = (j + 0.5) * h;
            double y = M_PI * v * v * v;
            double jy = 3.0 * M_PI * v * v;
            double den = x * x + y * y + lambda;
            acc += jx * jy / (den * den);
        }
    }
    return acc * h * h;
}

bool a_event_scan(const GridD& m, double epsilon, double A, LogBase base) {
    int l = m.nx();
    double l34 = std::pow(static_cast<double>(l), 0.75);
    int rlo = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(l))));
    int rhi = static_cast<int>(std::floor(l34));
    for (int y = 0; y < l; ++y)
        for (int x = 0; x < l; ++x) {
            double dist = std::min(std::min(x + 1, l - x), std::min(y + 1, l - y));
            if (dist < l34) continue;
            for (int r = rlo; r <= rhi; ++r) {
                double sum = 0.0;
                for (int yy = 0; yy < l; ++yy)
                    for (int xx = 0; xx < l; ++xx) {
                        long d2 = static_cast<long>(xx - x) * (xx - x) + static_cast<long>(yy - y) * (yy - y);
                        if (d2 <= static_cast<long>(r) * r) sum += m(xx, yy);
                    }
                if (sum / (epsilon * epsilon * r * r) < A * logmag(static_cast<double>(r), base) - 1e-12) return false;
            }
        }
    return true;
}

} // namespace rfxy::ref
