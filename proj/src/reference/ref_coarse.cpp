#include <cmath>

#include "rfxy/reference.hpp"

namespace rfxy::ref {

using geom::LatticeGeom;
using geom::Region;
using geom::Site;
using spin::SpinConfig;

namespace {

double box_energy(const SpinConfig& sigma, int x0, int y0, int side) {
    double e = 0.0;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) {
            double t = sigma.theta({x, y});
            if (x + 1 < x0 + side) e += 2.0 - 2.0 * std::cos(t - sigma.theta({x + 1, y}));
            if (y + 1 < y0 + side) e += 2.0 - 2.0 * std::cos(t - sigma.theta({x, y + 1}));
        }
    return e;
}

double box_avg_e1(const SpinConfig& sigma, int x0, int y0, int side) {
    double acc = 0.0;
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) acc += std::cos(sigma.theta({x, y}));
    return acc / (static_cast<double>(side) * side);
}

} // namespace

GridI psi0_scan(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, ell = p.ell, step = std::max(ell / 2, 1);
    double thr = p.psi0_threshold();
    GridI out(n, n, 1);
    for (int zy = 0; zy < n; ++zy)
        for (int zx = 0; zx < n; ++zx) {
            bool good = true;
            for (int ry = 0; ry + ell <= n && good; ry += step)
                for (int rx = 0; rx + ell <= n; rx += step) {
                    long dx = rx - zx, dy = ry - zy;
                    if (dx * dx + dy * dy > 4L * ell * ell) continue;
                    if (box_energy(sigma, rx, ry, ell) > thr) {
                        good = false;
                        break;
                    }
                }
            out(zx, zy) = good ? 1 : 0;
        }
    return out;
}

GridI psi1_scan(const SpinConfig& sigma, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, ell = p.ell, step = std::max(ell / 2, 1);
    GridI out(n, n, 0);
    for (int zy = 0; zy < n; ++zy)
        for (int zx = 0; zx < n; ++zx) {
            bool plus = true, minus = true;
            for (int ry = 0; ry + ell <= n; ry += step)
                for (int rx = 0; rx + ell <= n; rx += step) {
                    long dx = rx - zx, dy = ry - zy;
                    if (dx * dx + dy * dy > 4L * ell * ell) continue;
                    double a = box_avg_e1(sigma, rx, ry, ell);
                    if (!(a >= 1.0 - p.xi)) plus = false;
                    if (!(a <= -1.0 + p.xi)) minus = false;
                }
            out(zx, zy) = plus ? 1 : (minus ? -1 : 0);
        }
    return out;
}

GridI psi_product(const GridI& psi0, const GridI& psi1) {
    GridI out(psi0.nx(), psi0.ny(), 0);
    for (size_t i = 0; i < out.size(); ++i) out.raw()[i] = psi0.raw()[i] * psi1.raw()[i];
    return out;
}

GridI Psi_scan(const GridI& psi, const ModelParams& p, const LatticeGeom& dom) {
    int n = dom.side, L = p.L;
    GridI out(n, n, 0);
    for (int zy = 0; zy < n; ++zy)
        for (int zx = 0; zx < n; ++zx) {
            int rx = (zx / L) * L, ry = (zy / L) * L;
            bool plus = true, minus = true;
            for (int by = 0; by + L <= n; by += L)
                for (int bx = 0; bx + L <= n; bx += L) {
                    long dx = bx - rx, dy = by - ry;
                    if (dx * dx + dy * dy > 4L * L * L) continue;
                    for (int y = by; y < by + L; ++y)
                        for (int x = bx; x < bx + L; ++x) {
                            if (psi(x, y) != 1) plus = false;
                            if (psi(x, y) != -1) minus = false;
                        }
                }
            out(zx, zy) = plus ? 1 : (minus ? -1 : 0);
        }
    return out;
}

} // namespace rfxy::ref
