#include "rfxy/spin.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

namespace rfxy::spin {

SpinConfig::SpinConfig(Region domain, double angle) : domain_(std::move(domain)) {
    origin_ = {domain_.bounds().x0, domain_.bounds().y0};
    theta_ = GridD(std::max(domain_.bounds().width(), 1), std::max(domain_.bounds().height(), 1), wrap_angle(angle));
}

BoundaryCondition ext_boundary(const Region& r, const LatticeGeom& ambient) {
    auto bc = BoundaryCondition::explicit_bc();
    for (auto s : r.outer_boundary().sites())
        if (!ambient.contains(s)) bc.set(s, 0.0);
    return bc;
}

BoundaryCondition frozen_boundary(const Region& r, const SpinConfig& sigma) {
    auto bc = BoundaryCondition::explicit_bc();
    for (auto s : r.outer_boundary().sites())
        if (sigma.has(s)) bc.set(s, sigma.theta(s));
    return bc;
}

double dirichlet_energy(const SpinConfig& sigma, const Region& R) {
    double e = 0.0;
    for (auto s : R.sites()) {
        double t = sigma.theta(s); // throws if R is not inside the domain
        for (auto d : {Site{1, 0}, Site{0, 1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (R.contains(n)) e += edge_energy(t, sigma.theta(n));
        }
    }
    return e;
}

double dirichlet_energy_bc(const SpinConfig& sigma, const Region& R, const BoundaryCondition& tau) {
    double e = dirichlet_energy(sigma, R);
    for (auto s : R.sites()) {
        double t = sigma.theta(s);
        for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (R.contains(n)) continue;
            if (auto a = tau.angle_at(n)) e += edge_energy(t, *a);
        }
    }
    return e;
}

double hamiltonian(const SpinConfig& sigma, const Region& R, const BoundaryCondition& tau, const ScalarField& alpha,
                   double eps) {
    double mh = -0.5 * dirichlet_energy(sigma, R);
    double field = 0.0;
    for (auto s : R.sites()) {
        double t = sigma.theta(s);
        for (auto d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
            Site n{s.x + d.x, s.y + d.y};
            if (R.contains(n)) continue;
            if (auto a = tau.angle_at(n)) mh -= 0.5 * edge_energy(t, *a);
        }
        field += alpha.at(s) * std::sin(t);
    }
    return mh + eps * field;
}

Vec2 block_magnetization(const SpinConfig& sigma, Site anchor, int L) {
    return block_average(sigma, Region::rectangle(anchor.x, anchor.y, L, L));
}

Vec2 block_average(const SpinConfig& sigma, const Region& Q) {
    if (Q.empty()) throw DomainError("block_average: empty block");
    double cx = 0.0, cy = 0.0;
    for (auto s : Q.sites()) {
        double t = sigma.theta(s);
        cx += std::cos(t);
        cy += std::sin(t);
    }
    double inv = 1.0 / static_cast<double>(Q.size());
    return {cx * inv, cy * inv};
}

namespace {
bool is_square_domain(const Region& r, int& n) {
    auto b = r.bounds();
    if (b.width() != b.height()) return false;
    if (r.size() != static_cast<size_t>(b.width()) * b.height()) return false;
    n = b.width();
    return true;
}
} // namespace

void save_binary(const SpinConfig& sigma, const std::string& path) {
    int n = 0;
    if (!is_square_domain(sigma.domain(), n)) throw DomainError("save_binary: domain is not a full square");
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("save_binary: cannot open " + path);
    uint32_t header[2] = {static_cast<uint32_t>(n), 1u};
    std::fwrite(header, sizeof(uint32_t), 2, f);
    auto b = sigma.domain().bounds();
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double t = sigma.theta({b.x0 + x, b.y0 + y});
            std::fwrite(&t, sizeof(double), 1, f);
        }
    std::fclose(f);
}

SpinConfig load_binary(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw Error("load_binary: cannot open " + path);
    uint32_t header[2];
    if (std::fread(header, sizeof(uint32_t), 2, f) != 2) {
        std::fclose(f);
        throw Error("load_binary: truncated header");
    }
    if (header[1] != 1u) {
        std::fclose(f);
        throw Error("load_binary: unsupported version");
    }
    int n = static_cast<int>(header[0]);
    SpinConfig out(Region::rectangle(0, 0, n, n));
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double t;
            if (std::fread(&t, sizeof(double), 1, f) != 1) {
                std::fclose(f);
                throw Error("load_binary: truncated payload");
            }
            out.set_theta({x, y}, t);
        }
    std::fclose(f);
    return out;
}

std::string to_json(const SpinConfig& sigma) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"sites\":[";
    bool first = true;
    for (auto s : sigma.domain().sites()) {
        if (!first) os << ",";
        first = false;
        os << "[" << s.x << "," << s.y << "," << sigma.theta(s) << "]";
    }
    os << "]}";
    return os.str();
}

} // namespace rfxy::spin
