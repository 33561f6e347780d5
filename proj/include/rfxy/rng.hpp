#pragma once

#include <cmath>
#include <cstdint>

namespace rfxy::rng {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform in [0, 1) from 64 bits.
inline double to_unit(uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Counter-based standard normal: a pure function of (seed, counter), so any
/// draw can be regenerated bit-identically and in any order.
inline double counter_normal(uint64_t seed, uint64_t counter) {
    uint64_t h1 = splitmix64(seed ^ splitmix64(counter));
    uint64_t h2 = splitmix64(h1 ^ 0x6a09e667f3bcc909ULL);
    double u1 = 1.0 - to_unit(h1); // (0, 1]
    double u2 = to_unit(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// Counter keyed by a lattice site.
inline uint64_t site_counter(int x, int y) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(x)) << 32) | static_cast<uint64_t>(static_cast<uint32_t>(y));
}

/// Small sequential stream for Monte Carlo chains.  Deterministic across
/// platforms (no std::distribution involved).
class Stream {
  public:
    explicit Stream(uint64_t seed) : state_(splitmix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
    double uniform() { return to_unit(next_u64()); }
    /// Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

  private:
    uint64_t state_;
};

} // namespace rfxy::rng
