// Calibration of the clean-box constants (A, C, c).
//
// Samples quenched fields at the reference point eps = 0.05 and on the trend
// grid eps in {0.3, 0.2, 0.1}, prints quantiles of the per-square statistics
// entering (C1)-(C6), and evaluates candidate constants.  The shipped
// CleanConstants defaults are the output of this program.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "rfxy/classify.hpp"
#include "rfxy/field.hpp"

using namespace rfxy;
using namespace rfxy::classify;

namespace {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t i = static_cast<size_t>(q * (v.size() - 1));
    return v[i];
}

struct Stats {
    std::vector<double> s2, s3, s4, s5, s6;
};

Stats sample_stats(double eps, int samples, uint64_t seed0) {
    auto p = ModelParams::from_epsilon(eps);
    int l0 = p.ell;
    int window = 2 * l0;
    double le = p.logeps();
    Stats st;
    for (int i = 0; i < samples; ++i) {
        auto rf = field::sample_alpha(seed0 + i, window);
        FieldProvider prov(rf.alpha, eps, p.lambda);
        for (auto a : overlapping_squares(prov, {l0 / 2, l0 / 2}, l0)) {
            auto bf = prov.box(a, l0);
            double en = 0, ed = 0;
            for (const auto* fs : {&bf->d, &bf->n}) {
                double gi = 0, gr = 0;
                const GridD& g = fs->g.v;
                for (double v : g.raw()) gi = std::max(gi, std::abs(v));
                for (int y = 0; y < l0; ++y)
                    for (int x = 0; x < l0; ++x) {
                        if (x + 1 < l0) gr = std::max(gr, std::abs(g(x, y) - g(x + 1, y)));
                        if (y + 1 < l0) gr = std::max(gr, std::abs(g(x, y) - g(x, y + 1)));
                        if (fs->spec.bc == field::Bc::D && (x == 0 || y == 0 || x == l0 - 1 || y == l0 - 1))
                            gr = std::max(gr, std::abs(g(x, y)));
                    }
                double e2 = fs->spec.bc == field::Bc::D ? field::energy_zero_bc(g) : field::energy_internal(g);
                st.s2.push_back(gi * std::sqrt(p.lambda) / (eps * std::pow(le, 1.0 / 40.0)));
                st.s3.push_back(gr / (eps * le));
                st.s4.push_back(e2 / (l0 * l0) / (eps * eps * le));
                if (fs->spec.bc == field::Bc::D) ed = field::energy_zero_bc(g);
                else en = field::energy_internal(g);
            }
            st.s5.push_back(bf->alpha_inf / le);
            if (en > 0) st.s6.push_back(std::abs(en - ed) * std::pow(logmag(l0, p.log_base), 0.25) / en);
        }
    }
    return st;
}

// Smallest disk-sum ratio entering the A-event at a calibration scale >= 16.
std::vector<double> sample_a_ratios(double eps, double lambda, int l0, int samples, uint64_t seed0) {
    std::vector<double> out;
    for (int i = 0; i < samples; ++i) {
        auto rf = field::sample_alpha(seed0 + 77000 + i, l0);
        auto fs = field::resolvent_apply_grid({field::Bc::D, l0, lambda, eps}, rf.alpha);
        const GridD& m = fs.m.v;
        double l34 = std::pow(static_cast<double>(l0), 0.75);
        int rlo = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(l0))));
        int rhi = static_cast<int>(std::floor(l34));
        double worst = 1e300;
        for (int y = 0; y < l0; ++y)
            for (int x = 0; x < l0; ++x) {
                int dist = std::min(std::min(x + 1, l0 - x), std::min(y + 1, l0 - y));
                if (static_cast<double>(dist) < l34) continue;
                for (int r = rlo; r <= rhi; ++r) {
                    double sum = 0.0;
                    for (int yy = std::max(y - r, 0); yy <= std::min(y + r, l0 - 1); ++yy)
                        for (int xx = std::max(x - r, 0); xx <= std::min(x + r, l0 - 1); ++xx) {
                            long d2 = static_cast<long>(xx - x) * (xx - x) + static_cast<long>(yy - y) * (yy - y);
                            if (d2 <= static_cast<long>(r) * r) sum += m(xx, yy);
                        }
                    worst = std::min(worst, sum / (eps * eps * r * r) / std::log(static_cast<double>(r)));
                }
            }
        if (worst < 1e300) out.push_back(worst);
    }
    return out;
}

void dirty_fraction(double eps, const CleanConstants& cc, int boxes, uint64_t seed0) {
    auto p = ModelParams::from_epsilon(eps);
    int l0 = p.ell, window = 2 * l0;
    int dirty = 0;
    int fails[6] = {0, 0, 0, 0, 0, 0};
    for (int i = 0; i < boxes; ++i) {
        auto rf = field::sample_alpha(seed0 + i, window);
        FieldProvider prov(rf.alpha, eps, p.lambda);
        auto r = classify_box(prov, {l0 / 2, l0 / 2}, l0, cc, p);
        if (!r.xi) ++dirty;
        bool c[6] = {r.c1, r.c2, r.c3, r.c4, r.c5, r.c6};
        for (int j = 0; j < 6; ++j)
            if (!c[j]) ++fails[j];
    }
    std::printf("  eps %.2f (ell=%d): dirty %d / %d = %.3f  [fails c1..c6: %d %d %d %d %d %d]\n", eps, l0, dirty,
                boxes, double(dirty) / boxes, fails[0], fails[1], fails[2], fails[3], fails[4], fails[5]);
}

} // namespace

int main(int argc, char** argv) {
    int samples = argc > 1 ? std::atoi(argv[1]) : 1000;

    std::printf("reference point eps = 0.05, %d samples\n", samples);
    auto st = sample_stats(0.05, samples, 1);
    std::printf("  S2 (C2 stat, must be <= 1): q50 %.3f q99 %.3f q999 %.3f max %.3f\n", quantile(st.s2, 0.5),
                quantile(st.s2, 0.99), quantile(st.s2, 0.999), quantile(st.s2, 1.0));
    std::printf("  S3 (grad_inf / eps log):     q50 %.3f q99 %.3f q999 %.3f max %.3f\n", quantile(st.s3, 0.5),
                quantile(st.s3, 0.99), quantile(st.s3, 0.999), quantile(st.s3, 1.0));
    std::printf("  S4 (energy density ratio):   q001 %.4f q01 %.4f q50 %.3f q999 %.3f max %.3f\n",
                quantile(st.s4, 0.001), quantile(st.s4, 0.01), quantile(st.s4, 0.5), quantile(st.s4, 0.999),
                quantile(st.s4, 1.0));
    std::printf("  S5 (alpha_inf / log):        q50 %.3f q99 %.3f q999 %.3f max %.3f\n", quantile(st.s5, 0.5),
                quantile(st.s5, 0.99), quantile(st.s5, 0.999), quantile(st.s5, 1.0));
    std::printf("  S6 (C6 stat, must be <= 1):  q50 %.3f q99 %.3f q999 %.3f max %.3f\n", quantile(st.s6, 0.5),
                quantile(st.s6, 0.99), quantile(st.s6, 0.999), quantile(st.s6, 1.0));

    for (double eps : {0.3, 0.2, 0.1}) {
        auto g = sample_stats(eps, samples / 2, 500);
        std::printf("grid eps %.2f: S2 q99 %.2f q999 %.2f | S3 q999 %.3f | S4 q001 %.4f q999 %.3f | S5 q999 %.3f | "
                    "S6 q99 %.2f q999 %.2f max %.1f\n",
                    eps, quantile(g.s2, 0.99), quantile(g.s2, 0.999), quantile(g.s3, 0.999), quantile(g.s4, 0.001),
                    quantile(g.s4, 0.999), quantile(g.s5, 0.999), quantile(g.s6, 0.99), quantile(g.s6, 0.999),
                    quantile(g.s6, 1.0));
    }

    auto p05 = ModelParams::from_epsilon(0.05);
    for (int l0 : {16, 32}) {
        auto ar = sample_a_ratios(0.05, p05.lambda, l0, samples / 4, 9);
        std::printf("A-event ratio at L0=%d: q001 %.4f q01 %.4f q50 %.4f\n", l0, quantile(ar, 0.001),
                    quantile(ar, 0.01), quantile(ar, 0.5));
    }

    std::printf("\ncandidate grid (A = 0.4, c = 0.001):\n");
    for (double C : {1.4, 1.55, 1.7})
        for (double Ct : {6.0, 9.0, 14.0}) {
            CleanConstants cand{0.4, C, 0.001, 1.0 / 40.0, Ct};
            std::printf("C = %.2f  C_tail = %.1f\n", C, Ct);
            dirty_fraction(0.05, cand, samples, 31);
            for (double eps : {0.3, 0.2, 0.1}) dirty_fraction(eps, cand, samples / 2, 137);
        }

    CleanConstants cc; // shipped defaults
    std::printf("\nshipped constants: A=%.4f C=%.3f c=%.4f eta=%.4f\n", cc.A, cc.C_big, cc.c_small, cc.eta);
    std::printf("dirty fractions with shipped constants:\n");
    dirty_fraction(0.05, cc, samples, 31);
    for (double eps : {0.3, 0.2, 0.1}) dirty_fraction(eps, cc, samples / 2, 137);
    return 0;
}
