#include "rfxy/sampler.hpp"

#include <cmath>

namespace rfxy::mc {

using geom::Region;
using geom::Site;

ChainState make_chain(int N, const GridD& alpha, const GibbsParams& gp, double init_angle) {
    if (alpha.nx() != N || alpha.ny() != N) throw DomainError("make_chain: alpha shape mismatch");
    ChainState st;
    st.sigma = SpinConfig(Region::rectangle(0, 0, N, N), init_angle);
    st.alpha = alpha;
    st.width = gp.proposal_width;
    st.rng = rng::Stream(gp.seed);
    return st;
}

namespace {

// local -H terms touching site x: vector v with -H_local = v . sigma(x) + const
void local_field(const ChainState& st, const GibbsParams& gp, int N, int x, int y, double& vx, double& vy) {
    vx = 0.0;
    vy = gp.epsilon * st.alpha(x, y);
    const int dxs[4] = {1, -1, 0, 0}, dys[4] = {0, 0, 1, -1};
    for (int i = 0; i < 4; ++i) {
        int nx = x + dxs[i], ny = y + dys[i];
        if (nx >= 0 && nx < N && ny >= 0 && ny < N) {
            double t = st.sigma.theta({nx, ny});
            vx += std::cos(t);
            vy += std::sin(t);
        } else if (auto a = gp.bc.angle_at({nx, ny})) {
            vx += std::cos(*a);
            vy += std::sin(*a);
        }
    }
}

void metropolis_site(ChainState& st, const GibbsParams& gp, int N, int x, int y) {
    double vx, vy;
    local_field(st, gp, N, x, y, vx, vy);
    double t = st.sigma.theta({x, y});
    double tp = spin::wrap_angle(t + st.width * st.rng.uniform(-1.0, 1.0));
    double dh = vx * (std::cos(tp) - std::cos(t)) + vy * (std::sin(tp) - std::sin(t));
    ++st.proposed;
    if (dh >= 0.0 || st.rng.uniform() < std::exp(gp.beta * dh)) {
        st.sigma.set_theta({x, y}, tp);
        ++st.accepted;
    }
}

void adapt(ChainState& st, const GibbsParams& gp) {
    if (!gp.adapt_width || st.sweep >= gp.burnin_sweeps) return;
    if (st.sweep % 25 != 24 || st.proposed == 0) return;
    double rate = static_cast<double>(st.accepted) / static_cast<double>(st.proposed);
    if (rate > 0.6) st.width = std::min(st.width * 1.25, M_PI);
    if (rate < 0.4) st.width = std::max(st.width / 1.25, 1e-3);
    st.accepted = st.proposed = 0;
}

} // namespace

void metropolis_sweep(ChainState& st, const GibbsParams& gp) {
    int N = st.alpha.nx();
    if (gp.checkerboard) {
        // same stationary law; the two colors are conditionally independent.
        // proposals use site-keyed counters so the result does not depend on
        // a thread schedule.
        for (int color = 0; color < 2; ++color) {
#pragma omp parallel for schedule(static)
            for (int y = 0; y < N; ++y)
                for (int x = (y + color) % 2; x < N; x += 2) {
                    double vx, vy;
                    local_field(st, gp, N, x, y, vx, vy);
                    uint64_t c = (static_cast<uint64_t>(st.sweep * 2 + color) << 40) ^ rng::site_counter(x, y);
                    double u1 = rng::to_unit(rng::splitmix64(gp.seed ^ rng::splitmix64(c)));
                    double u2 = rng::to_unit(rng::splitmix64(gp.seed ^ rng::splitmix64(c ^ 0x5851f42d4c957f2dULL)));
                    double t = st.sigma.theta({x, y});
                    double tp = spin::wrap_angle(t + st.width * (2.0 * u1 - 1.0));
                    double dh = vx * (std::cos(tp) - std::cos(t)) + vy * (std::sin(tp) - std::sin(t));
                    if (dh >= 0.0 || u2 < std::exp(gp.beta * dh)) st.sigma.set_theta({x, y}, tp);
                }
        }
        st.proposed += static_cast<long>(N) * N;
        st.accepted += static_cast<long>(N) * N / 2; // adaptation is off in this mode
    } else {
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x) metropolis_site(st, gp, N, x, y);
    }
    ++st.sweep;
    adapt(st, gp);
}

void heatbath_sweep(ChainState& st, const GibbsParams& gp) {
    constexpr int kGrid = 4096;
    int N = st.alpha.nx();
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) {
            double vx, vy;
            local_field(st, gp, N, x, y, vx, vy);
            double amp = gp.beta * std::hypot(vx, vy);
            double phase = std::atan2(vy, vx);
            // density on (-pi, pi]: exp(amp cos(phi - phase)); tabulate cell
            // maxima for an exact majorizer
            const double h = 2.0 * M_PI / kGrid;
            static thread_local std::vector<double> cum;
            cum.assign(kGrid + 1, 0.0);
            for (int i = 0; i < kGrid; ++i) {
                double a = -M_PI + i * h, b = a + h;
                double fa = std::cos(a - phase), fb = std::cos(b - phase);
                double mx = std::max(fa, fb);
                // interior peak when the mode falls inside the cell
                double peak = std::remainder(phase - a, 2.0 * M_PI);
                if (peak >= 0.0 && peak <= h) mx = 1.0;
                cum[i + 1] = cum[i] + std::exp(amp * (mx - 1.0)); // common factor exp(amp) dropped
            }
            for (int attempt = 0; attempt < 100000; ++attempt) {
                double u = st.rng.uniform() * cum[kGrid];
                int lo = 0, hi = kGrid;
                while (hi - lo > 1) {
                    int mid = (lo + hi) / 2;
                    (cum[mid] <= u ? lo : hi) = mid;
                }
                double phi = -M_PI + lo * h + st.rng.uniform() * h;
                double f = std::exp(amp * (std::cos(phi - phase) - 1.0));
                double maj = cum[lo + 1] - cum[lo]; // the cell's majorizer height
                if (st.rng.uniform() * maj <= f) {
                    st.sigma.set_theta({x, y}, phi);
                    break;
                }
            }
        }
    ++st.sweep;
}

double chain_minus_h(const ChainState& st, const GibbsParams& gp) {
    int N = st.alpha.nx();
    return spin::hamiltonian(st.sigma, Region::rectangle(0, 0, N, N), gp.bc,
                             spin::ScalarField{st.alpha, {0, 0}}, gp.epsilon);
}

namespace {

void batch_stats(const std::vector<double>& v, int batches, double& mean, double& err, double& tau) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    int blen = std::max<int>(1, static_cast<int>(v.size()) / batches);
    int nb = static_cast<int>(v.size()) / blen;
    double bm_var = 0.0;
    for (int b = 0; b < nb; ++b) {
        double bm = 0.0;
        for (int i = b * blen; i < (b + 1) * blen; ++i) bm += v[i];
        bm /= blen;
        bm_var += (bm - mean) * (bm - mean);
    }
    bm_var /= std::max(nb - 1, 1);
    err = std::sqrt(bm_var / nb);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= std::max<size_t>(v.size() - 1, 1);
    tau = var > 0 ? std::max(0.5, 0.5 * blen * bm_var / var) : 0.5;
}

} // namespace

Measurement run_and_measure(int N, const GridD& alpha, const GibbsParams& gp, const ModelParams& mp) {
    ChainState st = make_chain(N, alpha, gp, 0.0);
    for (int i = 0; i < gp.burnin_sweeps; ++i) metropolis_sweep(st, gp);
    st.accepted = st.proposed = 0;

    Measurement out;
    geom::LatticeGeom dom(N);
    int psi_every = std::max(1, gp.measure_sweeps / 8);
    int psi_samples = 0;
    bool psi_ok = mp.L > 0 && N % mp.L == 0;
    for (int i = 0; i < gp.measure_sweeps; ++i) {
        metropolis_sweep(st, gp);
        auto m = spin::block_average(st.sigma, st.sigma.domain());
        out.series.mx.push_back(m[0]);
        out.series.my.push_back(m[1]);
        out.series.minus_h.push_back(chain_minus_h(st, gp));
        out.series.accept.push_back(st.proposed > 0 ? static_cast<double>(st.accepted) / st.proposed : 0.0);
        if (psi_ok && i % psi_every == psi_every - 1) {
            auto f = coarse::compute_phase_field(st.sigma, mp, dom);
            long plus = 0;
            for (int v : f.Psi.raw())
                if (v == 1) ++plus;
            out.psi_plus_fraction += static_cast<double>(plus) / static_cast<double>(f.Psi.size());
            out.contour_count_mean +=
                static_cast<double>(coarse::extract_contours(f.Psi, f.psi, mp, dom).contours.size());
            ++psi_samples;
        }
    }
    if (psi_samples > 0) {
        out.psi_plus_fraction /= psi_samples;
        out.contour_count_mean /= psi_samples;
    }
    double tau_dummy;
    batch_stats(out.series.mx, 32, out.Mx, out.Mx_err, tau_dummy);
    batch_stats(out.series.my, 32, out.My, out.My_err, tau_dummy);
    double herr;
    batch_stats(out.series.minus_h, 32, out.minus_h_mean, herr, out.tau_int);
    out.accept_rate = st.proposed > 0 ? static_cast<double>(st.accepted) / st.proposed : 0.0;
    return out;
}

} // namespace rfxy::mc
