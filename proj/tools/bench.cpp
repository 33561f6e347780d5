// Benchmark: OpenMP kernels against the serial reference implementations.

#include <chrono>
#include <cstdio>

#include "rfxy/coarse.hpp"
#include "rfxy/field.hpp"
#include "rfxy/harness.hpp"
#include "rfxy/reference.hpp"
#include "rfxy/rng.hpp"
#include "rfxy/sampler.hpp"

using namespace rfxy;
using h_clock = std::chrono::steady_clock;

namespace {

template <class F>
double time_of(F&& f, int reps) {
    auto t0 = h_clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double>(h_clock::now() - t0).count() / reps;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s serial %10.4f s   kernel %10.4f s   speedup %5.2fx\n", name, serial, parallel,
                serial / parallel);
}

} // namespace

int main() {
    std::printf("threads: %d\n", harness::worker_count());

    {
        int l = 96;
        auto rf = field::sample_alpha(1, l);
        field::ResolventSpec spec{field::Bc::D, l, 0.01, 1.0};
        double ts = time_of([&] { ref::dense_resolvent(spec, rf.alpha); }, 1);
        double tp = time_of([&] { field::resolvent_apply(spec, rf); }, 5);
        report("resolvent l=96", ts, tp);
    }
    {
        int n = 512;
        auto p = ModelParams::from_epsilon(0.1);
        geom::LatticeGeom dom(n);
        spin::SpinConfig s(geom::Region::rectangle(0, 0, n, n));
        rng::Stream rs(2);
        for (auto site : s.domain().sites()) s.set_theta(site, 0.3 * rs.normal());
        // the reference scan is quartic; run it on a quarter-size lattice and
        // rescale for an order-of-magnitude comparison
        geom::LatticeGeom small(128);
        spin::SpinConfig ssmall(geom::Region::rectangle(0, 0, 128, 128));
        for (auto site : ssmall.domain().sites()) ssmall.set_theta(site, 0.3 * rs.normal());
        double ts = time_of([&] { ref::psi0_scan(ssmall, p, small); }, 1) * 16.0;
        double tp = time_of([&] { coarse::compute_psi0(s, p, dom); }, 3);
        report("psi0 n=512 (ref scaled)", ts, tp);
    }
    {
        int n = 256;
        auto alpha = field::sample_alpha(3, n).alpha;
        mc::GibbsParams gp;
        gp.beta = 2.0;
        gp.epsilon = 0.2;
        gp.adapt_width = false;
        auto seq = mc::make_chain(n, alpha, gp);
        double ts = time_of([&] { mc::metropolis_sweep(seq, gp); }, 20);
        mc::GibbsParams gc = gp;
        gc.checkerboard = true;
        auto par = mc::make_chain(n, alpha, gc);
        double tp = time_of([&] { mc::metropolis_sweep(par, gc); }, 20);
        report("metropolis sweep n=256", ts, tp);
    }
    {
        int n = 1024;
        spin::SpinConfig s(geom::Region::rectangle(0, 0, n, n));
        rng::Stream rs(4);
        for (auto site : s.domain().sites()) s.set_theta(site, rs.uniform(-3.0, 3.0));
        geom::Region r128 = geom::Region::rectangle(0, 0, 128, 128);
        double ts = time_of([&] { ref::dirichlet_energy(s, r128); }, 1) * 64.0;
        double tp = time_of([&] { spin::dirichlet_energy(s, s.domain()); }, 3);
        report("dirichlet n=1024 (ref scaled)", ts, tp);
    }
    return 0;
}
