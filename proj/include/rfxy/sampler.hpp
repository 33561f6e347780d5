#pragma once

#include <vector>

#include "rfxy/coarse.hpp"
#include "rfxy/rng.hpp"
#include "rfxy/spin.hpp"

namespace rfxy::mc {

using spin::SpinConfig;

struct GibbsParams {
    double beta = 1.0;
    double epsilon = 0.1;
    spin::BoundaryCondition bc = spin::BoundaryCondition::e1();
    int burnin_sweeps = 500;
    int measure_sweeps = 1000;
    double proposal_width = 1.0;
    bool adapt_width = true; // tune to 40-60% acceptance during burn-in, then freeze
    uint64_t seed = 1;
    bool checkerboard = false;
};

struct ChainState {
    SpinConfig sigma;
    GridD alpha; // quenched; never changes during a run
    long sweep = 0;
    double width = 1.0;
    long accepted = 0, proposed = 0;
    rng::Stream rng{1};
};

ChainState make_chain(int N, const GridD& alpha, const GibbsParams& gp, double init_angle = 0.0);

/// One pass of single-site Metropolis with uniform angle proposals.
void metropolis_sweep(ChainState& st, const GibbsParams& gp);

/// Exact conditional resampling on a 4096-point angular grid with in-cell
/// rejection against the true density.
void heatbath_sweep(ChainState& st, const GibbsParams& gp);

/// -H of the current configuration under the chain's boundary condition.
double chain_minus_h(const ChainState& st, const GibbsParams& gp);

struct Series {
    std::vector<double> minus_h, mx, my, accept;
};

struct Measurement {
    double Mx = 0, My = 0, Mx_err = 0, My_err = 0;
    double minus_h_mean = 0;
    double tau_int = 0;     // integrated autocorrelation of -H via batch means
    double accept_rate = 0;
    double psi_plus_fraction = 0; // Psi statistics sampled along the chain
    double contour_count_mean = 0;
    Series series;
};

/// Burn in, then measure block magnetizations with 32-batch error bars plus
/// Psi statistics and contour counts along the chain.
Measurement run_and_measure(int N, const GridD& alpha, const GibbsParams& gp, const ModelParams& mp);

} // namespace rfxy::mc
