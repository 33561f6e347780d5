#pragma once

#include <string>
#include <vector>

#include "rfxy/params.hpp"

namespace rfxy::harness {

/// Declarative description of a batch experiment.  A spec fully determines a
/// run; its hash is embedded in every emitted artifact.
struct ExperimentSpec {
    std::string kind; // field-variance | sup-tail | dn-energy-diff | dirty-fraction |
                      // contour-census | surgery-gap | magnetization | variational-probe
    ModelParams params = ModelParams::from_epsilon(0.1);
    CleanConstants consts;
    int size = 64;       // lattice or box side
    int samples = 100;   // draws / boxes / contours per point
    uint64_t seed = 1;
    double beta = 1.0;
    std::vector<double> beta_grid;
    std::vector<double> eps_grid;
    std::vector<double> M_grid;
    std::vector<uint64_t> field_seeds;
    int sweeps = 1000, burnin = 500;
    std::string out_dir = ".";

    std::string canonical_json() const;
    uint64_t hash() const;
};

ExperimentSpec spec_from_json(const std::string& text);
/// Dotted-path overrides, e.g. "params.epsilon=0.2" or "size=128".
void apply_override(ExperimentSpec& spec, const std::string& key, const std::string& value);

struct RunRecord {
    std::string kind;
    uint64_t spec_hash = 0;
    double wall_seconds = 0;
    bool hard_checks_passed = true;
    std::vector<std::string> artifacts;
    std::string summary; // JSON
};

/// Executes the named pipeline, writes CSV/JSON artifacts under out_dir, and
/// aborts with a structured diagnostic on any hard assertion failure.
RunRecord run_experiment(const ExperimentSpec& spec);

/// Number of parallel workers: RFXY_THREADS, else the OpenMP default.
int worker_count();

} // namespace rfxy::harness
