// rfxy command line: field generation, classification, contours, surgery,
// sampling and batch experiments over the random-field XY toolkit.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rfxy/classify.hpp"
#include "rfxy/coarse.hpp"
#include "rfxy/csv.hpp"
#include "rfxy/field.hpp"
#include "rfxy/harness.hpp"
#include "rfxy/sampler.hpp"
#include "rfxy/rng.hpp"
#include "rfxy/surgery.hpp"

using namespace rfxy;

namespace {

int cmd_gen_field(uint64_t seed, int side, double lambda, double eps, const std::string& bc,
                  const std::string& out) {
    field::ResolventSpec spec{bc == "N" ? field::Bc::N : field::Bc::D, side, lambda, eps};
    auto rf = field::sample_alpha(seed, side);
    auto fs = field::resolvent_apply(spec, rf);
    std::string base = out.empty() ? "field" : out;
    {
        std::ofstream f(base + ".bin", std::ios::binary);
        uint32_t header[2] = {static_cast<uint32_t>(side), 1u};
        f.write(reinterpret_cast<const char*>(header), sizeof(header));
        f.write(reinterpret_cast<const char*>(fs.g.v.data()), static_cast<std::streamsize>(fs.g.v.size() * 8));
        f.write(reinterpret_cast<const char*>(fs.m.v.data()), static_cast<std::streamsize>(fs.m.v.size() * 8));
    }
    std::ofstream meta(base + ".json");
    meta.precision(17);
    meta << "{\"seed\":" << seed << ",\"side\":" << side << ",\"lambda\":" << lambda << ",\"epsilon\":" << eps
         << ",\"bc\":\"" << (bc == "N" ? "N" : "D") << "\",\"residual\":" << fs.residual << "}\n";
    std::printf("wrote %s.bin and %s.json (residual %.3e)\n", base.c_str(), base.c_str(), fs.residual);
    return 0;
}

int cmd_classify(uint64_t seed, double eps, int L0, int grid_side, const std::string& grid_out) {
    auto p = ModelParams::from_epsilon(eps);
    CleanConstants cc;
    if (grid_side > 0) {
        // Xi over all L0-blocks of a grid_side lattice, as CSV for plotting
        auto rf = field::sample_alpha(seed, grid_side);
        classify::FieldProvider prov(rf.alpha, eps, p.lambda);
        CsvWriter csv(grid_out.empty() ? "xi_grid.csv" : grid_out, "rfxy xi-grid seed=" + std::to_string(seed),
                      {"bx", "by", "xi"});
        for (int by = 0; by + L0 <= grid_side; by += L0)
            for (int bx = 0; bx + L0 <= grid_side; bx += L0) {
                auto rep = classify::classify_box(prov, {bx, by}, L0, cc, p);
                csv.row({static_cast<double>(bx / L0), static_cast<double>(by / L0), rep.xi ? 1.0 : 0.0});
            }
        std::printf("wrote %s\n", grid_out.empty() ? "xi_grid.csv" : grid_out.c_str());
        return 0;
    }
    auto rf = field::sample_alpha(seed, 2 * L0);
    classify::FieldProvider prov(rf.alpha, eps, p.lambda);
    auto rep = classify::classify_box(prov, {L0 / 2, L0 / 2}, L0, cc, p);
    std::printf("{\"clean\":%s,\"c\":[%d,%d,%d,%d,%d,%d],\"g_inf\":%.17g,\"grad_inf\":%.17g,"
                "\"grad2_mean\":%.17g,\"alpha_inf\":%.17g}\n",
                rep.xi ? "true" : "false", rep.c1, rep.c2, rep.c3, rep.c4, rep.c5, rep.c6, rep.g_inf,
                rep.grad_inf, rep.grad2_mean, rep.alpha_inf);
    return rep.xi ? 0 : 1;
}

int cmd_contours(const std::string& config_path, double eps) {
    auto sigma = spin::load_binary(config_path);
    auto p = ModelParams::from_epsilon(eps);
    geom::LatticeGeom dom(sigma.domain().bounds().width());
    auto cs = coarse::contours_of(sigma, p, dom);
    std::printf("%s\n", coarse::to_json(cs).c_str());
    return 0;
}

int cmd_surgery(uint64_t seed, double eps, int n) {
    auto params = ModelParams::from_epsilon(eps);
    auto alpha = field::sample_alpha(seed, n).alpha;
    spin::SpinConfig sigma(geom::Region::rectangle(0, 0, n, n));
    rng::Stream rs(seed ^ 0xabcdef);
    double radius = n / 5.0, ramp = 3.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double d = std::hypot(x - n / 2, y - n / 2);
            double th = d <= radius ? M_PI : (d >= radius + ramp ? 0.0 : M_PI * (radius + ramp - d) / ramp);
            sigma.set_theta({x, y}, th + 0.04 * rs.normal());
        }
    geom::LatticeGeom dom(n);
    auto phase = coarse::compute_phase_field(sigma, params, dom);
    auto cs = coarse::extract_contours(phase.Psi, phase.psi, params, dom);
    if (cs.contours.size() != 1 || cs.contours[0].sign == 0 || cs.contours[0].touches_boundary) {
        std::fprintf(stderr, "droplet did not produce a usable contour (count %zu)\n", cs.contours.size());
        return 1;
    }
    classify::FieldProvider prov(alpha, params.epsilon, params.lambda);
    CleanConstants cc;
    auto ctx = surgery::make_context(cs.contours[0], phase.Psi, prov, cc, params, dom);
    auto rep = surgery::energy_gap(sigma, ctx);
    std::printf("{\"gap\":%.17g,\"normalized_gap\":%.17g,\"trace\":%s}\n", rep.gap, rep.normalized_gap,
                ctx.trace.to_json().c_str());
    return rep.gap > 0 ? 0 : 1;
}

int cmd_sample(int n, double beta, double eps, uint64_t seed, int burnin, int sweeps, const std::string& out) {
    auto p = ModelParams::from_epsilon(eps > 0 ? eps : 0.1);
    mc::GibbsParams gp;
    gp.beta = beta;
    gp.epsilon = eps;
    gp.seed = seed;
    gp.burnin_sweeps = burnin;
    gp.measure_sweeps = sweeps;
    auto alpha = field::sample_alpha(seed ^ 0xfeed, n).alpha;
    auto m = mc::run_and_measure(n, alpha, gp, p);
    CsvWriter csv(out, "rfxy sample seed=" + std::to_string(seed), {"sweep", "minus_h", "Mx", "My", "accept"});
    for (size_t i = 0; i < m.series.minus_h.size(); ++i)
        csv.row({static_cast<double>(i), m.series.minus_h[i], m.series.mx[i], m.series.my[i], m.series.accept[i]});
    std::printf("{\"Mx\":%.17g,\"My\":%.17g,\"Mx_err\":%.17g,\"My_err\":%.17g,\"tau_int\":%.17g}\n", m.Mx, m.My,
                m.Mx_err, m.My_err, m.tau_int);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"random-field XY model toolkit"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    int side = 64, L0 = 8, n = 64, burnin = 500, sweeps = 1000;
    double lambda = 0.01, eps = 0.1, beta = 1.0;
    std::string bc = "D", out, config, spec_path;
    std::vector<std::string> overrides;

    auto* gen = app.add_subcommand("gen-field", "sample alpha and solve the massive resolvent");
    gen->add_option("--seed", seed);
    gen->add_option("--side", side);
    gen->add_option("--lambda", lambda);
    gen->add_option("--eps", eps);
    gen->add_option("--bc", bc)->check(CLI::IsMember({"D", "N"}));
    gen->add_option("--out", out);

    int grid_side = 0;
    std::string grid_out;
    auto* cls = app.add_subcommand("classify", "clean/dirty verdict for one sampled box");
    cls->add_option("--seed", seed);
    cls->add_option("--eps", eps);
    cls->add_option("--L0", L0);
    cls->add_option("--grid", grid_side, "classify every block of a lattice, write a Xi grid CSV");
    cls->add_option("--grid-out", grid_out);

    auto* con = app.add_subcommand("contours", "extract contours from a stored configuration");
    con->add_option("config", config)->required();
    con->add_option("--eps", eps);

    auto* sur = app.add_subcommand("surgery", "droplet surgery instance with trace");
    sur->add_option("--seed", seed);
    sur->add_option("--eps", eps);
    sur->add_option("--size", n);

    auto* smp = app.add_subcommand("sample", "Metropolis chain time series");
    smp->add_option("--N", n);
    smp->add_option("--beta", beta);
    smp->add_option("--eps", eps);
    smp->add_option("--seed", seed);
    smp->add_option("--burnin", burnin);
    smp->add_option("--sweeps", sweeps);
    smp->add_option("--out", out)->required();

    std::string kind;
    auto* exp = app.add_subcommand("experiment", "run a batch experiment");
    exp->add_option("kind", kind)->required();
    exp->add_option("--spec", spec_path);
    exp->add_option("--set", overrides, "dotted-path overrides key=value");

    auto* val = app.add_subcommand("validate", "check every parameter window");
    val->add_option("--spec", spec_path);
    val->add_option("--eps", eps);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_field(seed, side, lambda, eps, bc, out);
        if (cls->parsed()) return cmd_classify(seed, eps, L0, grid_side, grid_out);
        if (con->parsed()) return cmd_contours(config, eps);
        if (sur->parsed()) return cmd_surgery(seed, eps, n);
        if (smp->parsed()) return cmd_sample(n, beta, eps, seed, burnin, sweeps, out);
        if (exp->parsed()) {
            harness::ExperimentSpec spec;
            if (!spec_path.empty()) {
                std::ifstream f(spec_path);
                std::stringstream ss;
                ss << f.rdbuf();
                spec = harness::spec_from_json(ss.str());
            }
            spec.kind = kind;
            for (auto& ov : overrides) {
                auto pos = ov.find('=');
                if (pos == std::string::npos) throw ParamError("override must be key=value");
                harness::apply_override(spec, ov.substr(0, pos), ov.substr(pos + 1));
            }
            auto rec = harness::run_experiment(spec);
            std::printf("%s\n", rec.summary.c_str());
            return rec.hard_checks_passed ? 0 : 1;
        }
        if (val->parsed()) {
            ModelParams p;
            if (!spec_path.empty()) {
                std::ifstream f(spec_path);
                std::stringstream ss;
                ss << f.rdbuf();
                p = harness::spec_from_json(ss.str()).params;
            } else {
                p = ModelParams::from_epsilon(eps);
            }
            auto v = validate_params(p);
            if (v.empty()) {
                std::printf("ok: all parameter windows satisfied\n");
                return 0;
            }
            for (auto& msg : v) std::printf("violation: %s\n", msg.c_str());
            return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
