#include "rfxy/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "rfxy/classify.hpp"
#include "rfxy/coarse.hpp"
#include "rfxy/csv.hpp"
#include "rfxy/field.hpp"
#include "rfxy/rng.hpp"
#include "rfxy/sampler.hpp"
#include "rfxy/surgery.hpp"

namespace rfxy::harness {

using json = nlohmann::json;

namespace {

json params_json(const ModelParams& p) {
    return json{{"epsilon", p.epsilon}, {"beta", p.beta},   {"s", p.s},       {"eta_lambda", p.eta_lambda},
                {"eta", p.eta},         {"chi", p.chi},     {"zeta", p.zeta}, {"xi", p.xi},
                {"rho", p.rho},         {"log_base", p.log_base == LogBase::natural ? "natural" : "base2"},
                {"ell", p.ell},         {"L", p.L},         {"lambda", p.lambda}};
}

json consts_json(const CleanConstants& c) {
    return json{{"A", c.A}, {"C_big", c.C_big}, {"c_small", c.c_small}, {"eta", c.eta}, {"C_tail", c.C_tail}};
}

} // namespace

std::string ExperimentSpec::canonical_json() const {
    json j{{"kind", kind},
           {"params", params_json(params)},
           {"consts", consts_json(consts)},
           {"size", size},
           {"samples", samples},
           {"seed", seed},
           {"beta", beta},
           {"beta_grid", beta_grid},
           {"eps_grid", eps_grid},
           {"M_grid", M_grid},
           {"field_seeds", field_seeds},
           {"sweeps", sweeps},
           {"burnin", burnin}};
    return j.dump(); // nlohmann sorts object keys: canonical by construction
}

uint64_t ExperimentSpec::hash() const {
    uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (unsigned char c : canonical_json()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ExperimentSpec spec_from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentSpec s;
    s.kind = j.value("kind", "");
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (p.contains("epsilon")) s.params.epsilon = p["epsilon"].get<double>();
        if (p.contains("beta")) s.params.beta = p["beta"].get<double>();
        if (p.contains("s")) s.params.s = p["s"].get<double>();
        if (p.contains("eta_lambda")) s.params.eta_lambda = p["eta_lambda"].get<double>();
        if (p.contains("eta")) s.params.eta = p["eta"].get<double>();
        if (p.contains("chi")) s.params.chi = p["chi"].get<double>();
        if (p.contains("zeta")) s.params.zeta = p["zeta"].get<double>();
        if (p.contains("xi")) s.params.xi = p["xi"].get<double>();
        if (p.contains("rho")) s.params.rho = p["rho"].get<double>();
        if (p.contains("log_base")) s.params.log_base = p["log_base"] == "base2" ? LogBase::base2 : LogBase::natural;
        s.params.derive_scales();
        if (p.contains("ell")) s.params.ell = p["ell"].get<int>();
        if (p.contains("L")) s.params.L = p["L"].get<int>();
        if (p.contains("lambda")) s.params.lambda = p["lambda"].get<double>();
    }
    if (j.contains("consts")) {
        const auto& c = j["consts"];
        if (c.contains("A")) s.consts.A = c["A"].get<double>();
        if (c.contains("C_big")) s.consts.C_big = c["C_big"].get<double>();
        if (c.contains("c_small")) s.consts.c_small = c["c_small"].get<double>();
        if (c.contains("eta")) s.consts.eta = c["eta"].get<double>();
        if (c.contains("C_tail")) s.consts.C_tail = c["C_tail"].get<double>();
    }
    s.size = j.value("size", s.size);
    s.samples = j.value("samples", s.samples);
    s.seed = j.value("seed", s.seed);
    s.beta = j.value("beta", s.beta);
    if (j.contains("beta_grid")) s.beta_grid = j["beta_grid"].get<std::vector<double>>();
    if (j.contains("eps_grid")) s.eps_grid = j["eps_grid"].get<std::vector<double>>();
    if (j.contains("M_grid")) s.M_grid = j["M_grid"].get<std::vector<double>>();
    if (j.contains("field_seeds")) s.field_seeds = j["field_seeds"].get<std::vector<uint64_t>>();
    s.sweeps = j.value("sweeps", s.sweeps);
    s.burnin = j.value("burnin", s.burnin);
    s.out_dir = j.value("out_dir", s.out_dir);
    return s;
}

void apply_override(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    auto d = [&value] { return std::stod(value); };
    auto i = [&value] { return std::stoi(value); };
    if (key == "kind") spec.kind = value;
    else if (key == "params.epsilon") {
        spec.params.epsilon = d();
        spec.params.derive_scales();
    } else if (key == "params.beta") spec.params.beta = d();
    else if (key == "params.xi") spec.params.xi = d();
    else if (key == "params.lambda") spec.params.lambda = d();
    else if (key == "params.ell") spec.params.ell = i();
    else if (key == "params.L") spec.params.L = i();
    else if (key == "consts.A") spec.consts.A = d();
    else if (key == "consts.C_big") spec.consts.C_big = d();
    else if (key == "consts.c_small") spec.consts.c_small = d();
    else if (key == "consts.C_tail") spec.consts.C_tail = d();
    else if (key == "size") spec.size = i();
    else if (key == "samples") spec.samples = i();
    else if (key == "seed") spec.seed = std::stoull(value);
    else if (key == "beta") spec.beta = d();
    else if (key == "sweeps") spec.sweeps = i();
    else if (key == "burnin") spec.burnin = i();
    else if (key == "out_dir") spec.out_dir = value;
    else throw ParamError("apply_override: unknown key " + key);
}

int worker_count() {
    if (const char* env = std::getenv("RFXY_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

std::string stamp(const ExperimentSpec& spec) {
    std::ostringstream os;
    os << "rfxy " << spec.kind << " hash=" << std::hex << spec.hash() << std::dec << " seed=" << spec.seed;
    return os.str();
}

std::string artifact_path(const ExperimentSpec& spec, const std::string& name) {
    return spec.out_dir + "/" + name;
}

void run_field_variance(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    int l = spec.size;
    field::ResolventSpec rs{field::Bc::D, l, spec.params.lambda, spec.params.epsilon};
    geom::Site x{l / 2, l / 2};
    int bins = field::annulus_count(l);

    std::vector<double> sum(bins, 0.0), sq(bins, 0.0);
    std::vector<std::vector<double>> vals(spec.samples);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < spec.samples; ++i) {
        auto rf = field::sample_alpha(spec.seed + i, l);
        vals[i] = field::annulus_values_at(rs, rf.alpha, x);
    }
    for (int i = 0; i < spec.samples; ++i)
        for (int s = 0; s < bins; ++s) {
            sum[s] += vals[i][s];
            sq[s] += vals[i][s] * vals[i][s];
        }

    auto path = artifact_path(spec, "field_variance.csv");
    CsvWriter csv(path, stamp(spec), {"s", "exact_var", "mc_var", "se", "z"});
    bool ok = true;
    double worst_z = 0.0;
    for (int s = 0; s < bins; ++s) {
        double exact = field::exact_annulus_variance(rs, s, x);
        double mean = sum[s] / spec.samples;
        double var = sq[s] / spec.samples - mean * mean;
        double se = exact > 0 ? exact * std::sqrt(2.0 / spec.samples) : 1e-300;
        double z = exact > 0 ? (var - exact) / se : (var == 0.0 ? 0.0 : 1e9);
        worst_z = std::max(worst_z, std::abs(z));
        if (std::abs(z) > 4.0) ok = false;
        csv.row({static_cast<double>(s), exact, var, se, z});
    }
    rec.artifacts.push_back(path);
    rec.hard_checks_passed = ok;
    summary["worst_z"] = worst_z;
}

void run_sup_tail(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    field::ResolventSpec rs{field::Bc::D, spec.size, spec.params.lambda, spec.params.epsilon};
    auto Ms = spec.M_grid.empty() ? std::vector<double>{2.0, 4.0, 6.0} : spec.M_grid;
    auto rows = field::sup_tail_experiment(rs, Ms, spec.samples, spec.seed);
    auto path = artifact_path(spec, "sup_tail.csv");
    CsvWriter csv(path, stamp(spec), {"M", "count", "total", "p_hat", "ci_lo", "ci_hi"});
    json jr = json::array();
    for (auto& r : rows) {
        csv.row({r.M, static_cast<double>(r.count), static_cast<double>(r.total), r.p_hat, r.ci_lo, r.ci_hi});
        jr.push_back({{"M", r.M}, {"p", r.p_hat}});
    }
    rec.artifacts.push_back(path);
    summary["tails"] = jr;
}

void run_dn_energy_diff(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    int l = spec.size;
    double lam = spec.params.lambda, eps = spec.params.epsilon;
    std::vector<double> vals(spec.samples);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < spec.samples; ++i)
        vals[i] = field::energy_diff_DN(field::sample_alpha(spec.seed + i, l).alpha, l, lam, eps);
    double mean = 0.0, sq = 0.0;
    for (double v : vals) mean += v;
    mean /= spec.samples;
    for (double v : vals) sq += (v - mean) * (v - mean);
    double se = std::sqrt(sq / std::max(spec.samples - 1, 1) / spec.samples);
    double exact = field::expected_energy_diff_DN(l, lam, eps);
    double bound = 2000.0 * eps * eps / (std::sqrt(lam) * l); // frozen calibration constant
    auto path = artifact_path(spec, "dn_energy_diff.csv");
    CsvWriter csv(path, stamp(spec), {"l", "lambda", "samples", "mean", "se", "bound", "exact_mean"});
    csv.row({static_cast<double>(l), lam, static_cast<double>(spec.samples), mean, se, bound, exact});
    rec.artifacts.push_back(path);
    rec.hard_checks_passed = std::abs(mean) <= bound && std::abs(mean - exact) <= 5.0 * se;
    summary["mean"] = mean;
    summary["bound"] = bound;
}

void run_dirty_fraction(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    auto grid = spec.eps_grid.empty() ? std::vector<double>{0.3, 0.2, 0.1} : spec.eps_grid;
    auto path = artifact_path(spec, "dirty_fraction.csv");
    CsvWriter csv(path, stamp(spec), {"eps", "ell", "dirty", "total", "p"});
    std::vector<double> ps;
    for (double eps : grid) {
        auto p = ModelParams::from_epsilon(eps);
        p.log_base = spec.params.log_base;
        int window = 2 * p.ell;
        std::vector<uint8_t> dirty(spec.samples, 0);
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < spec.samples; ++i) {
            auto rf = field::sample_alpha(spec.seed + i, window);
            classify::FieldProvider prov(rf.alpha, eps, p.lambda);
            dirty[i] =
                classify::classify_box(prov, {p.ell / 2, p.ell / 2}, p.ell, spec.consts, p).xi ? 0 : 1;
        }
        int count = 0;
        for (auto v : dirty) count += v;
        double frac = static_cast<double>(count) / spec.samples;
        ps.push_back(frac);
        csv.row({eps, static_cast<double>(p.ell), static_cast<double>(count),
                 static_cast<double>(spec.samples), frac});
    }
    rec.artifacts.push_back(path);
    bool monotone = true;
    for (size_t i = 1; i < ps.size(); ++i)
        if (!(ps[i] < ps[i - 1])) monotone = false;
    rec.hard_checks_passed = monotone;
    summary["fractions"] = ps;
}

void run_contour_census(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    mc::GibbsParams gp;
    gp.beta = spec.beta;
    gp.epsilon = spec.params.epsilon;
    gp.seed = spec.seed;
    gp.burnin_sweeps = spec.burnin;
    gp.measure_sweeps = 0;
    auto rf = field::sample_alpha(spec.seed ^ 0xf1e1d, spec.size);
    auto st = mc::make_chain(spec.size, rf.alpha, gp);
    for (int i = 0; i < spec.burnin; ++i) mc::metropolis_sweep(st, gp);

    // dump, reload and re-derive: the pipeline must not depend on hidden state
    auto bin_path = artifact_path(spec, "census_config.bin");
    spin::save_binary(st.sigma, bin_path);
    auto reloaded = spin::load_binary(bin_path);
    geom::LatticeGeom dom(spec.size);
    auto live = coarse::contours_of(st.sigma, spec.params, dom);
    auto replay = coarse::contours_of(reloaded, spec.params, dom);
    bool same = coarse::to_json(live) == coarse::to_json(replay);

    auto path = artifact_path(spec, "contour_census.csv");
    CsvWriter csv(path, stamp(spec), {"contours", "plus", "minus", "unsigned", "boundary"});
    double plus = 0, minus = 0, unsig = 0, bdry = 0;
    for (auto& c : live.contours) {
        if (c.sign > 0) plus += 1;
        else if (c.sign < 0) minus += 1;
        else unsig += 1;
        if (c.touches_boundary) bdry += 1;
    }
    csv.row({static_cast<double>(live.contours.size()), plus, minus, unsig, bdry});
    rec.artifacts.push_back(bin_path);
    rec.artifacts.push_back(path);
    rec.hard_checks_passed = same;
    summary["contours"] = live.contours.size();
    summary["replay_identical"] = same;
}

void run_surgery_gap(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    int n = spec.size;
    auto path = artifact_path(spec, "surgery_gap.csv");
    CsvWriter csv(path, stamp(spec), {"instance", "regular", "gap", "normalized_gap"});
    int regular_count = 0, positive = 0, attempted = 0;
    for (int t = 0; t < spec.samples; ++t) {
        uint64_t s = spec.seed + t;
        auto alpha = field::sample_alpha(s, n).alpha;
        spin::SpinConfig sigma(geom::Region::rectangle(0, 0, n, n));
        rng::Stream rs(s ^ 0xabcdef);
        double radius = n / 5.0, ramp = 3.0;
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                double d = std::hypot(x - n / 2, y - n / 2);
                double th = d <= radius ? M_PI : (d >= radius + ramp ? 0.0 : M_PI * (radius + ramp - d) / ramp);
                sigma.set_theta({x, y}, th + 0.04 * rs.normal());
            }
        geom::LatticeGeom dom(n);
        auto phase = coarse::compute_phase_field(sigma, spec.params, dom);
        auto cs = coarse::extract_contours(phase.Psi, phase.psi, spec.params, dom);
        if (cs.contours.size() != 1 || cs.contours[0].sign == 0 || cs.contours[0].touches_boundary) continue;
        ++attempted;
        classify::FieldProvider prov(alpha, spec.params.epsilon, spec.params.lambda);
        bool reg = classify::regular(cs.contours[0].support, prov, spec.consts, spec.params, dom).regular;
        if (!reg) {
            csv.row({static_cast<double>(t), 0.0, 0.0, 0.0});
            continue;
        }
        ++regular_count;
        auto ctx = surgery::make_context(cs.contours[0], phase.Psi, prov, spec.consts, spec.params, dom);
        auto rep = surgery::energy_gap(sigma, ctx);
        if (rep.gap > 0) ++positive;
        csv.row({static_cast<double>(t), 1.0, rep.gap, rep.normalized_gap});
    }
    rec.artifacts.push_back(path);
    summary["attempted"] = attempted;
    summary["regular"] = regular_count;
    summary["positive"] = positive;
}

void run_magnetization(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    auto betas = spec.beta_grid.empty() ? std::vector<double>{spec.beta} : spec.beta_grid;
    auto seeds = spec.field_seeds;
    if (seeds.empty())
        for (int i = 0; i < 10; ++i) seeds.push_back(spec.seed + 100 + i);
    auto path = artifact_path(spec, "magnetization.csv");
    CsvWriter csv(path, stamp(spec), {"beta", "field_seed", "Mx", "My", "Mx_err", "My_err", "accept", "tau_int"});
    int ordered = 0, total = 0;
    for (double beta : betas)
        for (auto fs : seeds) {
            auto alpha = field::sample_alpha(fs, spec.size).alpha;
            mc::GibbsParams gp;
            gp.beta = beta;
            gp.epsilon = spec.params.epsilon;
            gp.seed = spec.seed ^ fs;
            gp.burnin_sweeps = spec.burnin;
            gp.measure_sweeps = spec.sweeps;
            auto m = mc::run_and_measure(spec.size, alpha, gp, spec.params);
            csv.row({beta, static_cast<double>(fs), m.Mx, m.My, m.Mx_err, m.My_err, m.accept_rate, m.tau_int});
            ++total;
            if (std::abs(m.Mx) > 2.0 * std::abs(m.My)) ++ordered;
        }
    rec.artifacts.push_back(path);
    summary["ordered"] = ordered;
    summary["total"] = total;
}

void run_variational_probe(const ExperimentSpec& spec, RunRecord& rec, json& summary) {
    int l = spec.size;
    auto path = artifact_path(spec, "variational_probe.csv");
    CsvWriter csv(path, stamp(spec), {"draw", "numeric_aligned", "numeric_perp", "prediction_aligned"});
    std::vector<double> a(spec.samples), b(spec.samples), q(spec.samples);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < spec.samples; ++i) {
        auto alpha = field::sample_alpha(spec.seed + i, l).alpha;
        auto r0 = surgery::variational_probe(l, 0.0, alpha, spec.params.epsilon);
        auto r1 = surgery::variational_probe(l, M_PI_2, alpha, spec.params.epsilon);
        a[i] = r0.numeric_max;
        b[i] = r1.numeric_max;
        q[i] = r0.quadratic_prediction;
    }
    int wins = 0;
    for (int i = 0; i < spec.samples; ++i) {
        if (a[i] > b[i]) ++wins;
        csv.row({static_cast<double>(i), a[i], b[i], q[i]});
    }
    rec.artifacts.push_back(path);
    summary["wins"] = wins;
    summary["total"] = spec.samples;
}

} // namespace

RunRecord run_experiment(const ExperimentSpec& spec) {
    auto violations = validate_params(spec.params);
    if (!violations.empty()) {
        std::string msg = "run_experiment: invalid spec:";
        for (auto& v : violations) msg += "\n  - " + v;
        throw ParamError(msg);
    }
#ifdef _OPENMP
    omp_set_num_threads(worker_count());
#endif
    RunRecord rec;
    rec.kind = spec.kind;
    rec.spec_hash = spec.hash();
    auto t0 = std::chrono::steady_clock::now();
    json summary;
    summary["kind"] = spec.kind;
    summary["hash"] = rec.spec_hash;

    if (spec.kind == "field-variance") run_field_variance(spec, rec, summary);
    else if (spec.kind == "sup-tail") run_sup_tail(spec, rec, summary);
    else if (spec.kind == "dn-energy-diff") run_dn_energy_diff(spec, rec, summary);
    else if (spec.kind == "dirty-fraction") run_dirty_fraction(spec, rec, summary);
    else if (spec.kind == "contour-census") run_contour_census(spec, rec, summary);
    else if (spec.kind == "surgery-gap") run_surgery_gap(spec, rec, summary);
    else if (spec.kind == "magnetization") run_magnetization(spec, rec, summary);
    else if (spec.kind == "variational-probe") run_variational_probe(spec, rec, summary);
    else throw ParamError("run_experiment: unknown kind '" + spec.kind + "'");

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary["hard_checks_passed"] = rec.hard_checks_passed;
    rec.summary = summary.dump();

    std::ofstream out(artifact_path(spec, spec.kind + "_summary.json"));
    out << rec.summary << "\n";
    rec.artifacts.push_back(artifact_path(spec, spec.kind + "_summary.json"));
    if (!rec.hard_checks_passed) throw NumericError("run_experiment: hard assertion failed; see " + rec.summary);
    return rec;
}

} // namespace rfxy::harness
