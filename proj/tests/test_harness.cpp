#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rfxy/harness.hpp"
#include "rfxy/params.hpp"

using namespace rfxy;
using namespace rfxy::harness;

TEST_CASE("validate_params") {
    SUBCASE("the proof-sketch parameter point has no violations") {
        ModelParams p = ModelParams::from_epsilon(0.1);
        p.s = 1.0 / 64.0;
        p.eta_lambda = 1.0 / 16.0;
        p.eta = 1.0 / 40.0;
        p.chi = p.zeta = 1.0 / 32.0;
        p.derive_scales();
        CHECK(validate_params(p).empty());
    }
    SUBCASE("eta_lambda = 2s violates the open interval") {
        ModelParams p = ModelParams::from_epsilon(0.1);
        p.eta_lambda = 2.0 * p.s;
        p.derive_scales();
        auto v = validate_params(p);
        bool found = false;
        for (auto& m : v)
            if (m.find("eta_lambda") != std::string::npos) found = true;
        CHECK(found);
    }
    SUBCASE("scales recompute per the floor/ceil formulas") {
        ModelParams p = ModelParams::from_epsilon(0.1);
        CHECK(p.ell == scale_ell(0.1, p.s, p.log_base));
        CHECK(p.L == scale_L(0.1, p.s, p.log_base));
        CHECK(validate_params(p).empty());
        p.ell *= 2; // now inconsistent with the formula
        auto v = validate_params(p);
        CHECK(!v.empty());
    }
    SUBCASE("rho is pinned to 5/4") {
        ModelParams p = ModelParams::from_epsilon(0.1);
        p.rho = 1.3;
        CHECK(!validate_params(p).empty());
    }
}

TEST_CASE("experiment specs") {
    SUBCASE("json round trip preserves the hash") {
        ExperimentSpec a;
        a.kind = "field-variance";
        a.params = ModelParams::from_epsilon(0.2);
        a.size = 32;
        a.samples = 10;
        a.seed = 99;
        auto b = spec_from_json(a.canonical_json());
        CHECK(a.hash() == b.hash());
    }
    SUBCASE("overrides update leaves") {
        ExperimentSpec s;
        apply_override(s, "params.epsilon", "0.2");
        CHECK(s.params.epsilon == 0.2);
        CHECK(s.params.ell == scale_ell(0.2, s.params.s, s.params.log_base));
        apply_override(s, "samples", "7");
        CHECK(s.samples == 7);
        CHECK_THROWS_AS(apply_override(s, "nope", "1"), ParamError);
    }
    SUBCASE("invalid specs abort with every violation listed") {
        ExperimentSpec s;
        s.kind = "field-variance";
        s.params.epsilon = 0.1;
        s.params.derive_scales();
        s.params.rho = 2.0;
        s.params.chi = 0.5;
        try {
            run_experiment(s);
            CHECK(false);
        } catch (const ParamError& e) {
            std::string msg = e.what();
            CHECK(msg.find("rho") != std::string::npos);
            CHECK(msg.find("chi") != std::string::npos);
        }
    }
    SUBCASE("artifacts carry the spec hash") {
        namespace fs = std::filesystem;
        ExperimentSpec s;
        s.kind = "variational-probe";
        s.params = ModelParams::from_epsilon(0.1);
        s.size = 8;
        s.samples = 3;
        s.out_dir = "harness_test_out";
        fs::create_directories(s.out_dir);
        auto rec = run_experiment(s);
        CHECK(rec.hard_checks_passed);
        std::ifstream f(rec.artifacts[0]);
        std::string first;
        std::getline(f, first);
        std::ostringstream os;
        os << std::hex << rec.spec_hash;
        CHECK(first.find(os.str()) != std::string::npos);
        fs::remove_all(s.out_dir);
    }
}

TEST_CASE("contour census composition property") {
    namespace fs = std::filesystem;
    ExperimentSpec s;
    s.kind = "contour-census";
    s.params = ModelParams::from_epsilon(0.1); // L = 8 divides 32
    s.size = 32;
    s.beta = 2.0;
    s.burnin = 80;
    s.seed = 4;
    s.out_dir = "harness_census_out";
    fs::create_directories(s.out_dir);
    auto rec = run_experiment(s);
    CHECK(rec.hard_checks_passed); // replay of the dumped configuration is identical
    fs::remove_all(s.out_dir);
}

TEST_CASE("worker count env override") {
    setenv("RFXY_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    unsetenv("RFXY_THREADS");
    CHECK(worker_count() >= 1);
}
