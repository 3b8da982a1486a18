#include "doctest.h"

#include "slowfast/config.hpp"

#include <cmath>
#include <string>

using namespace slowfast;

TEST_CASE("config text: sections, comments, whitespace, CRLF") {
    const ConfigFile cfg = ConfigFile::parse_text("# leading comment\n"
                                                  "top = 1\n"
                                                  "[run]\r\n"
                                                  "; a full-line comment (inline comments are not stripped)\n"
                                                  "eps = 0.1, 0.01\n"
                                                  "  n_paths =  50\n"
                                                  "\n"
                                                  "[model]\n"
                                                  "tag = model1\n");
    CHECK(cfg.has("top"));
    CHECK(cfg.get_long("top", 0) == 1);
    CHECK(cfg.get_string("model.tag", "") == "model1");
    CHECK(cfg.get_long("run.n_paths", 0) == 50);
    const std::vector<double> eps = cfg.get_list("run.eps", {});
    REQUIRE(eps.size() == 2);
    CHECK(eps[0] == doctest::Approx(0.1));
    CHECK(eps[1] == doctest::Approx(0.01));
    CHECK_FALSE(cfg.has("run.missing"));
    CHECK(cfg.get_double("run.missing", 7.5) == 7.5); // fallback
}

TEST_CASE("config text: malformed lines carry their line number") {
    try {
        ConfigFile::parse_text("[run]\nokay = 1\nnot a key value line\n", "test.ini");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("test.ini:3") != std::string::npos);
    }
    CHECK_THROWS_AS(ConfigFile::parse_text("[run\nx = 1\n"), Error);  // unterminated header
    CHECK_THROWS_AS(ConfigFile::parse_text("[]\n"), Error);           // empty section
    CHECK_THROWS_AS(ConfigFile::parse_text("= 3\n"), Error);          // empty key
    CHECK_THROWS_AS(ConfigFile::parse_file("no_such_config.ini"), Error);
}

TEST_CASE("typed getters validate on access") {
    const ConfigFile cfg = ConfigFile::parse_text("[a]\n"
                                                  "num = 1.5e-3\n"
                                                  "word = hello\n"
                                                  "yes1 = true\n yes2 = on\n yes3 = 1\n"
                                                  "no1 = false\n no2 = off\n no3 = 0\n"
                                                  "trail = 12x\n");
    CHECK(cfg.get_double("a.num", 0) == doctest::Approx(1.5e-3));
    CHECK_THROWS_AS(cfg.get_double("a.word", 0), Error);
    CHECK_THROWS_AS(cfg.get_long("a.trail", 0), Error); // partial parse is an error
    CHECK(cfg.get_bool("a.yes1", false));
    CHECK(cfg.get_bool("a.yes2", false));
    CHECK(cfg.get_bool("a.yes3", false));
    CHECK_FALSE(cfg.get_bool("a.no1", true));
    CHECK_FALSE(cfg.get_bool("a.no2", true));
    CHECK_FALSE(cfg.get_bool("a.no3", true));
    CHECK_THROWS_AS(cfg.get_bool("a.word", false), Error);
}

TEST_CASE("experiment config: full mapping from text") {
    const ConfigFile cfg = ConfigFile::parse_text("[model]\n"
                                                  "tag = model2\n"
                                                  "lambda1 = 1\n"
                                                  "[run]\n"
                                                  "T = 0.5\n"
                                                  "p = 4\n"
                                                  "eps = 0.1, 0.05, 0.01\n"
                                                  "h_slow = 1e-3\n"
                                                  "fast_substeps = 20\n"
                                                  "n_paths = 64\n"
                                                  "seed = 9\n"
                                                  "workers = 3\n"
                                                  "x0 = 1.5\n"
                                                  "y0 = 0.5\n"
                                                  "[bbar]\n"
                                                  "provider = on-demand\n"
                                                  "burn_in = 2\n"
                                                  "sample_time = 12\n"
                                                  "chains = 4\n"
                                                  "h = 5e-4\n"
                                                  "t_quantum = 0.125\n"
                                                  "x_quantum = 0.0625\n"
                                                  "variance_reduction = true\n"
                                                  "[output]\n"
                                                  "directory = /tmp/somewhere\n"
                                                  "dump_paths = true\n");
    const ExperimentConfig ec = experiment_config_from(cfg);
    CHECK(ec.model_tag == "model2");
    CHECK(ec.lambda1 == doctest::Approx(1.0));
    CHECK(ec.T == doctest::Approx(0.5));
    CHECK(ec.p == doctest::Approx(4.0));
    REQUIRE(ec.eps.size() == 3);
    CHECK(ec.eps[1] == doctest::Approx(0.05));
    CHECK(ec.h_slow == doctest::Approx(1e-3));
    CHECK(ec.fast_substeps == 20);
    CHECK(ec.n_paths == 64);
    CHECK(ec.seed == 9);
    CHECK(ec.workers == 3);
    CHECK(ec.x0[0] == doctest::Approx(1.5));
    CHECK(ec.provider.kind == "on-demand");
    CHECK(ec.provider.estimate.burn_in == doctest::Approx(2.0));
    CHECK(ec.provider.estimate.sample_time == doctest::Approx(12.0));
    CHECK(ec.provider.estimate.n_chains == 4);
    CHECK(ec.provider.estimate.scheme.h == doctest::Approx(5e-4));
    CHECK(ec.provider.t_quantum == doctest::Approx(0.125));
    CHECK(ec.provider.x_quantum == doctest::Approx(0.0625));
    CHECK(ec.output_dir == "/tmp/somewhere");
    CHECK(ec.dump_paths);

    const CoefficientSystem sys = ec.build_system();
    CHECK(sys.tag.rfind("model2", 0) == 0); // lambda1 != 0 suffixes the tag
    CHECK(ec.initial_x(sys).size() == 1);
    CHECK(ec.initial_y(sys)[0] == doctest::Approx(0.5));
    CHECK_NOTHROW(ec.validate(sys));
}

TEST_CASE("experiment config: unknown keys fail loudly") {
    const ConfigFile cfg = ConfigFile::parse_text("[run]\nn_pathz = 3\n");
    try {
        experiment_config_from(cfg);
        FAIL("expected unknown-key error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("run.n_pathz") != std::string::npos);
    }
}

TEST_CASE("experiment validation rejects broken invariants") {
    ExperimentConfig ec; // defaults: model2, lambda1 = 0
    const CoefficientSystem sys = ec.build_system();
    CHECK_NOTHROW(ec.validate(sys));

    ExperimentConfig bad = ec;
    bad.eps = {0.1, 0.1, 0.01}; // not strictly decreasing
    CHECK_THROWS_AS(bad.validate(sys), Error);

    bad = ec;
    bad.eps = {0.1, 0.01, -1e-3};
    CHECK_THROWS_AS(bad.validate(sys), Error);

    bad = ec;
    bad.n_paths = 1;
    CHECK_THROWS_AS(bad.validate(sys), Error);

    bad = ec;
    bad.h_slow = 0.0;
    CHECK_THROWS_AS(bad.validate(sys), Error);

    bad = ec;
    bad.p = 0.0;
    CHECK_THROWS_AS(bad.validate(sys), Error);
}

TEST_CASE("eps above the admissible range is rejected for feedback models") {
    ExperimentConfig ec;
    ec.model_tag = "model2";
    ec.lambda1 = 1.0; // epsilon0 = lambda2 / lambda1 = 0.25
    const CoefficientSystem sys = ec.build_system();
    ec.eps = {0.2, 0.1};
    CHECK_NOTHROW(ec.validate(sys));
    ec.eps = {0.5, 0.1};
    CHECK_THROWS_AS(ec.validate(sys), EpsilonOutOfRange);
}

TEST_CASE("error exponent is capped by the declared moment orders") {
    ExperimentConfig ec;
    ec.model_tag = "model2";
    ec.lambda1 = 1.0; // theta4 = 2, k_max = 16 -> p < 2k/theta4 = 16
    ec.eps = {0.2, 0.1};
    const CoefficientSystem sys = ec.build_system();
    ec.p = 15.0;
    CHECK_NOTHROW(ec.validate(sys));
    ec.p = 17.0;
    CHECK_THROWS_AS(ec.validate(sys), Error);
}

TEST_CASE("block-size rule: declared list or eps^gamma_tilde rounding") {
    ExperimentConfig ec;
    ec.h_slow = 1e-3;
    const HypothesisParams params = make_model2(0.0).params;

    // gamma_tilde = 1 / (1 + min{2 gamma1, gamma2, 1/2}) with gamma2 = 1/2
    CHECK(ExperimentConfig::gamma_tilde(params) == doctest::Approx(2.0 / 3.0));
    CHECK(ExperimentConfig::gamma_tilde(make_model1().params) == doctest::Approx(2.0 / 3.0));
    CHECK(ExperimentConfig::gamma_tilde(make_model3().params) == doctest::Approx(2.0 / 3.0));

    // declared list takes precedence, indexed by level
    ec.delta = {0.5, 0.25};
    CHECK(ec.delta_for(0.1, 0, params) == doctest::Approx(0.5));
    CHECK(ec.delta_for(0.01, 1, params) == doctest::Approx(0.25));

    // default rule: eps^(2/3) rounded to a positive multiple of h_slow
    ec.delta = {};
    const double expect = std::round(std::pow(0.01, 2.0 / 3.0) / 1e-3) * 1e-3;
    CHECK(ec.delta_for(0.01, 0, params) == doctest::Approx(expect));
    // tiny eps still gives at least one slow step
    CHECK(ec.delta_for(1e-9, 0, params) >= 1e-3);
}
