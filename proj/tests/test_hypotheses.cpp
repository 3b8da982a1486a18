#include "doctest.h"

#include "slowfast/hypotheses.hpp"

#include <cmath>

using namespace slowfast;

namespace {
SampleSpec quick_spec(long n = 5000) {
    SampleSpec s;
    s.n_samples = n;
    return s;
}

// dissipative linear pair with constant slow coefficients
CoefficientSystem tame_system(double claimed_beta) {
    CoefficientSystem s;
    s.tag = "tame-test";
    s.dims = Dims{1, 1, 1, 1};
    s.params.beta = claimed_beta;
    s.params.theta2 = 1;
    s.params.theta3 = 1;
    s.params.theta5 = 1;
    s.params.theta6 = 1;
    s.b = [](double, const Vec&, const Vec&, const Vec&, Vec& out) { out[0] = 1.0; };
    s.sigma = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 1.0; };
    s.f = [](double, const Vec&, const Vec& y, Vec& out) { out[0] = -y[0]; };
    s.g = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
    s.k_of_r = [](double, double) { return 9.0; };
    return s;
}
} // namespace

TEST_CASE("monotonicity: model2 passes with the exact empirical gap") {
    // f = sqrt(t) x - 8y and g = t + x + y give
    // 2<df, dy> + |dg|^2 = (-16 + 1) |dy|^2 exactly
    const CheckReport rep = check_monotonicity(make_model2(0.0), quick_spec());
    CHECK(rep.pass);
    CHECK(rep.condition == "monotonicity");
    CHECK(rep.n_samples == 5000);
    CHECK(rep.empirical_best == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(rep.worst_margin <= 1e-12); // exact cancellation up to roundoff
    CHECK(rep.note.find("no counterexample") != std::string::npos);
}

TEST_CASE("monotonicity: model1 passes and the empirical gap brackets 5") {
    // linear part -3y plus 1-Lipschitz sin y in g: the true gap is
    // inf(-2<df,dy> - |dg|^2)/|dy|^2 = 5; the declared claim is the
    // conservative 3
    const CheckReport rep = check_monotonicity(make_model1(), quick_spec(20000));
    CHECK(rep.pass);
    CHECK(rep.empirical_best >= 4.9);
    CHECK(rep.empirical_best <= 6.0);
}

TEST_CASE("monotonicity: an anti-dissipative pair is refuted with a witness") {
    CoefficientSystem sys = tame_system(1.0);
    sys.f = [](double, const Vec&, const Vec& y, Vec& out) { out[0] = y[0]; }; // expanding
    const CheckReport rep = check_monotonicity(sys, quick_spec(2000));
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_margin > 0.0);
    CHECK(!rep.witness.empty());
    CHECK(rep.note.find("counterexample") != std::string::npos);
}

TEST_CASE("coercivity: model2 order 16 holds, order 17 needs an absurd constant") {
    SampleSpec spec = quick_spec();
    spec.y_radius = 50.0; // violations live at large |y|
    const CheckReport ok = check_coercivity(make_model2(0.0), 16, spec);
    CHECK(ok.pass);
    CHECK(ok.condition == "coercivity(k=16)");
    CHECK(ok.fitted.at("C") <= 4096.0);

    // at k = 17 the inequality only survives with C beyond the search
    // ceiling: the deterministic tail probe at |y| = 500 forces it
    const CheckReport bad = check_coercivity(make_model2(0.0), 17, spec);
    CHECK_FALSE(bad.pass);
    CHECK(bad.fitted.at("C_required") > 4096.0);
    CHECK(!bad.witness.empty());
}

TEST_CASE("coercivity: declared orders of model1 hold") {
    const CheckReport rep = check_coercivity(make_model1(), 4, quick_spec());
    CHECK(rep.pass);
    CHECK(rep.fitted.at("beta_k") == doctest::Approx(5.0)); // the declared claim
}

TEST_CASE("coercivity: noise-free linear decay passes with a searched gap") {
    const CheckReport rep = check_coercivity(tame_system(1.5), 3, quick_spec(2000));
    CHECK(rep.pass);
    CHECK(rep.fitted.at("beta_k") > 0.0);
}

TEST_CASE("slow growth: built-in declarations hold") {
    CHECK(check_slow_growth(make_model1(), quick_spec()).pass);
    CHECK(check_slow_growth(make_model2(0.0), quick_spec()).pass);
    CHECK(check_slow_growth(make_model2(1.0), quick_spec()).pass);
    CHECK(check_slow_growth(make_model3(), quick_spec()).pass);
}

TEST_CASE("slow growth: requires the declared local Lipschitz process") {
    CoefficientSystem sys = tame_system(1.5);
    sys.k_of_r = nullptr;
    CHECK_THROWS_AS(check_slow_growth(sys, quick_spec(100)), MissingKProcess);
}

TEST_CASE("slow growth: an outward cubic drift is refuted") {
    CoefficientSystem sys = tame_system(1.5);
    sys.params.theta5 = 3;
    sys.b = [](double, const Vec& x, const Vec&, const Vec&, Vec& out) {
        out[0] = x[0] * x[0] * x[0]; // 2<x,b> = 2x^4, not one-sidedly bounded
    };
    const CheckReport rep = check_slow_growth(sys, quick_spec(2000));
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_margin > 0.0);
}

TEST_CASE("slow regularity: model2 passes and the fitted exponents are sharp") {
    const CheckReport rep = check_slow_regularity(make_model2(0.0), 5.0, quick_spec(3000));
    CHECK(rep.pass);
    REQUIRE(rep.fitted.count("t_exponent_b") == 1);
    REQUIRE(rep.fitted.count("t_exponent_fg") == 1);
    CHECK(rep.fitted.at("t_exponent_b") > 0.9);   // b is C^1 in t
    CHECK(rep.fitted.at("t_exponent_b") < 1.1);
    CHECK(rep.fitted.at("t_exponent_fg") > 0.4);  // sqrt(t) in f
    CHECK(rep.fitted.at("t_exponent_fg") < 0.62);
    // informational Lipschitz quotients of the fast drift: |d f/d x| = sqrt(t)
    // tops out at 1, |d f/d y| = 8
    CHECK(rep.fitted.at("lip_x_f") == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep.fitted.at("lip_y_f") == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("slow regularity: time-free coefficients fit no time exponent") {
    const CheckReport rep = check_slow_regularity(make_model1(), 5.0, quick_spec(3000));
    CHECK(rep.pass);
    CHECK(rep.fitted.count("t_exponent_b") == 0);
    CHECK(rep.fitted.count("t_exponent_fg") == 0);
}

TEST_CASE("slow regularity: W1-reading drift shows the Brownian 1/2 exponent") {
    const CheckReport rep = check_slow_regularity(make_model3(), 5.0, quick_spec(3000));
    CHECK(rep.pass);
    REQUIRE(rep.fitted.count("t_exponent_b") == 1);
    CHECK(rep.fitted.at("t_exponent_b") > 0.35);
    CHECK(rep.fitted.at("t_exponent_b") < 0.65);
}

TEST_CASE("checks are pure functions of (system, spec)") {
    const SampleSpec spec = quick_spec(2000);
    const CheckReport a = check_monotonicity(make_model1(), spec);
    const CheckReport b = check_monotonicity(make_model1(), spec);
    CHECK(a.worst_margin == b.worst_margin); // bitwise
    CHECK(a.empirical_best == b.empirical_best);
    CHECK(a.witness == b.witness);
    CHECK(a.n_samples == b.n_samples);

    SampleSpec other = spec;
    other.seed = 1;
    const CheckReport c = check_monotonicity(make_model1(), other);
    CHECK(c.pass); // a different sample set reaches the same verdict
}
