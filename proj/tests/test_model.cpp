#include "doctest.h"

#include "slowfast/model.hpp"

#include <cmath>
#include <limits>

using namespace slowfast;

namespace {
Vec v1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}
} // namespace

TEST_CASE("model1 coefficient hand values") {
    const CoefficientSystem sys = make_model1();
    CHECK(sys.tag == "model1");
    CHECK_FALSE(sys.slow_reads_w1);
    const double t = 0.3, x = 0.7, y = -1.2;
    const CoefficientValues v = evaluate_coefficients(sys, t, v1(x), v1(y), v1(0.5));
    CHECK(v.b[0] == doctest::Approx(-x * x * x + x + y * y * y).epsilon(1e-14));
    CHECK(v.sigma(0, 0) == doctest::Approx(x).epsilon(1e-14));
    CHECK(v.f[0] ==
          doctest::Approx(-x * x * y * y * y - 3.0 * y - std::pow(y, 5)).epsilon(1e-14));
    CHECK(v.g(0, 0) == doctest::Approx(std::sin(x) + std::sin(y)).epsilon(1e-14));
}

TEST_CASE("model2 coefficient hand values and closed-form averaged drift") {
    const double lam = 0.5;
    const CoefficientSystem sys = make_model2(lam);
    const double t = 0.25, x = 2.0, y = 3.0;
    const CoefficientValues v = evaluate_coefficients(sys, t, v1(x), v1(y), v1(0.0));
    CHECK(v.b[0] == doctest::Approx(0.125 - 72.0 + lam * 3.0).epsilon(1e-14));
    CHECK(v.sigma(0, 0) == doctest::Approx(2.0625).epsilon(1e-14));
    CHECK(v.f[0] == doctest::Approx(-23.0).epsilon(1e-14));
    CHECK(v.g(0, 0) == doctest::Approx(5.25).epsilon(1e-14));

    // closed form at (t, x) = (1, 1): stationary mean m = 1/8, second moment
    // M = 19/60, so bbar = 1 - 19/60 + lambda1 / 8
    REQUIRE(static_cast<bool>(sys.analytic_bbar));
    Vec bbar(1);
    sys.analytic_bbar(1.0, v1(1.0), Vec(), bbar);
    CHECK(bbar[0] == doctest::Approx(1.0 - 19.0 / 60.0 + lam / 8.0).epsilon(1e-14));

    const CoefficientSystem sys0 = make_model2(0.0);
    sys0.analytic_bbar(1.0, v1(1.0), Vec(), bbar);
    CHECK(bbar[0] == doctest::Approx(41.0 / 60.0).epsilon(1e-14));
    const CoefficientSystem sys1 = make_model2(1.0);
    sys1.analytic_bbar(1.0, v1(1.0), Vec(), bbar);
    CHECK(bbar[0] == doctest::Approx(97.0 / 120.0).epsilon(1e-14));
}

TEST_CASE("model3 coefficient hand values and w1-reading averaged drift") {
    const CoefficientSystem sys = make_model3();
    CHECK(sys.slow_reads_w1);
    const double t = 0.4, x = 0.5, y = 2.0, w1 = -0.3;
    const CoefficientValues v = evaluate_coefficients(sys, t, v1(x), v1(y), v1(w1));
    CHECK(v.b[0] ==
          doctest::Approx(-std::abs(std::sin(w1)) * x * x * x + y).epsilon(1e-14));
    CHECK(v.sigma(0, 0) == doctest::Approx(x).epsilon(1e-14));
    CHECK(v.f[0] == doctest::Approx(x - 8.0 * y).epsilon(1e-14));
    CHECK(v.g(0, 0) == doctest::Approx(y).epsilon(1e-14));

    // bbar(t, x, w1) = -|sin w1| x^3 + x/8 (stationary mean of f = x - 8y)
    REQUIRE(static_cast<bool>(sys.analytic_bbar));
    Vec bbar(1);
    sys.analytic_bbar(0.5, v1(1.0), v1(0.7), bbar);
    CHECK(bbar[0] == doctest::Approx(-std::sin(0.7) + 0.125).epsilon(1e-14));
}

TEST_CASE("model1 has no closed-form averaged drift") {
    CHECK_FALSE(static_cast<bool>(make_model1().analytic_bbar));
}

TEST_CASE("declared local Lipschitz processes") {
    CHECK(make_model1().k_of_r(0.7, 1.0) == doctest::Approx(9.0));
    CHECK(make_model1().k_of_r(0.0, 2.0) == doctest::Approx(27.0));
    CHECK(make_model2(0.0).k_of_r(1.0, 1.0) == doctest::Approx(10.0));
    CHECK(make_model2(0.0).k_of_r(0.0, 2.0) == doctest::Approx(26.0));
}

TEST_CASE("admissible eps range follows the declared lambda weights") {
    CHECK(make_model1().params.epsilon0() == doctest::Approx(1.5));
    CHECK(make_model2(0.0).params.epsilon0() == doctest::Approx(1.0));
    CHECK(make_model2(1.0).params.epsilon0() == doctest::Approx(0.25));
    CHECK(make_model2(2.0).params.epsilon0() == doctest::Approx(0.125));
    CHECK(make_model3().params.epsilon0() == doctest::Approx(0.25)); // lambda2/lambda1 = 0.25/1
}

TEST_CASE("built-in declarations are self-consistent") {
    CHECK_NOTHROW(make_model1().params.validate());
    CHECK_NOTHROW(make_model2(0.0).params.validate());
    CHECK_NOTHROW(make_model2(1.0).params.validate());
    CHECK_NOTHROW(make_model3().params.validate());
}

TEST_CASE("parameter validation rejects inconsistent declarations") {
    HypothesisParams ok = make_model2(0.0).params;
    CHECK_NOTHROW(ok.validate());

    HypothesisParams p = ok;
    p.lambda1 = 1.0;
    p.lambda2 = 0.0;
    CHECK_THROWS_AS(p.validate(), Error); // dissipation must match the growth weight

    p = ok;
    p.lambda1 = 0.0;
    p.lambda2 = 0.5;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.theta4 = 1.0;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.theta1 = -0.5;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.gamma1 = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.gamma2 = 1.5;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.alpha2 = 0.5;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.beta_k[1] = 0.5; // moment order below 2
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.beta_k[4] = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);

    p = ok;
    p.k_max = 1;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("make_builtin dispatches by tag") {
    CHECK(make_builtin("model1").tag == "model1");
    CHECK(make_builtin("model2", 1.0).params.lambda1 == doctest::Approx(1.0));
    CHECK(make_builtin("model3").slow_reads_w1);
    CHECK_THROWS_AS(make_builtin("model9"), Error);
}

TEST_CASE("evaluate_coefficients validates inputs and outputs") {
    const CoefficientSystem sys = make_model1();
    // wrong input dimension
    CHECK_THROWS_AS(evaluate_coefficients(sys, 0.0, Vec(Vec::Zero(2)), v1(0.0), v1(0.0)),
                    Error);

    // a map producing a non-finite value at finite inputs
    CoefficientSystem bad = make_model1();
    bad.b = [](double, const Vec&, const Vec&, const Vec&, Vec& out) {
        out[0] = std::numeric_limits<double>::quiet_NaN();
    };
    try {
        evaluate_coefficients(bad, 0.5, v1(1.0), v1(1.0), v1(0.0));
        FAIL("expected NonFiniteCoefficient");
    } catch (const NonFiniteCoefficient& e) {
        CHECK(e.which() == "b");
    }

    // a map resizing its buffer
    CoefficientSystem resizer = make_model1();
    resizer.f = [](double, const Vec&, const Vec&, Vec& out) { out = Vec::Zero(3); };
    CHECK_THROWS_AS(evaluate_coefficients(resizer, 0.0, v1(1.0), v1(1.0), v1(0.0)), Error);
}

TEST_CASE("frozen coefficients pin (t, x) and inherit the claims") {
    const CoefficientSystem sys = make_model2(0.0);
    const FrozenSystem fr = frozen_coefficients(sys, 0.25, v1(2.0));
    CHECK(fr.t0 == doctest::Approx(0.25));
    CHECK(fr.x0[0] == doctest::Approx(2.0));
    REQUIRE(fr.claims.has_value());
    CHECK(fr.claims->beta == doctest::Approx(sys.params.beta));

    Vec f(1);
    Mat g(1, 1);
    fr.drift(v1(3.0), f);
    fr.diffusion(v1(3.0), g);
    CHECK(f[0] == doctest::Approx(0.5 * 2.0 - 24.0).epsilon(1e-14)); // sqrt(t) x - 8y
    CHECK(g(0, 0) == doctest::Approx(0.25 + 2.0 + 3.0).epsilon(1e-14));

    CHECK_THROWS_AS(frozen_coefficients(sys, 0.0, Vec(Vec::Zero(2))), Error);
}

TEST_CASE("model fingerprints are stable and declaration-sensitive") {
    const std::string fp1 = model_fingerprint(make_model2(0.0));
    const std::string fp2 = model_fingerprint(make_model2(0.0));
    CHECK(fp1 == fp2); // pure function of the declaration
    CHECK(!fp1.empty());
    CHECK(fp1 != model_fingerprint(make_model2(1.0)));
    CHECK(fp1 != model_fingerprint(make_model1()));
    CHECK(fp1 != model_fingerprint(make_model3()));

    // any declared-constant change must move the fingerprint
    CoefficientSystem tweaked = make_model2(0.0);
    tweaked.params.beta = 14.0;
    CHECK(model_fingerprint(tweaked) != fp1);
}
