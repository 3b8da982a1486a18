#include "doctest.h"

#include "slowfast/frozen.hpp"

#include <cmath>

using namespace slowfast;

namespace {
Vec v1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

EstimateOpts fast_opts() {
    EstimateOpts o;
    o.burn_in = 5.0;
    o.sample_time = 50.0;
    o.n_chains = 8;
    o.scheme = {SchemeKind::TamedEM, 1e-3};
    o.seed = 0;
    return o;
}
} // namespace

TEST_CASE("simulate_frozen: grid, determinism, one hand-checked step") {
    const CoefficientSystem sys = make_model2(0.0);
    const FrozenSystem fr = frozen_coefficients(sys, 0.5, v1(1.0));
    const StepScheme scheme{SchemeKind::TamedEM, 1e-3};
    const NoiseBundle noise(21, 0, sys.dims, 1e-3, 1e-3);
    const FrozenPath path = simulate_frozen(fr, v1(2.0), 0.5, scheme, noise);

    REQUIRE(path.s.size() == 501);
    CHECK(path.s[0] == 0.0);
    CHECK(path.s[500] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(path.exploded);
    CHECK(path.y(0, 0) == 2.0);

    // replicate the first update by hand: tamed drift + diffusion increment
    Vec fv(1), finc(1), dw(1);
    Mat gv(1, 1);
    fr.drift(v1(2.0), fv);
    drift_increment(scheme.kind, scheme.h, fv, finc);
    fr.diffusion(v1(2.0), gv);
    noise.frozen_increment(0, scheme.h, dw);
    CHECK(path.y(1, 0) == doctest::Approx(2.0 + finc[0] + gv(0, 0) * dw[0]).epsilon(1e-15));

    // identical bundle -> identical path; different seed -> different path
    const FrozenPath again = simulate_frozen(fr, v1(2.0), 0.5, scheme, noise);
    CHECK((path.y - again.y).cwiseAbs().maxCoeff() == 0.0);
    const NoiseBundle other(22, 0, sys.dims, 1e-3, 1e-3);
    const FrozenPath moved = simulate_frozen(fr, v1(2.0), 0.5, scheme, other);
    CHECK((path.y - moved.y).cwiseAbs().maxCoeff() > 0.0);
}

// For coefficient pairs affine in y, the stationarity-identity control
// variates cancel the fluctuations pointwise, so the estimator returns the
// exact averaged drift with the standard error pinned at its floor.
TEST_CASE("averaged drift of model2 matches the closed form exactly") {
    const EstimateOpts opts = fast_opts();

    const FrozenEstimate e0 = estimate_bbar(make_model2(0.0), 1.0, v1(1.0), v1(0.0), opts);
    CHECK(e0.n_chains == 8);
    CHECK(e0.burn_in == doctest::Approx(5.0));
    CHECK(e0.variance_reduction);
    CHECK(e0.stderr_[0] < 1e-9);
    CHECK(std::abs(e0.bbar[0] - 41.0 / 60.0) <= 4.0 * e0.stderr_[0]);

    const FrozenEstimate e1 = estimate_bbar(make_model2(1.0), 1.0, v1(1.0), v1(0.0), opts);
    CHECK(e1.stderr_[0] < 1e-9);
    CHECK(std::abs(e1.bbar[0] - 97.0 / 120.0) <= 4.0 * e1.stderr_[0]);
}

TEST_CASE("averaged drift is independent of the chain start (burn-in works)") {
    const EstimateOpts opts = fast_opts();
    const CoefficientSystem sys = make_model2(0.0);
    const FrozenEstimate a = estimate_bbar(sys, 1.0, v1(1.0), v1(0.0), opts);
    const FrozenEstimate b = estimate_bbar(sys, 1.0, v1(1.0), v1(5.0), opts);
    CHECK(std::abs(a.bbar[0] - b.bbar[0]) < 1e-9);
}

TEST_CASE("estimator without control variates stays consistent") {
    EstimateOpts opts = fast_opts();
    opts.variance_reduction = false;
    const FrozenEstimate e = estimate_bbar(make_model2(0.0), 1.0, v1(1.0), v1(0.0), opts);
    CHECK_FALSE(e.variance_reduction);
    CHECK(e.stderr_[0] > 1e-9); // genuine Monte Carlo error now
    CHECK(std::abs(e.bbar[0] - 41.0 / 60.0) <= 6.0 * e.stderr_[0]);
}

TEST_CASE("w1-reading system: averaged drift at a given noise value") {
    const CoefficientSystem sys = make_model3();
    const EstimateOpts opts = fast_opts();
    const FrozenEstimate e = estimate_bbar(sys, 0.5, v1(1.0), v1(0.0), opts, v1(0.7));
    // b affine in y -> exact: bbar = -|sin 0.7| + 1/8
    CHECK(e.stderr_[0] < 1e-9);
    CHECK(std::abs(e.bbar[0] - (-std::sin(0.7) + 0.125)) <= 4.0 * e.stderr_[0]);
}

TEST_CASE("stationarity residual is small at stationarity") {
    EstimateOpts opts = fast_opts();
    opts.sample_time = 30.0;
    const FrozenEstimate e = estimate_bbar(make_model2(0.0), 1.0, v1(1.0), v1(0.0), opts);
    // raw Ito-balance average: zero-mean under the invariant measure, so the
    // observed residual must be consistent with zero at its own stderr
    CHECK(e.stationarity_stderr > 0.0);
    CHECK(std::abs(e.stationarity_residual) <= 5.0 * e.stationarity_stderr + 0.1);
}

TEST_CASE("estimator input validation") {
    const CoefficientSystem sys = make_model2(0.0);
    EstimateOpts opts = fast_opts();
    opts.n_chains = 1;
    CHECK_THROWS_AS(estimate_bbar(sys, 1.0, v1(1.0), v1(0.0), opts), Error);
    opts = fast_opts();
    opts.sample_time = 0.0;
    CHECK_THROWS_AS(estimate_bbar(sys, 1.0, v1(1.0), v1(0.0), opts), Error);
    CHECK_THROWS_AS(estimate_bbar(sys, 1.0, Vec(Vec::Zero(2)), v1(0.0), fast_opts()), Error);
}

TEST_CASE("non-ergodic fast dynamics are detected, not averaged over") {
    // bistable drift with weak noise: chains fall into one of the wells at
    // +-1 and stay there, so chain means disagree far beyond the
    // within-chain prediction
    CoefficientSystem sys;
    sys.tag = "bistable-test";
    sys.dims = Dims{1, 1, 1, 1};
    sys.b = [](double, const Vec&, const Vec& y, const Vec&, Vec& out) { out[0] = y[0]; };
    sys.sigma = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.0; };
    sys.f = [](double, const Vec&, const Vec& y, Vec& out) {
        out[0] = y[0] - y[0] * y[0] * y[0];
    };
    sys.g = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.05; };

    EstimateOpts opts;
    opts.burn_in = 20.0;
    opts.sample_time = 20.0;
    opts.n_chains = 8;
    opts.scheme = {SchemeKind::TamedEM, 1e-3};
    opts.variance_reduction = false;
    CHECK_THROWS_AS(estimate_bbar(sys, 0.0, v1(0.0), v1(0.0), opts), NonErgodicWarning);
}

TEST_CASE("synchronous coupling contracts at the drift gap") {
    // frozen model2 at (t, x) = (0, 0): dY = -8Y ds + Y dW, so the squared
    // gap decays at exactly 2*8 - 1 = 15
    const CoefficientSystem sys = make_model2(0.0);
    const FrozenSystem fr = frozen_coefficients(sys, 0.0, v1(0.0));
    const ContractionReport rep =
        contraction_test(fr, v1(2.0), v1(-2.0), 1.0, 2000, {SchemeKind::TamedEM, 1e-3}, 0);
    CHECK(rep.claimed_beta == doctest::Approx(15.0));
    CHECK(rep.mean_sq_gap.front() == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(rep.rate > 14.0);
    CHECK(rep.rate < 16.0);
    CHECK(rep.rate_stderr > 0.0);
    CHECK(rep.rate_stderr < 1.0);
    // strictly decreasing mean-square gap on the record grid
    for (std::size_t i = 1; i < rep.mean_sq_gap.size(); ++i)
        CHECK(rep.mean_sq_gap[i] < rep.mean_sq_gap[i - 1]);
}

TEST_CASE("contraction test rejects degenerate gaps") {
    // equal starts: input validation
    const FrozenSystem fr = frozen_coefficients(make_model2(0.0), 0.0, v1(0.0));
    CHECK_THROWS_AS(
        contraction_test(fr, v1(1.0), v1(1.0), 1.0, 100, {SchemeKind::TamedEM, 1e-3}, 0), Error);

    // distinct starts whose squared gap sits below the 1e-12 numerical floor:
    // too few usable grid points remain to fit a rate
    FrozenSystem det;
    det.m = 1;
    det.d2 = 1;
    det.x0 = v1(0.0);
    det.drift = [](const Vec& y, Vec& out) { out[0] = -8.0 * y[0]; };
    det.diffusion = [](const Vec&, Mat& out) { out(0, 0) = 0.0; };
    CHECK_THROWS_AS(
        contraction_test(det, v1(1e-7), v1(0.0), 1.0, 10, {SchemeKind::TamedEM, 1e-3}, 0),
        DegenerateGap);
}

TEST_CASE("moment curve matches a deterministic decay oracle") {
    // dY = -Y ds, no noise: E|Y_s|^2 = y0^2 exp(-2s) exactly
    FrozenSystem fr;
    fr.m = 1;
    fr.d2 = 1;
    fr.x0 = v1(0.0);
    fr.drift = [](const Vec& y, Vec& out) { out[0] = -y[0]; };
    fr.diffusion = [](const Vec&, Mat& out) { out(0, 0) = 0.0; };
    HypothesisParams claims;
    claims.beta_k[2] = 2.0;
    fr.claims = claims;

    const MomentCurve curve =
        moment_bound_test(fr, v1(2.0), 2, 1.0, 4, {SchemeKind::TamedEM, 1e-4}, 0);
    CHECK(curve.k == 2);
    REQUIRE(curve.s.size() == curve.moment.size());
    CHECK(curve.sup_moment == doctest::Approx(4.0).epsilon(1e-12));
    for (std::size_t i = 0; i < curve.s.size(); ++i) {
        const double expect = 4.0 * std::exp(-2.0 * curve.s[i]);
        CHECK(curve.moment[i] == doctest::Approx(expect).epsilon(2e-3));
    }
}

TEST_CASE("moment orders outside the declared claims are refused") {
    FrozenSystem fr;
    fr.m = 1;
    fr.d2 = 1;
    fr.x0 = v1(0.0);
    fr.drift = [](const Vec& y, Vec& out) { out[0] = -y[0]; };
    fr.diffusion = [](const Vec&, Mat& out) { out(0, 0) = 0.0; };

    // no claims at all
    fr.claims.reset();
    CHECK_THROWS_AS(moment_bound_test(fr, v1(1.0), 2, 0.5, 4), MissingKProcess);

    // claims capped at k_max = 4
    HypothesisParams claims;
    claims.beta_k[2] = 2.0;
    claims.k_max = 4;
    fr.claims = claims;
    CHECK_NOTHROW(moment_bound_test(fr, v1(1.0), 2, 0.5, 4));
    CHECK_THROWS_AS(moment_bound_test(fr, v1(1.0), 6, 0.5, 4), MissingKProcess);
}

TEST_CASE("ensemble averages converge to the time-average reference") {
    const CoefficientSystem sys = make_model2(0.0);
    const FrozenEstimate ref = estimate_bbar(sys, 1.0, v1(1.0), v1(0.0), fast_opts());
    const std::vector<double> grid{0.05, 0.25, 1.0, 2.0};
    const ErgodicCurve curve = ergodic_convergence_test(sys, 1.0, v1(1.0), v1(0.0), grid, 400,
                                                        ref, {SchemeKind::TamedEM, 1e-3}, 0);
    REQUIRE(curve.deviation.size() == 4);
    // transient visible at s = 0.05 (closed form: |19/60 - E Y_s^2| ~ 0.13),
    // gone at s = 2 (mixing time ~ 1/8)
    CHECK(curve.deviation.front() > 0.05);
    CHECK(curve.deviation.back() < curve.deviation.front());
    CHECK(curve.deviation.back() <= 5.0 * curve.stderr_.back() + 1e-3);
}
