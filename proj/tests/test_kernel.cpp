#include "doctest.h"

#include "slowfast/kernel.hpp"

#include <cmath>

using namespace slowfast;

namespace {
Vec v1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

// constant-coefficient system: every structural gap the block-freezing
// scheme introduces vanishes identically
CoefficientSystem constant_system() {
    CoefficientSystem s;
    s.tag = "const-test";
    s.dims = Dims{1, 1, 1, 1};
    s.b = [](double, const Vec&, const Vec&, const Vec&, Vec& out) { out[0] = 1.5; };
    s.sigma = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.5; };
    s.f = [](double, const Vec&, const Vec&, Vec& out) { out[0] = 2.0; };
    s.g = [](double, const Vec&, const Vec&, Mat& out) { out(0, 0) = 0.25; };
    return s;
}
} // namespace

TEST_CASE("drift increments: explicit and tamed") {
    Vec v(2), out(2);
    v << 3.0, 4.0; // |v| = 5
    drift_increment(SchemeKind::ExplicitEM, 0.1, v, out);
    CHECK(out[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.4).epsilon(1e-15));

    drift_increment(SchemeKind::TamedEM, 0.1, v, out);
    // h v / (1 + h |v|) with one scalar factor for the whole vector
    CHECK(out[0] == doctest::Approx(0.3 / 1.5).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.4 / 1.5).epsilon(1e-15));

    // the tamed increment never exceeds 1 in norm, however large the drift
    Vec huge = v1(1e12);
    drift_increment(SchemeKind::TamedEM, 0.1, huge, out);
    CHECK(out.norm() <= 1.0 + 1e-12);
}

TEST_CASE("exact_ratio accepts integer ratios only") {
    CHECK(detail::exact_ratio(1.0, 0.25, "t") == 4);
    CHECK(detail::exact_ratio(0.0625, 0.0009765625, "t") == 64); // 2^-4 / 2^-10
    CHECK(detail::exact_ratio(1.0, 1e-3, "t") == 1000);
    CHECK_THROWS_AS(detail::exact_ratio(1.0, 0.3, "t"), GridMismatch);
    CHECK_THROWS_AS(detail::exact_ratio(1e-3, 1.0000001e-3, "t"), GridMismatch);
    CHECK_THROWS_AS(detail::exact_ratio(0.0, 0.1, "t"), GridMismatch);
    CHECK_THROWS_AS(detail::exact_ratio(1.0, -0.1, "t"), GridMismatch);
}

TEST_CASE("coupled path: shapes, grid, and W1 bookkeeping") {
    const CoefficientSystem sys = make_model2(0.0);
    const double h = 1.0 / 64.0, T = 0.25;
    CoupledOptions opt;
    opt.T = T;
    opt.slow = {SchemeKind::TamedEM, h};
    opt.fast = {SchemeKind::TamedEM, h / 8.0};
    const NoiseBundle noise(3, 0, sys.dims, h, h / 8.0);
    const PathPair path = simulate_coupled(sys, 0.1, v1(1.0), v1(1.0), opt, noise);

    REQUIRE(path.t.size() == 17);
    CHECK(path.steps() == 16);
    CHECK(path.x.rows() == 17);
    CHECK(path.y.rows() == 17);
    CHECK(path.w1.rows() == 17);
    CHECK_FALSE(path.exploded);
    for (std::size_t k = 0; k < path.t.size(); ++k)
        CHECK(path.t[k] == doctest::Approx(static_cast<double>(k) * h).epsilon(1e-15));
    CHECK(path.x(0, 0) == 1.0);
    CHECK(path.y(0, 0) == 1.0);
    CHECK(path.w1(0, 0) == 0.0);

    // recorded W1 is the running sum of the bundle's base-step increments
    Vec dw(1);
    double acc = 0.0;
    for (int k = 0; k < 16; ++k) {
        noise.w1_increment(static_cast<std::uint64_t>(k), dw);
        acc += dw[0];
        CHECK(path.w1(k + 1, 0) == doctest::Approx(acc).epsilon(1e-14));
    }
}

TEST_CASE("coupled path is a pure function of (system, options, bundle)") {
    const CoefficientSystem sys = make_model1();
    CoupledOptions opt;
    opt.T = 0.125;
    opt.slow = {SchemeKind::TamedEM, 1.0 / 128.0};
    opt.fast = {SchemeKind::TamedEM, 1.0 / 1024.0};
    const NoiseBundle noise(11, 5, sys.dims, opt.slow.h, opt.fast.h);
    const PathPair a = simulate_coupled(sys, 0.2, v1(1.0), v1(0.5), opt, noise);
    const PathPair b = simulate_coupled(sys, 0.2, v1(1.0), v1(0.5), opt, noise);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w1 - b.w1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the same W1 path drives every scale-separation level") {
    const CoefficientSystem sys = make_model2(0.0);
    const double h = 1.0 / 64.0;
    CoupledOptions o1, o2;
    o1.T = o2.T = 0.25;
    o1.slow = o2.slow = {SchemeKind::TamedEM, h};
    o1.fast = {SchemeKind::TamedEM, h / 8.0};
    o2.fast = {SchemeKind::TamedEM, h / 16.0};
    // same (seed, path); different fast base step and substream per level
    const NoiseBundle n1(42, 9, sys.dims, h, h / 8.0, 1);
    const NoiseBundle n2(42, 9, sys.dims, h, h / 16.0, 2);
    const PathPair p1 = simulate_coupled(sys, 0.1, v1(1.0), v1(1.0), o1, n1);
    const PathPair p2 = simulate_coupled(sys, 0.05, v1(1.0), v1(1.0), o2, n2);
    CHECK((p1.w1 - p2.w1).cwiseAbs().maxCoeff() == 0.0);
    // while the slow trajectories differ (different eps)
    CHECK((p1.x - p2.x).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("grid mismatches are rejected") {
    const CoefficientSystem sys = make_model2(0.0);
    CoupledOptions opt;
    opt.T = 0.25;
    opt.slow = {SchemeKind::TamedEM, 1e-2};
    opt.fast = {SchemeKind::TamedEM, 3e-3}; // does not divide slow.h
    const NoiseBundle noise(0, 0, sys.dims, 1e-2, 3e-3);
    CHECK_THROWS_AS(simulate_coupled(sys, 0.1, v1(1.0), v1(1.0), opt, noise), GridMismatch);

    // bundle base steps must equal the scheme steps
    opt.fast.h = 1e-3;
    const NoiseBundle wrong(0, 0, sys.dims, 1e-2, 5e-4);
    CHECK_THROWS_AS(simulate_coupled(sys, 0.1, v1(1.0), v1(1.0), opt, wrong), GridMismatch);
}

TEST_CASE("state validation: eps range and dimensions") {
    const CoefficientSystem sys = make_model2(1.0); // epsilon0 = 0.25
    CoupledOptions opt;
    opt.T = 0.1;
    opt.slow = {SchemeKind::TamedEM, 1e-2};
    opt.fast = {SchemeKind::TamedEM, 1e-3};
    const NoiseBundle noise(0, 0, sys.dims, 1e-2, 1e-3);
    CHECK_THROWS_AS(simulate_coupled(sys, 0.5, v1(1.0), v1(1.0), opt, noise),
                    EpsilonOutOfRange);
    CHECK_THROWS_AS(simulate_coupled(sys, -0.1, v1(1.0), v1(1.0), opt, noise),
                    EpsilonOutOfRange);
    CHECK_THROWS_AS(simulate_coupled(sys, 0.1, Vec(Vec::Zero(2)), v1(1.0), opt, noise), Error);
}

TEST_CASE("explicit Euler explodes under superlinear drift; the path freezes") {
    const CoefficientSystem sys = make_model1();
    CoupledOptions opt;
    opt.T = 0.05;
    opt.slow = {SchemeKind::ExplicitEM, 1e-3};
    opt.fast = {SchemeKind::ExplicitEM, 1e-3};
    const NoiseBundle noise(1, 0, sys.dims, 1e-3, 1e-3);
    const PathPair path = simulate_coupled(sys, 1.0, v1(100.0), v1(0.0), opt, noise);
    REQUIRE(path.exploded);
    REQUIRE(path.explosion_step >= 0);
    const auto n = static_cast<Eigen::Index>(path.steps());
    const auto ke = static_cast<Eigen::Index>(path.explosion_step);
    REQUIRE(ke < n);
    // every row after the explosion repeats the last recorded state
    for (Eigen::Index r = ke + 1; r <= n; ++r) {
        CHECK(path.x(r, 0) == path.x(ke + 1, 0));
        CHECK(path.y(r, 0) == path.y(ke + 1, 0));
    }

    // the tamed scheme survives the same configuration
    opt.slow.kind = SchemeKind::TamedEM;
    opt.fast.kind = SchemeKind::TamedEM;
    const PathPair tamed = simulate_coupled(sys, 1.0, v1(100.0), v1(0.0), opt, noise);
    CHECK_FALSE(tamed.exploded);
    CHECK(tamed.x.allFinite());
}

TEST_CASE("block-frozen auxiliary pair: constant coefficients give zero gap") {
    const CoefficientSystem sys = constant_system();
    CoupledOptions opt;
    opt.T = 0.25;
    opt.slow = {SchemeKind::TamedEM, 1.0 / 64.0};
    opt.fast = {SchemeKind::TamedEM, 1.0 / 512.0};
    const NoiseBundle noise(7, 2, sys.dims, opt.slow.h, opt.fast.h);
    const double delta = 4.0 / 64.0; // 4 slow steps per block
    const AuxPaths aux =
        simulate_khasminskii(sys, 0.1, v1(1.0), v1(0.5), delta, opt, noise);
    REQUIRE_FALSE(aux.exploded);
    CHECK((aux.x - aux.xhat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((aux.y - aux.yhat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("block-frozen auxiliary pair: coupled leg matches simulate_coupled") {
    const CoefficientSystem sys = make_model2(0.0);
    CoupledOptions opt;
    opt.T = 0.25;
    opt.slow = {SchemeKind::TamedEM, 1.0 / 64.0};
    opt.fast = {SchemeKind::TamedEM, 1.0 / 512.0};
    const NoiseBundle noise(5, 1, sys.dims, opt.slow.h, opt.fast.h);
    const PathPair ref = simulate_coupled(sys, 0.1, v1(1.0), v1(1.0), opt, noise);
    const AuxPaths aux =
        simulate_khasminskii(sys, 0.1, v1(1.0), v1(1.0), 2.0 / 64.0, opt, noise);
    // the (X, Y) leg of the diagnostic is the coupled pair itself
    CHECK((aux.x - ref.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((aux.y - ref.y).cwiseAbs().maxCoeff() == 0.0);
    // the frozen leg genuinely differs for time-dependent coefficients
    CHECK((aux.yhat - aux.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("block length must be a multiple of the slow step") {
    const CoefficientSystem sys = make_model2(0.0);
    CoupledOptions opt;
    opt.T = 0.25;
    opt.slow = {SchemeKind::TamedEM, 1.0 / 64.0};
    opt.fast = {SchemeKind::TamedEM, 1.0 / 512.0};
    const NoiseBundle noise(0, 0, sys.dims, opt.slow.h, opt.fast.h);
    CHECK_THROWS_AS(
        simulate_khasminskii(sys, 0.1, v1(1.0), v1(1.0), 1.5 / 64.0, opt, noise),
        GridMismatch);
}
