#pragma once

#include "slowfast/model.hpp"
#include "slowfast/noise.hpp"

#include <cstdint>
#include <vector>

namespace slowfast {

/// Time-stepping scheme for an Euler-type update.
enum class SchemeKind {
    ExplicitEM, ///< classical explicit Euler-Maruyama
    TamedEM,    ///< drift increment h*v / (1 + h*|v|); stable under superlinear drift
};

struct StepScheme {
    SchemeKind kind = SchemeKind::TamedEM;
    double h = 1e-3;
};

/// Drift increment of one step: h*v for ExplicitEM, h*v/(1 + h*|v|) for
/// TamedEM (vector norm, so the whole drift vector is scaled by one factor).
void drift_increment(SchemeKind kind, double h, const Vec& v, Vec& out);

/// One simulated trajectory of the coupled pair on the slow grid.
struct PathPair {
    std::vector<double> t; ///< grid times, size N+1
    Mat x;                 ///< (N+1) x n slow states
    Mat y;                 ///< (N+1) x m fast states (recorded at slow grid times)
    Mat w1;                ///< (N+1) x d1 cumulative W1 values
    bool exploded = false;
    std::ptrdiff_t explosion_step = -1; ///< slow step at which the state left IEEE-finite range

    std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
};

struct CoupledOptions {
    double T = 1.0;
    StepScheme slow{SchemeKind::TamedEM, 1e-3};
    StepScheme fast{SchemeKind::TamedEM, 1e-7}; ///< fast.h must divide slow.h
};

/// Simulates the scale-separated pair
///   dX = b(t, X, Y, W1) dt + sigma(t, X, W1) dW1,
///   dY = (1/eps) f(t, X, Y) dt + (1/sqrt(eps)) g(t, X, Y) dW2,
/// with a left-endpoint two-grid Euler scheme: each slow step freezes X (and
/// the Y value entering b) at the step start while Y runs on the fast subgrid
/// with live time. The bundle's base steps must equal slow.h and fast.h.
/// A non-finite state flags the path exploded and freezes it at the last
/// finite value instead of throwing, so ensemble statistics can apply an
/// explosion budget.
PathPair simulate_coupled(const CoefficientSystem& sys, double eps, const Vec& x0,
                          const Vec& y0, const CoupledOptions& opt, const NoiseBundle& noise);

/// Coupled pair plus the block-frozen auxiliary pair built on the same noise.
struct AuxPaths {
    std::vector<double> t;
    Mat x, y;       ///< coupled pair
    Mat xhat, yhat; ///< auxiliary pair
    Mat w1;         ///< cumulative W1 values
    bool exploded = false;
    std::ptrdiff_t explosion_step = -1;
};

/// Simulates the coupled pair together with the auxiliary pair whose
/// coefficients are frozen at block times s(delta) = floor(s/delta)*delta:
///   dYhat = (1/eps) f(s(delta), X_{s(delta)}, Yhat) ds
///         + (1/sqrt(eps)) g(s(delta), X_{s(delta)}, Yhat) dW2,
///   dXhat = b(t(delta), X_{t(delta)}, Yhat_t, W1_{t(delta)}) dt
///         + sigma(t, X_t, W1_t) dW1,
/// where X is the live coupled slow state (the diffusion term of Xhat is the
/// one of X, so their gap isolates the drift average). delta must be an
/// integer multiple of slow.h.
AuxPaths simulate_khasminskii(const CoefficientSystem& sys, double eps, const Vec& x0,
                              const Vec& y0, double delta, const CoupledOptions& opt,
                              const NoiseBundle& noise);

namespace detail {
/// Rounds ratio a/b to the nearest integer and throws GridMismatch (with
/// context string who) unless the ratio is an integer within relative 1e-9.
std::uint64_t exact_ratio(double a, double b, const char* who);
} // namespace detail

} // namespace slowfast
