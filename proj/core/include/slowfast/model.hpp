#pragma once

#include "slowfast/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace slowfast {

/// Declared structural constants of a two-scale system: growth/regularity
/// exponents of the coefficients, monotonicity and coercivity gaps, and the
/// admissible range of the scale-separation parameter. Checked numerically by
/// the hypotheses module; consumed by the harness for rate bookkeeping.
struct HypothesisParams {
    double theta1 = 0; ///< fast-state weight in the local x-Lipschitz bound of (b, sigma)
    double theta2 = 0; ///< fast-state exponent in the y-Lipschitz bound of b
    double theta3 = 1; ///< slow-state exponent in the y-Lipschitz bound of b
    double theta4 = 2; ///< fast-state exponent coupling one-sided growth and coercivity
    double theta5 = 1; ///< slow-state exponent in the absolute growth bound of b
    double theta6 = 1; ///< fast-state exponent in the absolute growth bound of b
    double gamma1 = 1; ///< Hoelder exponent of t -> b(t, x, y)
    double gamma2 = 1; ///< Hoelder exponent of t -> (f, g)(t, x, y)
    double alpha1 = 1, alpha2 = 1, alpha3 = 1, alpha4 = 1; ///< growth exponents of (f, g)
    double lambda1 = 0; ///< weight of |y|^theta4 in the one-sided growth bound of b
    double lambda2 = 0; ///< matching dissipation weight in the coercivity bound
    double beta = 0;    ///< claimed strict-monotonicity gap of the fast pair (f, g)
    double holder_z = 0; ///< claimed t-Hoelder constant of b (0 when b is smooth in t)

    /// Claimed coercivity gap per moment order k (empty entry = no claim).
    std::map<int, double> beta_k;
    /// Largest k for which coercivity of order k is claimed (absent = every k >= 2).
    std::optional<int> k_max;

    /// Upper end of the admissible eps range: lambda2/lambda1 when lambda1 > 0, else 1.
    double epsilon0() const;

    /// Enforces structural consistency (lambda2 > 0 iff lambda1 > 0, exponents
    /// nonnegative, gamma in (0, 1]); throws Error on violation.
    void validate() const;
};

/// Time-dependent, path-dependent coefficient maps of the two-scale system
///   dX = b(t, X, Y) dt + sigma(t, X) dW1   (b, sigma may read the W1 value)
///   dY = eps^-1 f(t, X, Y) dt + eps^-1/2 g(t, X, Y) dW2
/// All maps write into caller-provided buffers and must not allocate.
struct CoefficientSystem {
    using SlowDrift = std::function<void(double t, const Vec& x, const Vec& y, const Vec& w1, Vec& out)>;
    using SlowDiffusion = std::function<void(double t, const Vec& x, const Vec& w1, Mat& out)>;
    using FastDrift = std::function<void(double t, const Vec& x, const Vec& y, Vec& out)>;
    using FastDiffusion = std::function<void(double t, const Vec& x, const Vec& y, Mat& out)>;
    /// Closed-form averaged drift, when available: (t, x, w1) -> out in R^n.
    using AveragedDrift = std::function<void(double t, const Vec& x, const Vec& w1, Vec& out)>;
    /// Closed form of the local Lipschitz constant K_t(R), when available.
    using LocalLipschitz = std::function<double(double t, double R)>;

    std::string tag;   ///< stable identifier; feeds table fingerprints
    Dims dims;
    HypothesisParams params;

    SlowDrift b;
    SlowDiffusion sigma;
    FastDrift f;
    FastDiffusion g;

    bool slow_reads_w1 = false;  ///< true when b or sigma depends on the W1 value
    AveragedDrift analytic_bbar; ///< empty when no closed form is known
    LocalLipschitz k_of_r;       ///< empty when no closed form is declared
};

/// Coefficient values at one point, dimension-checked and finite.
struct CoefficientValues {
    Vec b;     ///< R^n
    Mat sigma; ///< R^{n x d1}
    Vec f;     ///< R^m
    Mat g;     ///< R^{m x d2}
};

/// Evaluates all four maps with validation: output dimensions must match the
/// declared Dims and every entry must be finite (throws NonFiniteCoefficient).
CoefficientValues evaluate_coefficients(const CoefficientSystem& sys, double t,
                                        const Vec& x, const Vec& y, const Vec& w1);

/// Fast dynamics with (t, x) frozen: dY = f(t0, x0, Y) ds + g(t0, x0, Y) dW.
/// Runs on its own clock and an independent noise stream.
struct FrozenSystem {
    int m = 1;
    int d2 = 1;
    double t0 = 0;
    Vec x0;
    std::function<void(const Vec& y, Vec& out)> drift;
    std::function<void(const Vec& y, Mat& out)> diffusion;
    /// Structural claims inherited from the parent system (moment-order gates).
    std::optional<HypothesisParams> claims;
};

/// Freezes the fast coefficient pair at (t, x).
FrozenSystem frozen_coefficients(const CoefficientSystem& sys, double t, const Vec& x);

/// Built-in 1-d test systems.
///
/// model1: b = -x^3 + x + y^3,        sigma = x,
///         f = -x^2 y^3 - 3y - y^5,   g = sin x + sin y
/// model2: b = t^2 x - x^3 y^2 + lambda1 * y, sigma = t^2 + x,
///         f = sqrt(t) x - 8y,        g = t + x + y     (affine in y; closed-form bbar)
/// model3: b = -|sin w1| x^3 + y,     sigma = x,
///         f = x - 8y,                g = y             (b reads the W1 value)
CoefficientSystem make_model1();
CoefficientSystem make_model2(double lambda1);
CoefficientSystem make_model3();

/// Lookup by tag: "model1", "model2" (lambda1 = 0 unless given), "model3".
CoefficientSystem make_builtin(const std::string& tag, double lambda1 = 0.0);

/// Stable hex fingerprint of (tag, dims, declared constants); ties serialized
/// tables and reports to the system they were computed for.
std::string model_fingerprint(const CoefficientSystem& sys);

} // namespace slowfast
