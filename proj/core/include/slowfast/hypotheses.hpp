#pragma once

#include "slowfast/model.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace slowfast {

/// Sampling region and budget of a structural check. Samples are drawn from
/// a deterministic quasi-random (Halton) sequence offset by seed, stratified
/// over the box, with every 8th sample's fast coordinates inflated by
/// tail_factor (structural violations live at large |y|), plus a fixed set
/// of axis/corner probes. Identical spec -> identical report.
struct SampleSpec {
    double t_max = 1.0;      ///< t (and s) sampled from [0, t_max]
    double x_radius = 5.0;   ///< slow coordinates from [-x_radius, x_radius]
    double y_radius = 5.0;   ///< fast coordinates from [-y_radius, y_radius]
    double w1_radius = 3.0;  ///< W1 values for systems whose slow drift reads them
    long n_samples = 20000;
    std::uint64_t seed = 0;
    double tail_factor = 10.0;
};

/// Outcome of one structural check. A numerical check is evidence, not
/// proof: pass means "no counterexample found in n_samples samples".
///
/// worst_margin is the largest normalized violation (LHS - RHS) / scale over
/// all samples and sub-inequalities; pass holds exactly when every sampled
/// margin satisfies the inequality direction, with values inside
/// floating-point roundoff (1e-12 relative) counting as satisfying.
struct CheckReport {
    std::string condition;   ///< "monotonicity", "coercivity(k=16)", "slow-growth", "slow-regularity"
    long n_samples = 0;      ///< quasi-random samples drawn (probes excluded)
    bool pass = false;
    double worst_margin = 0;
    std::string witness;     ///< sample point achieving worst_margin
    double empirical_best = 0; ///< monotonicity: largest gap passing all samples
    std::map<std::string, double> fitted; ///< searched constants and fitted exponents
    std::string note;
};

/// Strict monotonicity of the fast pair: at every sample,
///   2 <f(t,x,y1) - f(t,x,y2), y1 - y2> + |g(t,x,y1) - g(t,x,y2)|^2
///     <= -beta |y1 - y2|^2
/// with the claimed beta. Also reports the empirical best beta (the largest
/// value that passes all samples).
CheckReport check_monotonicity(const CoefficientSystem& sys, const SampleSpec& spec);

/// Coercivity of order k: for some candidate triple (beta_k, lambda2, C),
///   2 <y, f(t,x,y)> + (k-1) |g(t,x,y)|^2
///     <= -beta_k |y|^2 - lambda2 |y|^theta4 + C (|x|^{4/theta4} + 1)
/// at every sample. beta_k is the declared claim when present, otherwise
/// searched over {2^-4..2^4}; lambda2 is the declared value; C is searched
/// over {2^-4..2^12}. The C ceiling is deliberately moderate: an unbounded
/// constant can absorb any finite sample set and would make the check vacuous.
CheckReport check_coercivity(const CoefficientSystem& sys, int k, const SampleSpec& spec);

/// One-sided growth of the slow pair: at every sample,
///   2 <x, b>     <= K_t(1) (1 + |x|^2) + lambda1 |y|^theta4,
///   |b|          <= K_t(1) + C (|x|^theta5 + |y|^theta6),
///   |sigma|_F^2  <= K_t(1) + C |x|^2,
/// with C searched over {2^-4..2^20}. Requires the closed-form K_t(R)
/// callable (throws MissingKProcess when absent).
CheckReport check_slow_growth(const CoefficientSystem& sys, const SampleSpec& spec);

/// Local regularity on the ball |x| <= R:
///   2 |b(t,x1,y) - b(t,x2,y)| |x1-x2| + |sigma(t,x1) - sigma(t,x2)|_F^2
///       <= K_t(R) (1 + |y|^theta1) |x1-x2|^2,
///   |b(t,x,y1) - b(t,x,y2)| <= C |y1-y2| [|y1|^theta2 + |y2|^theta2 + K_t(1) + |x|^theta3],
///   |b(t,x,y) - b(s,x,y)|   <= C |t-s|^gamma1 [|y|^theta2 + |x|^theta3 + Z],
///   |f(t,x1,y) - f(s,x2,y)| <= C (|t-s|^gamma2 + |x1-x2|) (1 + |x1|^alpha1 + |x2|^alpha1 + |y|^alpha2),
///   |g(t,x1,y1) - g(s,x2,y2)|_F <= C (|t-s|^gamma2 + |x1-x2| + |y1-y2|),
///   |f| <= C (1 + |x|^alpha3 + |y|^alpha4),   |g|_F <= C (1 + |x| + |y|),
/// each C searched over {2^-4..2^20}. For systems whose slow drift reads the
/// W1 value, time displacements carry Brownian W1 displacements and Z is the
/// declared scale of the path's Hoelder quotient. Also fits the empirical
/// t-Hoelder exponents of b and of (f, g) (reported as fitted["t_exponent_b"]
/// and fitted["t_exponent_fg"], informational).
CheckReport check_slow_regularity(const CoefficientSystem& sys, double R, const SampleSpec& spec);

} // namespace slowfast
