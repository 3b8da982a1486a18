#pragma once

#include "slowfast/kernel.hpp"
#include "slowfast/model.hpp"
#include "slowfast/noise.hpp"

#include <cstdint>
#include <vector>

namespace slowfast {

/// Between-chain spread of an averaged-drift estimate exceeded 10x the
/// within-chain prediction: the burn-in was too short or the chains have not
/// mixed. The estimate is not returned because it cannot be trusted.
class NonErgodicWarning : public Error {
  public:
    explicit NonErgodicWarning(const std::string& what) : Error(what) {}
};

/// One recorded trajectory of a frozen system.
struct FrozenPath {
    std::vector<double> s;
    Mat y;
    bool exploded = false;
    std::ptrdiff_t explosion_step = -1;
};

/// Simulates dY = drift(Y) ds + diffusion(Y) dW on [0, S] using the bundle's
/// frozen noise stream at base step scheme.h.
FrozenPath simulate_frozen(const FrozenSystem& frozen, const Vec& y0, double S,
                           StepScheme scheme, const NoiseBundle& noise);

/// Options of the averaged-drift estimator.
struct EstimateOpts {
    double burn_in = -1.0;    ///< time discarded per chain; < 0 selects the default
                              ///< rule exp(-beta*s/2) * scale < 1e-3 from the claimed beta
    double sample_time = 50;  ///< averaging time per chain after burn-in
    int n_chains = 8;
    StepScheme scheme{SchemeKind::TamedEM, 1e-3};
    std::uint64_t seed = 0;
    bool variance_reduction = true; ///< stationarity-identity control variates
};

/// Averaged drift at one (t, x): time average of b(t, x, Y_s) over long
/// frozen-equation chains.
struct FrozenEstimate {
    double t = 0;
    Vec x;
    Vec bbar;
    Vec stderr_; ///< between-chain standard error of the mean, componentwise
    double burn_in = 0;
    double sample_time = 0;
    int n_chains = 0;
    /// Raw (pre-adjustment) time average of 2<y, f> + |g|^2 and its
    /// between-chain standard error; ~0 at stationarity (Ito balance).
    double stationarity_residual = 0;
    double stationarity_stderr = 0;
    bool variance_reduction = false;
};

/// Estimates bbar(t, x) = int b(t, x, y) mu^{t,x}(dy) by post-burn-in time
/// averages over opts.n_chains independent chains started at y0. The standard
/// error comes from the between-chain variance of the chain means and is
/// floored at 1e-12 * (1 + |estimate|).
///
/// With opts.variance_reduction the signals f_i(Y) and 2<Y, f> + |g|^2 —
/// exact zero-mean functionals of the invariant measure — are regressed out
/// of the drift average using pooled within-chain batch means (20 batches per
/// chain). The adjustment keeps the estimator consistent and collapses the
/// variance entirely for coefficient pairs that are affine in y.
///
/// w1 is the slow-noise value the drift is evaluated at (systems with
/// slow_reads_w1 only); empty means zero.
///
/// Throws Explosion if a chain leaves IEEE-finite range, NonErgodicWarning if
/// the between-chain spread exceeds 10x the within-chain prediction.
FrozenEstimate estimate_bbar(const CoefficientSystem& sys, double t, const Vec& x,
                             const Vec& y0, const EstimateOpts& opts, const Vec& w1 = Vec());

/// Synchronous-coupling contraction diagnostic.
struct ContractionReport {
    std::vector<double> s;            ///< record grid, s[0] = 0
    std::vector<double> mean_sq_gap;  ///< E |Y^{y1}_s - Y^{y2}_s|^2
    std::vector<double> gap_stderr;   ///< ensemble standard error per grid point
    double rate = 0;                  ///< fitted decay exponent of the mean-square gap
    double rate_stderr = 0;
    double claimed_beta = 0;          ///< from the parent system's claims, if any
};

/// Drives two copies of the frozen system from y1 != y2 with the SAME noise
/// and fits an exponential to the mean-square gap on the log scale over the
/// window where the gap exceeds the 1e-12 numerical floor. Throws
/// DegenerateGap when fewer than 3 grid points survive the floor.
ContractionReport contraction_test(const FrozenSystem& frozen, const Vec& y1, const Vec& y2,
                                   double S, int n_paths, StepScheme scheme,
                                   std::uint64_t seed = 0);

/// Ensemble-vs-time-average consistency curve.
struct ErgodicCurve {
    std::vector<double> s;
    std::vector<double> deviation; ///< | ensemble avg of b(t,x,Y_s) - reference bbar |
    std::vector<double> stderr_;   ///< ensemble standard error (norm, componentwise RSS)
};

/// Ensemble average of b(t, x, Y_s) over n_paths fresh chains from y0,
/// compared against a converged reference estimate at the same (t, x).
ErgodicCurve ergodic_convergence_test(const CoefficientSystem& sys, double t, const Vec& x,
                                      const Vec& y0, const std::vector<double>& s_grid,
                                      int n_paths, const FrozenEstimate& reference,
                                      StepScheme scheme = {SchemeKind::TamedEM, 1e-3},
                                      std::uint64_t seed = 0, const Vec& w1 = Vec());

/// Running k-th absolute moment of the frozen state.
struct MomentCurve {
    std::vector<double> s;
    std::vector<double> moment;  ///< ensemble estimate of E |Y_s|^k
    std::vector<double> stderr_;
    double sup_moment = 0;       ///< sup over the record grid
    int k = 0;
};

/// Ensemble estimate of E|Y_s|^k on [0, S]. Requires a coercivity claim that
/// covers order k in frozen.claims (throws MissingKProcess otherwise);
/// throws Explosion if any chain leaves IEEE-finite range.
MomentCurve moment_bound_test(const FrozenSystem& frozen, const Vec& y0, int k, double S,
                              int n_paths, StepScheme scheme = {SchemeKind::TamedEM, 1e-3},
                              std::uint64_t seed = 0);

} // namespace slowfast
