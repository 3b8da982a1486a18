#pragma once

#include "slowfast/averaging.hpp"
#include "slowfast/config.hpp"
#include "slowfast/stats.hpp"

#include <string>
#include <vector>

namespace slowfast {

/// Strong-error statistics of one eps level.
struct LevelResult {
    double eps = 0;
    double mean_error = 0; ///< average over surviving paths of sup_t |X_eps - Xbar|^p
    double stderr_ = 0;
    long n_paths = 0;    ///< surviving (non-exploded) paths entering the mean
    long explosions = 0; ///< exploded paths at this level
    bool failed = false; ///< explosion budget (5%) exceeded; level excluded from the fit
};

/// Weighted log-log regression result of error against eps.
struct RateFit {
    double slope = 0;
    double slope_stderr = 0;
    double intercept = 0;
};

/// Outcome of a convergence experiment. Pure function of the config.
struct ConvergenceReport {
    std::string model_tag;
    std::string fingerprint;
    double T = 0, p = 0, h_slow = 0;
    long n_paths = 0;
    std::uint64_t seed = 0;
    double gamma_tilde = 0;
    double reference_slope = 0; ///< p (1 - gamma_tilde) / 2
    std::vector<LevelResult> levels;
    bool rate_fitted = false; ///< false when < 3 usable levels remain
    RateFit rate;
};

/// Per-delta gap statistics of the block-frozen auxiliary processes:
/// x_gap averages sup_t |X - Xhat|^2 over paths, y_gap averages the per-path
/// time-average of |Y - Yhat|^2 over the reporting grid.
struct KhasminskiiRow {
    double delta = 0;
    double x_gap = 0, x_gap_stderr = 0;
    double y_gap = 0, y_gap_stderr = 0;
    long n_paths = 0;
    long explosions = 0;
};

/// Moment curves of the block-rescaled process (fast clock) and the frozen
/// process at one matched s-grid point, with Monte Carlo standard errors.
struct RescaleRow {
    double s = 0;
    double block_mean = 0, block_mean_se = 0;
    double block_m2 = 0, block_m2_se = 0;
    double frozen_mean = 0, frozen_mean_se = 0;
    double frozen_m2 = 0, frozen_m2_se = 0;
};

/// Builds the provider a config names (analytic closed form, table file, or
/// on-demand estimation). The system reference must outlive the provider.
BbarProvider make_provider(const CoefficientSystem& sys, const ExperimentConfig& config);

/// Coupled strong-convergence experiment. For each path index the averaged
/// trajectory is simulated once and compared against every eps level under
/// the SAME W1 stream (per-path noise keyed by (seed, path); the W2 substream
/// carries the eps index, so W1 is common across levels by construction).
/// Paths are distributed over config.workers threads; per-path statistics
/// are reduced in path-index order, so the report is identical for any
/// worker count. A level whose explosions exceed 5% of n_paths is marked
/// failed and excluded from the rate fit.
ConvergenceReport run_convergence(const CoefficientSystem& sys, const BbarProvider& provider,
                                  const ExperimentConfig& config);

/// Freezing-error diagnostics at fixed eps: one row per delta (each a
/// positive multiple of h_slow), common noise across deltas.
std::vector<KhasminskiiRow> run_khasminskii_diagnostics(const CoefficientSystem& sys,
                                                        const ExperimentConfig& config, double eps,
                                                        const std::vector<double>& delta_list);

/// Distribution-equality diagnostic behind the block rescaling: simulates
/// the auxiliary fast process on the t-clock with 1/eps drift and 1/sqrt(eps)
/// diffusion scalings, frozen at (t0, x0), reads it on the fast clock
/// s = t/eps, and compares mean and second moment against the frozen
/// equation driven by an independent stream at the matched s-grid
/// {S/n_grid, ..., S}. Both legs use n_paths paths and step h_s on the fast
/// clock (h_s * eps on the t-clock).
std::vector<RescaleRow> run_rescaling_equivalence(const CoefficientSystem& sys, double t0,
                                                  const Vec& x0, const Vec& y0, double eps,
                                                  double S, int n_grid, long n_paths, double h_s,
                                                  std::uint64_t seed);

/// Weighted least squares of log(mean) against log(eps); weights come from
/// the delta method, se_log = stderr / mean. Throws DegenerateFit on fewer
/// than 3 levels or any mean <= 0.
RateFit fit_rate(const std::vector<LevelResult>& levels);

/// report.json payload (schema slowfast-convergence/v1): every number is
/// serialized with 17 significant digits, key order is fixed, and no
/// timestamps or host data enter, so equal configs give equal bytes.
std::string report_json(const ConvergenceReport& report);

/// errors.csv payload with header `eps, mean_error, stderr, n_paths, explosions`.
std::string errors_csv(const ConvergenceReport& report);

/// Writes a file atomically enough for tests (temp name + rename).
void write_file(const std::string& path, const std::string& content);

/// Process exit code a convergence report maps to: 0 on success, 3 when the
/// statistical acceptance gate fails (errors not strictly decreasing with
/// first/last separation >= 4 stderr, or fitted slope not positive at two
/// standard errors), 4 when any level exceeded the explosion budget.
int convergence_exit_code(const ConvergenceReport& report);

} // namespace slowfast
