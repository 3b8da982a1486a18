#pragma once

#include "slowfast/types.hpp"

#include <cstdint>
#include <vector>

namespace slowfast {

/// Numerically stable running mean/variance (Welford).
class RunningStats {
  public:
    void add(double v);
    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance; 0 for fewer than two samples.
    double variance() const;
    /// Standard error of the mean, sqrt(variance / n); 0 for n < 2.
    double stderr_mean() const;

  private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Componentwise Welford accumulator for fixed-size vectors.
class VecStats {
  public:
    explicit VecStats(int dim = 0) { reset(dim); }
    void reset(int dim);
    void add(const Vec& v);
    std::int64_t count() const { return n_; }
    const Vec& mean() const { return mean_; }
    Vec variance() const;
    Vec stderr_mean() const;

  private:
    std::int64_t n_ = 0;
    Vec mean_, m2_;
};

/// Weighted least-squares line y = intercept + slope * x with weights
/// w_i = 1 / se_i^2; the reported standard errors assume the weights are
/// exact inverse variances.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
};

LineFit fit_weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w);

} // namespace slowfast
