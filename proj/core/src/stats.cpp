#include "slowfast/stats.hpp"

#include <cmath>

namespace slowfast {

void RunningStats::add(double v) {
    ++n_;
    const double d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (v - mean_);
}

double RunningStats::variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::stderr_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

void VecStats::reset(int dim) {
    n_ = 0;
    mean_ = Vec::Zero(dim);
    m2_ = Vec::Zero(dim);
}

void VecStats::add(const Vec& v) {
    if (v.size() != mean_.size()) throw Error("VecStats: dimension mismatch");
    ++n_;
    const Vec d = v - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_.array() += d.array() * (v - mean_).array();
}

Vec VecStats::variance() const {
    if (n_ < 2) return Vec::Zero(mean_.size());
    return m2_ / static_cast<double>(n_ - 1);
}

Vec VecStats::stderr_mean() const {
    if (n_ < 2) return Vec::Zero(mean_.size());
    return (variance() / static_cast<double>(n_)).cwiseSqrt();
}

LineFit fit_weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size())
        throw Error("fit_weighted_line: input lengths differ");
    if (x.size() < 3)
        throw DegenerateFit("need at least 3 points to fit a line with error bars");
    double W = 0, xb = 0, yb = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(w[i] > 0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw DegenerateFit("non-finite point or non-positive weight in line fit");
        W += w[i];
        xb += w[i] * x[i];
        yb += w[i] * y[i];
    }
    xb /= W;
    yb /= W;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xb) * (x[i] - xb);
        sxy += w[i] * (x[i] - xb) * (y[i] - yb);
    }
    if (!(sxx > 0)) throw DegenerateFit("degenerate abscissae in line fit");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = yb - fit.slope * xb;
    fit.slope_stderr = std::sqrt(1.0 / sxx);
    fit.intercept_stderr = std::sqrt(1.0 / W + xb * xb / sxx);
    return fit;
}

} // namespace slowfast
