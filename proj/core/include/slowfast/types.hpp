#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace slowfast {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// State-space dimensions of a two-scale system:
/// slow state in R^n, fast state in R^m, slow noise in R^d1, fast noise in R^d2.
struct Dims {
    int n = 1;
    int m = 1;
    int d1 = 1;
    int d2 = 1;
};

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A coefficient map returned a non-finite value at finite inputs.
class NonFiniteCoefficient : public Error {
  public:
    NonFiniteCoefficient(const std::string& which, double t, const std::string& detail)
        : Error("coefficient '" + which + "' returned a non-finite value at t=" + std::to_string(t) +
                (detail.empty() ? "" : "; " + detail)),
          which_(which) {}
    const std::string& which() const { return which_; }

  private:
    std::string which_;
};

/// Scale-separation parameter outside (0, epsilon0].
class EpsilonOutOfRange : public Error {
  public:
    EpsilonOutOfRange(double eps, double eps0)
        : Error("eps=" + std::to_string(eps) + " outside admissible range (0, " + std::to_string(eps0) + "]") {}
};

/// A step size or block length does not divide the enclosing grid.
class GridMismatch : public Error {
  public:
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

/// Lookup outside the stored table domain; carries the offending point.
class OutOfTableRange : public Error {
  public:
    OutOfTableRange(double t, const Vec& x, const std::string& domain)
        : Error("lookup (t=" + std::to_string(t) + ", x[0]=" + std::to_string(x.size() ? x[0] : 0.0) +
                ") outside table domain " + domain),
          t_(t), x_(x) {}
    double t() const { return t_; }
    const Vec& x() const { return x_; }

  private:
    double t_;
    Vec x_;
};

/// Serialized table does not match the model/options it is loaded for.
class FingerprintMismatch : public Error {
  public:
    FingerprintMismatch(const std::string& expected, const std::string& found)
        : Error("table fingerprint mismatch: expected " + expected + ", found " + found) {}
};

/// A trajectory left the finite range where a finite result was required.
class Explosion : public Error {
  public:
    explicit Explosion(const std::string& what) : Error(what) {}
};

/// Gap process hit the numerical floor before a rate could be fitted.
class DegenerateGap : public Error {
  public:
    explicit DegenerateGap(const std::string& what) : Error(what) {}
};

/// Rate fit impossible (fewer than 3 usable levels, or non-positive data).
class DegenerateFit : public Error {
  public:
    explicit DegenerateFit(const std::string& what) : Error(what) {}
};

/// Moment bound requested for an order k with no declared coercivity claim.
class MissingKProcess : public Error {
  public:
    explicit MissingKProcess(const std::string& what) : Error(what) {}
};

} // namespace slowfast
