#include "slowfast/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace slowfast {

namespace {

constexpr double kTol = 1e-12;        // relative float tolerance of a margin
constexpr double kCeilGrowth = 1048576.0; // 2^20: constant ceiling, growth checks
constexpr double kCeilCoercive = 4096.0;  // 2^12: tighter ceiling so that an
// infeasible coercivity order cannot be absorbed by an astronomical constant

const int kPrimes[16] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, inv_k = inv, v = 0.0;
    while (i) {
        v += static_cast<double>(i % static_cast<std::uint64_t>(base)) * inv_k;
        i /= static_cast<std::uint64_t>(base);
        inv_k *= inv;
    }
    return v;
}

// Acklam's rational approximation of the standard normal quantile;
// |relative error| < 1.15e-9, ample for sampling displacement draws.
double inverse_normal_cdf(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    p = std::min(std::max(p, 1e-300), 1.0 - 1e-16);
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::string fmt_vec(const Vec& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v[i]);
        s += buf;
        if (i + 1 < v.size()) s += ", ";
    }
    return s + "]";
}

std::string fmt_t(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", t);
    return buf;
}

/// One evaluation point of a structural check; pair checks use both halves.
struct Point {
    double t = 0, s = 0;
    Vec x1, x2, y1, y2, w1a, w1b;
};

/// Deterministic sample stream: Halton sequence offset by the seed, with
/// every 8th draw's fast coordinates inflated to the tail region, followed by
/// a fixed probe set (axis values and box/tail corners).
class PointStream {
  public:
    PointStream(const CoefficientSystem& sys, const SampleSpec& spec, double x_ball = 0)
        : sys_(sys), spec_(spec), x_ball_(x_ball) {
        build_probes();
    }

    long n_random() const { return spec_.n_samples; }
    const std::vector<Point>& probes() const { return probes_; }

    Point random_point(long i) const {
        const std::uint64_t idx = static_cast<std::uint64_t>(i) + 1 + spec_.seed;
        int dim = 0;
        auto u = [&]() { return radical_inverse(idx, kPrimes[std::min(dim++, 15)]); };
        const int n = sys_.dims.n, m = sys_.dims.m, d1 = sys_.dims.d1;
        Point p;
        p.t = spec_.t_max * u();
        p.s = spec_.t_max * u();
        p.x1.resize(n);
        p.x2.resize(n);
        for (int d = 0; d < n; ++d) p.x1[d] = spec_.x_radius * (2.0 * u() - 1.0);
        for (int d = 0; d < n; ++d) p.x2[d] = spec_.x_radius * (2.0 * u() - 1.0);
        p.y1.resize(m);
        p.y2.resize(m);
        const double tail = (i % 8 == 7) ? spec_.tail_factor : 1.0;
        for (int d = 0; d < m; ++d) p.y1[d] = tail * spec_.y_radius * (2.0 * u() - 1.0);
        for (int d = 0; d < m; ++d) p.y2[d] = tail * spec_.y_radius * (2.0 * u() - 1.0);
        p.w1a.setZero(d1);
        p.w1b.setZero(d1);
        if (sys_.slow_reads_w1) {
            // Brownian-coherent displacement: marginal scale sqrt(t), increment
            // scale sqrt(|t - s|), both capped to the declared w1 box
            for (int d = 0; d < d1; ++d) {
                const double z0 = inverse_normal_cdf(u());
                const double z1 = inverse_normal_cdf(u());
                p.w1a[d] = clamp_w1(std::sqrt(std::max(p.t, 0.0)) * z0);
                p.w1b[d] = clamp_w1(p.w1a[d] + std::sqrt(std::abs(p.t - p.s)) * z1);
            }
        }
        clip_ball(p.x1);
        clip_ball(p.x2);
        return p;
    }

  private:
    double clamp_w1(double v) const { return std::min(std::max(v, -spec_.w1_radius), spec_.w1_radius); }

    void clip_ball(Vec& x) const {
        if (x_ball_ > 0 && x.norm() > x_ball_) x *= x_ball_ / x.norm();
    }

    void build_probes() {
        const int n = sys_.dims.n, m = sys_.dims.m;
        const double xr = x_ball_ > 0 ? std::min(x_ball_, spec_.x_radius) : spec_.x_radius;
        std::vector<double> x_axis = {-xr, 0.0, xr};
        std::vector<double> y_axis = {-spec_.tail_factor * spec_.y_radius, -spec_.y_radius, 0.0,
                                      spec_.y_radius, spec_.tail_factor * spec_.y_radius};
        // full cross products only while the probe block stays small
        if (std::pow(3.0, n) * std::pow(5.0, m) * 2.0 > 4096.0) return;
        std::vector<Vec> xs, ys;
        cross(x_axis, n, xs);
        cross(y_axis, m, ys);
        for (double t : {0.0, spec_.t_max})
            for (const Vec& x : xs)
                for (const Vec& y : ys) {
                    Point p;
                    p.t = t;
                    p.s = t == 0.0 ? spec_.t_max : 0.0;
                    p.x1 = x;
                    p.x2 = -x;
                    p.y1 = y;
                    p.y2 = -y;
                    p.w1a = Vec::Zero(sys_.dims.d1);
                    p.w1b = Vec::Zero(sys_.dims.d1);
                    clip_ball(p.x1);
                    clip_ball(p.x2);
                    probes_.push_back(std::move(p));
                }
    }

    static void cross(const std::vector<double>& axis, int dims, std::vector<Vec>& out) {
        const std::size_t total = static_cast<std::size_t>(std::pow(double(axis.size()), dims));
        for (std::size_t c = 0; c < total; ++c) {
            std::size_t rem = c;
            Vec v(dims);
            for (int d = 0; d < dims; ++d) {
                v[d] = axis[rem % axis.size()];
                rem /= axis.size();
            }
            out.push_back(std::move(v));
        }
    }

    const CoefficientSystem& sys_;
    SampleSpec spec_;
    double x_ball_;
    std::vector<Point> probes_;
};

/// Tracks the most-violating normalized margin of a direct inequality
/// LHS <= RHS: margin = (LHS - RHS) / (|LHS| + |RHS| + 1).
struct MarginTracker {
    double worst = -std::numeric_limits<double>::infinity();
    std::string witness;

    void add(double lhs, double rhs, const std::string& w) {
        const double m = (lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1.0);
        if (m > worst) {
            worst = m;
            witness = w;
        }
    }
    bool pass() const { return worst <= kTol; }
};

/// Tracks the constant required by an inequality NUM <= C * FACTOR and
/// resolves it against a power-of-two grid with ceiling `ceil`.
struct ConstantTracker {
    double c_req = -std::numeric_limits<double>::infinity();
    std::string witness;

    void add(double num, double factor, const std::string& w) {
        double r;
        if (factor > 0) {
            r = num / factor;
        } else if (num <= kTol * (std::abs(num) + 1.0)) {
            return; // 0 <= C * 0
        } else {
            r = std::numeric_limits<double>::infinity();
        }
        if (r > c_req) {
            c_req = r;
            witness = w;
        }
    }
    bool feasible(double ceil) const { return c_req <= ceil * (1.0 + kTol); }
    /// Smallest power of two >= c_req, clamped to [2^-4, ceil].
    double grid_value(double ceil) const {
        double c = 0.0625;
        while (c < c_req && c < ceil) c *= 2.0;
        return c;
    }
    /// Normalized margin of the resolved inequality (<= 0 iff feasible),
    /// measured against the grid constant actually reported.
    double margin(double ceil) const {
        if (!std::isfinite(c_req)) return 1.0;
        const double c = feasible(ceil) ? grid_value(ceil) : ceil;
        return (c_req - c) / (std::abs(c_req) + c + 1.0);
    }
};

void merge(CheckReport& rep, double margin, const std::string& witness) {
    if (margin > rep.worst_margin || rep.witness.empty()) {
        rep.worst_margin = margin;
        rep.witness = witness;
    }
}

void finalize(CheckReport& rep, bool pass) {
    rep.pass = pass;
    rep.note = pass ? "no counterexample found in " + std::to_string(rep.n_samples) +
                          " samples (evidence, not proof)"
                    : "counterexample: " + rep.witness;
}

/// Fitted t-Hoelder exponent: for each anchor t0, average |delta| over reps
/// at log-spaced dt and regress log mean against log dt; returns the minimum
/// per-anchor slope (the binding exponent), or NaN when the map is t-free.
template <typename DiffFn>
double fit_t_exponent(const CoefficientSystem& sys, const SampleSpec& spec, DiffFn&& diff) {
    const int n = sys.dims.n, m = sys.dims.m, d1 = sys.dims.d1;
    double best = std::numeric_limits<double>::quiet_NaN();
    for (int ia = 0; ia < 4; ++ia) {
        const double t0 = spec.t_max * 0.25 * ia;
        std::vector<double> lx, ly;
        for (int idt = 2; idt <= 20; ++idt) {
            const double dt = std::ldexp(spec.t_max, -idt);
            double acc = 0.0;
            for (int rep = 0; rep < 16; ++rep) {
                const std::uint64_t idx =
                    static_cast<std::uint64_t>(((ia * 19 + idt) * 16 + rep)) + 1 + spec.seed;
                int dim = 0;
                auto u = [&]() { return radical_inverse(idx, kPrimes[std::min(dim++, 15)]); };
                Vec x(n), y(m), w1a = Vec::Zero(d1), w1b = Vec::Zero(d1);
                for (int d = 0; d < n; ++d) x[d] = spec.x_radius * (2.0 * u() - 1.0);
                for (int d = 0; d < m; ++d) y[d] = spec.y_radius * (2.0 * u() - 1.0);
                if (sys.slow_reads_w1)
                    for (int d = 0; d < d1; ++d) {
                        w1a[d] = std::sqrt(t0) * inverse_normal_cdf(u());
                        w1b[d] = w1a[d] + std::sqrt(dt) * inverse_normal_cdf(u());
                    }
                acc += diff(t0, t0 + dt, x, y, w1a, w1b);
            }
            acc /= 16.0;
            if (acc > 1e-300) {
                lx.push_back(std::log(dt));
                ly.push_back(std::log(acc));
            }
        }
        if (lx.size() < 8) continue;
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(lx.size());
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        const double slope = sxy / sxx;
        if (std::isnan(best) || slope < best) best = slope;
    }
    return best;
}

} // namespace

CheckReport check_monotonicity(const CoefficientSystem& sys, const SampleSpec& spec) {
    CheckReport rep;
    rep.condition = "monotonicity";
    rep.n_samples = spec.n_samples;
    const double beta = sys.params.beta;
    rep.fitted["beta_claimed"] = beta;

    PointStream stream(sys, spec);
    MarginTracker margin;
    double best = std::numeric_limits<double>::infinity();
    Vec f1(sys.dims.m), f2(sys.dims.m);
    Mat g1(sys.dims.m, sys.dims.d2), g2(sys.dims.m, sys.dims.d2);

    auto visit = [&](const Point& p) {
        const Vec dy = p.y1 - p.y2;
        const double dsq = dy.squaredNorm();
        if (dsq == 0) return;
        sys.f(p.t, p.x1, p.y1, f1);
        sys.f(p.t, p.x1, p.y2, f2);
        sys.g(p.t, p.x1, p.y1, g1);
        sys.g(p.t, p.x1, p.y2, g2);
        const double lhs = 2.0 * (f1 - f2).dot(dy) + (g1 - g2).squaredNorm();
        margin.add(lhs, -beta * dsq,
                   "t=" + fmt_t(p.t) + " x=" + fmt_vec(p.x1) + " y1=" + fmt_vec(p.y1) +
                       " y2=" + fmt_vec(p.y2));
        best = std::min(best, -lhs / dsq);
    };
    for (long i = 0; i < stream.n_random(); ++i) visit(stream.random_point(i));
    for (const Point& p : stream.probes()) visit(p);

    rep.worst_margin = margin.worst;
    rep.witness = margin.witness;
    rep.empirical_best = best;
    rep.fitted["beta_empirical_best"] = best;
    finalize(rep, margin.pass());
    return rep;
}

CheckReport check_coercivity(const CoefficientSystem& sys, int k, const SampleSpec& spec) {
    if (k < 2) throw Error("check_coercivity: order k must be >= 2");
    CheckReport rep;
    rep.condition = "coercivity(k=" + std::to_string(k) + ")";
    rep.n_samples = spec.n_samples;
    const HypothesisParams& pp = sys.params;
    const double lambda2 = pp.lambda2;
    const double xpow_exp = 4.0 / pp.theta4;

    // one pass over the samples caches the beta-independent pieces
    struct Row {
        double lhs, ysq, ypow, xpow;
        double t;
        Vec x, y;
    };
    std::vector<Row> rows;
    rows.reserve(static_cast<std::size_t>(spec.n_samples) + 256);
    PointStream stream(sys, spec);
    Vec fv(sys.dims.m);
    Mat gv(sys.dims.m, sys.dims.d2);
    auto visit = [&](const Point& p) {
        sys.f(p.t, p.x1, p.y1, fv);
        sys.g(p.t, p.x1, p.y1, gv);
        Row r;
        r.lhs = 2.0 * p.y1.dot(fv) + static_cast<double>(k - 1) * gv.squaredNorm();
        r.ysq = p.y1.squaredNorm();
        r.ypow = std::pow(p.y1.norm(), pp.theta4);
        r.xpow = std::pow(p.x1.norm(), xpow_exp) + 1.0;
        r.t = p.t;
        r.x = p.x1;
        r.y = p.y1;
        rows.push_back(std::move(r));
    };
    for (long i = 0; i < stream.n_random(); ++i) visit(stream.random_point(i));
    for (const Point& p : stream.probes()) visit(p);

    std::vector<double> betas;
    const auto claimed = pp.beta_k.find(k);
    if (claimed != pp.beta_k.end()) {
        betas.push_back(claimed->second);
    } else {
        for (double b = 16.0; b >= 0.0625; b /= 2.0) betas.push_back(b);
    }

    ConstantTracker last;
    double last_beta = betas.back();
    for (double beta : betas) {
        ConstantTracker c;
        for (const Row& r : rows)
            c.add(r.lhs + beta * r.ysq + lambda2 * r.ypow, r.xpow,
                  "t=" + fmt_t(r.t) + " x=" + fmt_vec(r.x) + " y=" + fmt_vec(r.y));
        if (c.feasible(kCeilCoercive)) {
            rep.fitted["beta_k"] = beta;
            rep.fitted["lambda2"] = lambda2;
            rep.fitted["C"] = c.grid_value(kCeilCoercive);
            rep.fitted["C_required"] = std::max(c.c_req, 0.0);
            rep.worst_margin = c.margin(kCeilCoercive);
            rep.witness = c.witness;
            finalize(rep, true);
            return rep;
        }
        last = c;
        last_beta = beta;
    }
    rep.fitted["beta_k"] = last_beta;
    rep.fitted["lambda2"] = lambda2;
    rep.fitted["C"] = kCeilCoercive;
    rep.fitted["C_required"] = last.c_req;
    rep.worst_margin = last.margin(kCeilCoercive);
    rep.witness = last.witness;
    finalize(rep, false);
    return rep;
}

CheckReport check_slow_growth(const CoefficientSystem& sys, const SampleSpec& spec) {
    if (!sys.k_of_r)
        throw MissingKProcess("check_slow_growth: system declares no K_t(R) closed form");
    CheckReport rep;
    rep.condition = "slow-growth";
    rep.n_samples = spec.n_samples;
    const HypothesisParams& pp = sys.params;

    PointStream stream(sys, spec);
    MarginTracker inner;      // 2<x, b> <= K_t(1)(1 + |x|^2) + lambda1 |y|^theta4
    ConstantTracker growth_b; // |b| - K_t(1) <= C (|x|^theta5 + |y|^theta6)
    ConstantTracker growth_s; // |sigma|^2 - K_t(1) <= C |x|^2
    Vec bv(sys.dims.n);
    Mat sig(sys.dims.n, sys.dims.d1);

    auto visit = [&](const Point& p) {
        const double K1 = sys.k_of_r(p.t, 1.0);
        sys.b(p.t, p.x1, p.y1, p.w1a, bv);
        sys.sigma(p.t, p.x1, p.w1a, sig);
        const double xn = p.x1.norm(), yn = p.y1.norm();
        const std::string w = "t=" + fmt_t(p.t) + " x=" + fmt_vec(p.x1) + " y=" + fmt_vec(p.y1) +
                              (sys.slow_reads_w1 ? " w1=" + fmt_vec(p.w1a) : "");
        inner.add(2.0 * p.x1.dot(bv),
                  K1 * (1.0 + xn * xn) + pp.lambda1 * std::pow(yn, pp.theta4), "inner-product " + w);
        growth_b.add(bv.norm() - K1, std::pow(xn, pp.theta5) + std::pow(yn, pp.theta6),
                     "drift-growth " + w);
        growth_s.add(sig.squaredNorm() - K1, xn * xn, "diffusion-growth " + w);
    };
    for (long i = 0; i < stream.n_random(); ++i) visit(stream.random_point(i));
    for (const Point& p : stream.probes()) visit(p);

    rep.fitted["C_drift_growth"] = growth_b.grid_value(kCeilGrowth);
    rep.fitted["C_diffusion_growth"] = growth_s.grid_value(kCeilGrowth);
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    merge(rep, inner.worst, inner.witness);
    merge(rep, growth_b.margin(kCeilGrowth), growth_b.witness);
    merge(rep, growth_s.margin(kCeilGrowth), growth_s.witness);
    finalize(rep, inner.pass() && growth_b.feasible(kCeilGrowth) && growth_s.feasible(kCeilGrowth));
    return rep;
}

CheckReport check_slow_regularity(const CoefficientSystem& sys, double R, const SampleSpec& spec) {
    if (!(R > 0)) throw Error("check_slow_regularity: R must be positive");
    if (!sys.k_of_r)
        throw MissingKProcess("check_slow_regularity: system declares no K_t(R) closed form");
    CheckReport rep;
    rep.condition = "slow-regularity";
    rep.n_samples = spec.n_samples;
    const HypothesisParams& pp = sys.params;

    PointStream ball_stream(sys, spec, R);
    PointStream box_stream(sys, spec);
    MarginTracker local_x; // (H1)(i) shape: no searched constant, K_t(R) is declared
    ConstantTracker lip_y_b, holder_t_b, spacetime_f, lip_g, growth_f, growth_g;
    double lip_x_f = 0, lip_y_f = 0;

    const int n = sys.dims.n, m = sys.dims.m, d2 = sys.dims.d2;
    Vec b1(n), b2(n), fv1(m), fv2(m);
    Mat s1(n, sys.dims.d1), s2(n, sys.dims.d1), g1(m, d2), g2(m, d2);

    // ball pass: spatial regularity of (b, sigma) inside |x| <= R
    for (long i = -static_cast<long>(ball_stream.probes().size()); i < ball_stream.n_random(); ++i) {
        const Point p = i < 0 ? ball_stream.probes()[static_cast<std::size_t>(-i - 1)]
                              : ball_stream.random_point(i);
        const Vec dx = p.x1 - p.x2;
        const double dxn = dx.norm();
        if (dxn == 0) continue;
        sys.b(p.t, p.x1, p.y1, p.w1a, b1);
        sys.b(p.t, p.x2, p.y1, p.w1a, b2);
        sys.sigma(p.t, p.x1, p.w1a, s1);
        sys.sigma(p.t, p.x2, p.w1a, s2);
        const double KR = sys.k_of_r(p.t, R);
        local_x.add(2.0 * (b1 - b2).norm() * dxn + (s1 - s2).squaredNorm(),
                    KR * (1.0 + std::pow(p.y1.norm(), pp.theta1)) * dxn * dxn,
                    "local-x t=" + fmt_t(p.t) + " x1=" + fmt_vec(p.x1) + " x2=" + fmt_vec(p.x2) +
                        " y=" + fmt_vec(p.y1));
    }

    // box pass: y-regularity and t-regularity of b; space-time regularity and
    // growth of (f, g)
    for (long i = -static_cast<long>(box_stream.probes().size()); i < box_stream.n_random(); ++i) {
        const Point p = i < 0 ? box_stream.probes()[static_cast<std::size_t>(-i - 1)]
                              : box_stream.random_point(i);
        const double K1 = sys.k_of_r(p.t, 1.0);
        const double xn1 = p.x1.norm(), xn2 = p.x2.norm();
        const double yn1 = p.y1.norm(), yn2 = p.y2.norm();
        const std::string at = "t=" + fmt_t(p.t) + " s=" + fmt_t(p.s) + " x1=" + fmt_vec(p.x1) +
                               " x2=" + fmt_vec(p.x2) + " y1=" + fmt_vec(p.y1) +
                               " y2=" + fmt_vec(p.y2);

        sys.b(p.t, p.x1, p.y1, p.w1a, b1);
        const Vec dy = p.y1 - p.y2;
        if (dy.norm() > 0) {
            sys.b(p.t, p.x1, p.y2, p.w1a, b2);
            lip_y_b.add((b1 - b2).norm(),
                        dy.norm() * (std::pow(yn1, pp.theta2) + std::pow(yn2, pp.theta2) + K1 +
                                     std::pow(xn1, pp.theta3)),
                        "y-lipschitz-b " + at);
        }
        if (p.t != p.s) {
            sys.b(p.s, p.x1, p.y1, p.w1b, b2);
            holder_t_b.add((b1 - b2).norm(),
                           std::pow(std::abs(p.t - p.s), pp.gamma1) *
                               (std::pow(yn1, pp.theta2) + std::pow(xn1, pp.theta3) + pp.holder_z),
                           "t-hoelder-b " + at +
                               (sys.slow_reads_w1
                                    ? " w1a=" + fmt_vec(p.w1a) + " w1b=" + fmt_vec(p.w1b)
                                    : ""));
        }

        sys.f(p.t, p.x1, p.y1, fv1);
        sys.f(p.s, p.x2, p.y1, fv2); // same y on both sides of the space-time bound
        spacetime_f.add((fv1 - fv2).norm(),
                        (std::pow(std::abs(p.t - p.s), pp.gamma2) + (p.x1 - p.x2).norm()) *
                            (1.0 + std::pow(xn1, pp.alpha1) + std::pow(xn2, pp.alpha1) +
                             std::pow(yn1, pp.alpha2)),
                        "spacetime-f " + at);
        sys.g(p.t, p.x1, p.y1, g1);
        sys.g(p.s, p.x2, p.y2, g2);
        lip_g.add((g1 - g2).norm(),
                  std::pow(std::abs(p.t - p.s), pp.gamma2) + (p.x1 - p.x2).norm() + dy.norm(),
                  "spacetime-g " + at);
        growth_f.add(fv1.norm(), 1.0 + std::pow(xn1, pp.alpha3) + std::pow(yn1, pp.alpha4),
                     "growth-f " + at);
        growth_g.add(g1.norm(), 1.0 + xn1 + yn1, "growth-g " + at);

        // informational empirical Lipschitz constants of f
        sys.f(p.t, p.x2, p.y1, fv2);
        if ((p.x1 - p.x2).norm() > 0)
            lip_x_f = std::max(lip_x_f, (fv1 - fv2).norm() / (p.x1 - p.x2).norm());
        sys.f(p.t, p.x1, p.y2, fv2);
        if (dy.norm() > 0) lip_y_f = std::max(lip_y_f, (fv1 - fv2).norm() / dy.norm());
    }

    // empirical t-Hoelder exponents (informational; min slope over anchors)
    const double exp_b = fit_t_exponent(
        sys, spec, [&](double t, double s, const Vec& x, const Vec& y, const Vec& wa, const Vec& wb) {
            Vec va(n), vb(n);
            sys.b(t, x, y, wa, va);
            sys.b(s, x, y, wb, vb);
            return (va - vb).norm();
        });
    const double exp_fg = fit_t_exponent(
        sys, spec, [&](double t, double s, const Vec& x, const Vec& y, const Vec&, const Vec&) {
            Vec va(m), vb(m);
            Mat ga(m, d2), gb(m, d2);
            sys.f(t, x, y, va);
            sys.f(s, x, y, vb);
            sys.g(t, x, y, ga);
            sys.g(s, x, y, gb);
            return (va - vb).norm() + (ga - gb).norm();
        });
    if (!std::isnan(exp_b)) rep.fitted["t_exponent_b"] = exp_b;
    if (!std::isnan(exp_fg)) rep.fitted["t_exponent_fg"] = exp_fg;

    rep.fitted["C_lip_y_b"] = lip_y_b.grid_value(kCeilGrowth);
    rep.fitted["C_holder_t_b"] = holder_t_b.grid_value(kCeilGrowth);
    rep.fitted["C_spacetime_f"] = spacetime_f.grid_value(kCeilGrowth);
    rep.fitted["C_spacetime_g"] = lip_g.grid_value(kCeilGrowth);
    rep.fitted["C_growth_f"] = growth_f.grid_value(kCeilGrowth);
    rep.fitted["C_growth_g"] = growth_g.grid_value(kCeilGrowth);
    rep.fitted["lip_x_f"] = lip_x_f;
    rep.fitted["lip_y_f"] = lip_y_f;

    rep.worst_margin = -std::numeric_limits<double>::infinity();
    merge(rep, local_x.worst, local_x.witness);
    for (const ConstantTracker* c :
         {&lip_y_b, &holder_t_b, &spacetime_f, &lip_g, &growth_f, &growth_g})
        merge(rep, c->margin(kCeilGrowth), c->witness);
    finalize(rep, local_x.pass() && lip_y_b.feasible(kCeilGrowth) &&
                      holder_t_b.feasible(kCeilGrowth) && spacetime_f.feasible(kCeilGrowth) &&
                      lip_g.feasible(kCeilGrowth) && growth_f.feasible(kCeilGrowth) &&
                      growth_g.feasible(kCeilGrowth));
    return rep;
}

} // namespace slowfast
