#include "slowfast/model.hpp"

#include <cmath>
#include <cstdio>

namespace slowfast {

double HypothesisParams::epsilon0() const {
    return lambda1 > 0 ? lambda2 / lambda1 : 1.0;
}

void HypothesisParams::validate() const {
    if ((lambda1 == 0) != (lambda2 == 0))
        throw Error("lambda2 must vanish exactly when lambda1 does");
    if (lambda1 < 0 || lambda2 < 0)
        throw Error("lambda weights must be nonnegative");
    if (theta1 < 0 || theta2 < 1 || theta3 < 1 || theta4 < 2 || theta5 < 1 || theta6 < 1)
        throw Error("growth exponents out of range (theta1>=0, theta2,theta3,theta5,theta6>=1, theta4>=2)");
    if (gamma1 <= 0 || gamma1 > 1 || gamma2 <= 0 || gamma2 > 1)
        throw Error("Hoelder exponents must lie in (0, 1]");
    if (alpha1 < 1 || alpha2 < 1 || alpha3 < 1 || alpha4 < 1)
        throw Error("alpha exponents must be >= 1");
    for (const auto& [k, bk] : beta_k) {
        if (k < 2) throw Error("coercivity order k must be >= 2");
        if (bk <= 0) throw Error("claimed coercivity gap must be positive");
    }
    if (k_max && *k_max < 2)
        throw Error("k_max must be >= 2");
}

CoefficientValues evaluate_coefficients(const CoefficientSystem& sys, double t,
                                        const Vec& x, const Vec& y, const Vec& w1) {
    if (x.size() != sys.dims.n || y.size() != sys.dims.m || w1.size() != sys.dims.d1)
        throw Error("evaluate_coefficients: input dimensions do not match the system");
    CoefficientValues v;
    v.b.setZero(sys.dims.n);
    v.sigma.setZero(sys.dims.n, sys.dims.d1);
    v.f.setZero(sys.dims.m);
    v.g.setZero(sys.dims.m, sys.dims.d2);
    sys.b(t, x, y, w1, v.b);
    sys.sigma(t, x, w1, v.sigma);
    sys.f(t, x, y, v.f);
    sys.g(t, x, y, v.g);
    auto check = [&](const char* which, bool ok) {
        if (!ok) throw NonFiniteCoefficient(which, t, "inputs were finite");
    };
    check("b", v.b.allFinite());
    check("sigma", v.sigma.allFinite());
    check("f", v.f.allFinite());
    check("g", v.g.allFinite());
    if (v.b.size() != sys.dims.n || v.sigma.rows() != sys.dims.n || v.sigma.cols() != sys.dims.d1 ||
        v.f.size() != sys.dims.m || v.g.rows() != sys.dims.m || v.g.cols() != sys.dims.d2)
        throw Error("evaluate_coefficients: a map resized its output buffer");
    return v;
}

FrozenSystem frozen_coefficients(const CoefficientSystem& sys, double t, const Vec& x) {
    if (x.size() != sys.dims.n)
        throw Error("frozen_coefficients: x dimension mismatch");
    FrozenSystem fr;
    fr.m = sys.dims.m;
    fr.d2 = sys.dims.d2;
    fr.t0 = t;
    fr.x0 = x;
    fr.drift = [f = sys.f, t, x](const Vec& y, Vec& out) { f(t, x, y, out); };
    fr.diffusion = [g = sys.g, t, x](const Vec& y, Mat& out) { g(t, x, y, out); };
    fr.claims = sys.params;
    return fr;
}

CoefficientSystem make_model1() {
    CoefficientSystem s;
    s.tag = "model1";
    s.dims = {1, 1, 1, 1};

    HypothesisParams& p = s.params;
    p.theta1 = 0;
    p.theta2 = 2;
    p.theta3 = 1;
    p.theta4 = 6;
    p.theta5 = 3;
    p.theta6 = 3;
    p.gamma1 = 1;
    p.gamma2 = 1;
    p.holder_z = 0;
    p.alpha1 = 2;
    p.alpha2 = 6;
    p.alpha3 = 4;
    p.alpha4 = 6;
    // 2 x y^3 <= lambda1 y^6 + x^2/(2 lambda1) forces lambda1 > 0; the matching
    // dissipation -2y^6 in the coercivity bound leaves lambda2 up to 2
    p.lambda1 = 1;
    p.lambda2 = 1.5;
    p.beta = 3;        // true gap is 5 (at the origin); claim stays conservative
    p.k_max.reset();   // coercivity of every order k >= 2
    for (int k : {2, 4, 8, 16, 32})
        p.beta_k[k] = 5.0;

    s.b = [](double, const Vec& x, const Vec& y, const Vec&, Vec& out) {
        out[0] = -x[0] * x[0] * x[0] + x[0] + y[0] * y[0] * y[0];
    };
    s.sigma = [](double, const Vec& x, const Vec&, Mat& out) { out(0, 0) = x[0]; };
    s.f = [](double, const Vec& x, const Vec& y, Vec& out) {
        const double y2 = y[0] * y[0];
        out[0] = -x[0] * x[0] * y2 * y[0] - 3.0 * y[0] - y2 * y2 * y[0];
    };
    s.g = [](double, const Vec& x, const Vec& y, Mat& out) {
        out(0, 0) = std::sin(x[0]) + std::sin(y[0]);
    };
    s.k_of_r = [](double, double R) { return 6.0 * R * R + 3.0; };
    return s;
}

CoefficientSystem make_model2(double lambda1) {
    CoefficientSystem s;
    s.tag = lambda1 == 0 ? "model2" : "model2:lambda1=" + std::to_string(lambda1);
    s.dims = {1, 1, 1, 1};

    HypothesisParams& p = s.params;
    p.theta1 = 2;
    p.theta2 = 1;
    p.theta3 = 3;
    p.theta4 = 2;
    p.theta5 = 6;
    p.theta6 = 4;
    p.gamma1 = 1;
    p.gamma2 = 0.5;
    p.holder_z = 0;
    p.alpha1 = p.alpha2 = p.alpha3 = p.alpha4 = 1;
    p.lambda1 = lambda1;
    p.lambda2 = lambda1 > 0 ? 0.25 : 0.0;
    p.beta = 15; // 2*(-8) + 1 exactly
    p.k_max = 16;
    for (int k = 2; k <= 16; ++k)
        p.beta_k[k] = 0.5 * (17 - k); // y^2 budget of 2<y,f> + (k-1)||g||^2, halved

    s.b = [lambda1](double t, const Vec& x, const Vec& y, const Vec&, Vec& out) {
        out[0] = t * t * x[0] - x[0] * x[0] * x[0] * y[0] * y[0] + lambda1 * y[0];
    };
    s.sigma = [](double t, const Vec& x, const Vec&, Mat& out) { out(0, 0) = t * t + x[0]; };
    s.f = [](double t, const Vec& x, const Vec& y, Vec& out) {
        out[0] = std::sqrt(t) * x[0] - 8.0 * y[0];
    };
    s.g = [](double t, const Vec& x, const Vec& y, Mat& out) { out(0, 0) = t + x[0] + y[0]; };
    s.k_of_r = [](double t, double R) {
        const double t2 = t * t;
        return 6.0 * R * R + 2.0 * t2 * t2 + 2.0;
    };

    // Frozen dynamics dY = (sqrt(t) x - 8 Y) ds + (t + x + Y) dW are affine:
    // stationary mean m = sqrt(t) x / 8 and second moment M solve
    //   0 = 2 m f-slope + ... => M = [2 sqrt(t) x m + (t+x)^2 + 2 (t+x) m] / 15,
    // giving bbar(t, x) = t^2 x - x^3 M + lambda1 m in closed form.
    s.analytic_bbar = [lambda1](double t, const Vec& x, const Vec&, Vec& out) {
        const double sq = std::sqrt(t);
        const double m = sq * x[0] / 8.0;
        const double c = t + x[0];
        const double M = (2.0 * sq * x[0] * m + c * c + 2.0 * c * m) / 15.0;
        out[0] = t * t * x[0] - x[0] * x[0] * x[0] * M + lambda1 * m;
    };
    return s;
}

CoefficientSystem make_model3() {
    CoefficientSystem s;
    s.tag = "model3";
    s.dims = {1, 1, 1, 1};

    HypothesisParams& p = s.params;
    p.theta1 = 0;
    p.theta2 = 1;
    p.theta3 = 3;
    p.theta4 = 2;
    p.theta5 = 3;
    p.theta6 = 1;
    p.gamma1 = 0.49; // Brownian paths are Hoelder for every exponent < 1/2
    p.gamma2 = 1;
    p.holder_z = 3;  // empirical Hoelder quotient scale of W1 on [0,1], order-of-magnitude claim
    p.alpha1 = p.alpha2 = p.alpha3 = p.alpha4 = 1;
    p.lambda1 = 1;   // 2<x,b> <= 2xy <= y^2 + x^2
    p.lambda2 = 0.25;
    p.beta = 15;
    p.k_max = 16;
    for (int k = 2; k <= 16; ++k)
        p.beta_k[k] = 0.5 * (17 - k);

    s.slow_reads_w1 = true;
    s.b = [](double, const Vec& x, const Vec& y, const Vec& w1, Vec& out) {
        out[0] = -std::abs(std::sin(w1[0])) * x[0] * x[0] * x[0] + y[0];
    };
    s.sigma = [](double, const Vec& x, const Vec&, Mat& out) { out(0, 0) = x[0]; };
    s.f = [](double, const Vec& x, const Vec& y, Vec& out) { out[0] = x[0] - 8.0 * y[0]; };
    s.g = [](double, const Vec&, const Vec& y, Mat& out) { out(0, 0) = y[0]; };
    s.k_of_r = [](double, double R) { return 6.0 * R * R + 1.0; };

    // Frozen dynamics dY = (x - 8Y) ds + Y dW: stationary mean x/8, so
    // bbar(t, x, w1) = -|sin w1| x^3 + x/8.
    s.analytic_bbar = [](double, const Vec& x, const Vec& w1, Vec& out) {
        out[0] = -std::abs(std::sin(w1[0])) * x[0] * x[0] * x[0] + x[0] / 8.0;
    };
    return s;
}

CoefficientSystem make_builtin(const std::string& tag, double lambda1) {
    if (tag == "model1") return make_model1();
    if (tag == "model2") return make_model2(lambda1);
    if (tag == "model3") return make_model3();
    throw Error("unknown builtin model tag: " + tag);
}

std::string model_fingerprint(const CoefficientSystem& sys) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a 64
    auto mix_bytes = [&h](const void* p, std::size_t len) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= c[i];
            h *= 0x100000001b3ULL;
        }
    };
    auto mix_double = [&](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        mix_bytes(buf, std::char_traits<char>::length(buf));
    };
    mix_bytes(sys.tag.data(), sys.tag.size());
    const int dims[4] = {sys.dims.n, sys.dims.m, sys.dims.d1, sys.dims.d2};
    mix_bytes(dims, sizeof dims);
    const HypothesisParams& p = sys.params;
    for (double v : {p.theta1, p.theta2, p.theta3, p.theta4, p.theta5, p.theta6,
                     p.gamma1, p.gamma2, p.alpha1, p.alpha2, p.alpha3, p.alpha4,
                     p.lambda1, p.lambda2, p.beta, p.holder_z})
        mix_double(v);
    for (const auto& [k, bk] : p.beta_k) {
        mix_double(static_cast<double>(k));
        mix_double(bk);
    }
    mix_double(p.k_max ? static_cast<double>(*p.k_max) : -1.0);
    mix_double(sys.slow_reads_w1 ? 1.0 : 0.0);
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

} // namespace slowfast
