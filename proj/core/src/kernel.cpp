#include "slowfast/kernel.hpp"

#include <cmath>

namespace slowfast {

void drift_increment(SchemeKind kind, double h, const Vec& v, Vec& out) {
    if (kind == SchemeKind::TamedEM) {
        out = (h / (1.0 + h * v.norm())) * v;
    } else {
        out = h * v;
    }
}

namespace detail {

std::uint64_t exact_ratio(double a, double b, const char* who) {
    if (!(a > 0) || !(b > 0))
        throw GridMismatch(std::string(who) + ": lengths must be positive");
    const double q = a / b;
    const double r = std::round(q);
    if (r < 1 || std::abs(q - r) > 1e-9 * r)
        throw GridMismatch(std::string(who) + ": " + std::to_string(b) + " does not divide " +
                           std::to_string(a));
    return static_cast<std::uint64_t>(r);
}

} // namespace detail

namespace {

void require_base_steps(const NoiseBundle& noise, const CoupledOptions& opt) {
    if (std::abs(noise.dt1_base() - opt.slow.h) > 1e-12 * opt.slow.h)
        throw GridMismatch("noise bundle W1 base step does not equal slow.h");
    if (std::abs(noise.dt2_base() - opt.fast.h) > 1e-12 * opt.fast.h)
        throw GridMismatch("noise bundle W2 base step does not equal fast.h");
}

void require_state(const CoefficientSystem& sys, double eps, const Vec& x0, const Vec& y0) {
    if (x0.size() != sys.dims.n || y0.size() != sys.dims.m)
        throw Error("initial state dimensions do not match the system");
    const double eps0 = sys.params.epsilon0();
    if (!(eps > 0) || eps > eps0)
        throw EpsilonOutOfRange(eps, eps0);
}

} // namespace

PathPair simulate_coupled(const CoefficientSystem& sys, double eps, const Vec& x0,
                          const Vec& y0, const CoupledOptions& opt, const NoiseBundle& noise) {
    require_state(sys, eps, x0, y0);
    require_base_steps(noise, opt);
    const std::uint64_t n_steps = detail::exact_ratio(opt.T, opt.slow.h, "T/slow.h");
    const std::uint64_t n_sub = detail::exact_ratio(opt.slow.h, opt.fast.h, "slow.h/fast.h");

    const int n = sys.dims.n, m = sys.dims.m, d1 = sys.dims.d1;
    PathPair out;
    out.t.resize(n_steps + 1);
    out.x.setZero(n_steps + 1, n);
    out.y.setZero(n_steps + 1, m);
    out.w1.setZero(n_steps + 1, d1);

    Vec xc = x0, yc = y0, w1c = Vec::Zero(d1);
    Vec bv(n), binc(n), fv(m), finc(m), dw1(d1), dw2(sys.dims.d2), y_new(m);
    Mat sig(n, d1), gv(m, sys.dims.d2);
    const double inv_eps = 1.0 / eps;
    const double inv_sqrt_eps = 1.0 / std::sqrt(eps);
    const double h_fast = opt.fast.h;

    out.t[0] = 0.0;
    out.x.row(0) = x0.transpose();
    out.y.row(0) = y0.transpose();

    for (std::uint64_t k = 0; k < n_steps; ++k) {
        const double tk = static_cast<double>(k) * opt.slow.h;
        // slow coefficients use the step-start state, including the entering y
        sys.b(tk, xc, yc, w1c, bv);
        sys.sigma(tk, xc, w1c, sig);
        noise.w1_increment(k, dw1);

        for (std::uint64_t j = 0; j < n_sub && !out.exploded; ++j) {
            const double sj = tk + static_cast<double>(j) * h_fast;
            sys.f(sj, xc, yc, fv);
            fv *= inv_eps;
            drift_increment(opt.fast.kind, h_fast, fv, finc);
            sys.g(sj, xc, yc, gv);
            noise.w2_increment(k * n_sub + j, dw2);
            y_new = yc + finc;
            y_new.noalias() += inv_sqrt_eps * (gv * dw2);
            if (!y_new.allFinite()) {
                out.exploded = true;
                out.explosion_step = static_cast<std::ptrdiff_t>(k);
            } else {
                yc.swap(y_new);
            }
        }
        if (!out.exploded) {
            drift_increment(opt.slow.kind, opt.slow.h, bv, binc);
            binc.noalias() += sig * dw1;
            if (!binc.allFinite()) {
                out.exploded = true;
                out.explosion_step = static_cast<std::ptrdiff_t>(k);
            } else {
                xc += binc;
                w1c += dw1;
            }
        }
        out.t[k + 1] = static_cast<double>(k + 1) * opt.slow.h;
        out.x.row(k + 1) = xc.transpose();
        out.y.row(k + 1) = yc.transpose();
        out.w1.row(k + 1) = w1c.transpose();
        if (out.exploded) {
            for (std::uint64_t r = k + 2; r <= n_steps; ++r) {
                out.t[r] = static_cast<double>(r) * opt.slow.h;
                out.x.row(r) = xc.transpose();
                out.y.row(r) = yc.transpose();
                out.w1.row(r) = w1c.transpose();
            }
            break;
        }
    }
    return out;
}

AuxPaths simulate_khasminskii(const CoefficientSystem& sys, double eps, const Vec& x0,
                              const Vec& y0, double delta, const CoupledOptions& opt,
                              const NoiseBundle& noise) {
    require_state(sys, eps, x0, y0);
    require_base_steps(noise, opt);
    const std::uint64_t n_steps = detail::exact_ratio(opt.T, opt.slow.h, "T/slow.h");
    const std::uint64_t n_sub = detail::exact_ratio(opt.slow.h, opt.fast.h, "slow.h/fast.h");
    const std::uint64_t n_block = detail::exact_ratio(delta, opt.slow.h, "delta/slow.h");

    const int n = sys.dims.n, m = sys.dims.m, d1 = sys.dims.d1;
    AuxPaths out;
    out.t.resize(n_steps + 1);
    out.x.setZero(n_steps + 1, n);
    out.y.setZero(n_steps + 1, m);
    out.xhat.setZero(n_steps + 1, n);
    out.yhat.setZero(n_steps + 1, m);
    out.w1.setZero(n_steps + 1, d1);

    Vec xc = x0, yc = y0, xh = x0, yh = y0, w1c = Vec::Zero(d1);
    double tb = 0.0;        // block-start time
    Vec xb = x0, w1b = w1c; // coupled slow state and W1 value at block start
    Vec bv(n), bh(n), inc(n), fv(m), finc(m), dw1(d1), dw2(sys.dims.d2), upd(m);
    Mat sig(n, d1), gv(m, sys.dims.d2);
    const double inv_eps = 1.0 / eps;
    const double inv_sqrt_eps = 1.0 / std::sqrt(eps);
    const double h_fast = opt.fast.h;

    out.t[0] = 0.0;
    out.x.row(0) = x0.transpose();
    out.y.row(0) = y0.transpose();
    out.xhat.row(0) = x0.transpose();
    out.yhat.row(0) = y0.transpose();

    auto record = [&](std::uint64_t row) {
        out.t[row] = static_cast<double>(row) * opt.slow.h;
        out.x.row(row) = xc.transpose();
        out.y.row(row) = yc.transpose();
        out.xhat.row(row) = xh.transpose();
        out.yhat.row(row) = yh.transpose();
        out.w1.row(row) = w1c.transpose();
    };

    for (std::uint64_t k = 0; k < n_steps; ++k) {
        const double tk = static_cast<double>(k) * opt.slow.h;
        if (k % n_block == 0) {
            tb = tk;
            xb = xc;
            w1b = w1c;
        }
        sys.b(tk, xc, yc, w1c, bv);
        sys.b(tb, xb, yh, w1b, bh); // auxiliary slow drift: frozen block arguments
        sys.sigma(tk, xc, w1c, sig);
        noise.w1_increment(k, dw1);

        for (std::uint64_t j = 0; j < n_sub && !out.exploded; ++j) {
            const double sj = tk + static_cast<double>(j) * h_fast;
            noise.w2_increment(k * n_sub + j, dw2);

            sys.f(sj, xc, yc, fv);
            fv *= inv_eps;
            drift_increment(opt.fast.kind, h_fast, fv, finc);
            sys.g(sj, xc, yc, gv);
            upd = yc + finc;
            upd.noalias() += inv_sqrt_eps * (gv * dw2);
            const bool ok_y = upd.allFinite();
            if (ok_y) yc.swap(upd);

            sys.f(tb, xb, yh, fv); // auxiliary fast pair: frozen block arguments
            fv *= inv_eps;
            drift_increment(opt.fast.kind, h_fast, fv, finc);
            sys.g(tb, xb, yh, gv);
            upd = yh + finc;
            upd.noalias() += inv_sqrt_eps * (gv * dw2);
            const bool ok_yh = upd.allFinite();
            if (ok_yh) yh.swap(upd);

            if (!ok_y || !ok_yh) {
                out.exploded = true;
                out.explosion_step = static_cast<std::ptrdiff_t>(k);
            }
        }
        if (!out.exploded) {
            drift_increment(opt.slow.kind, opt.slow.h, bv, inc);
            inc.noalias() += sig * dw1;
            const bool ok_x = inc.allFinite();
            if (ok_x) xc += inc;

            drift_increment(opt.slow.kind, opt.slow.h, bh, inc);
            inc.noalias() += sig * dw1; // the live diffusion term, shared with X
            const bool ok_xh = inc.allFinite();
            if (ok_xh) xh += inc;

            if (!ok_x || !ok_xh) {
                out.exploded = true;
                out.explosion_step = static_cast<std::ptrdiff_t>(k);
            } else {
                w1c += dw1;
            }
        }
        record(k + 1);
        if (out.exploded) {
            for (std::uint64_t r = k + 2; r <= n_steps; ++r) record(r);
            break;
        }
    }
    return out;
}

} // namespace slowfast
