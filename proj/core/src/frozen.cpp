#include "slowfast/frozen.hpp"

#include "slowfast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace slowfast {

namespace {

Dims frozen_dims(const FrozenSystem& fr) {
    Dims d;
    d.n = std::max<int>(1, static_cast<int>(fr.x0.size()));
    d.m = fr.m;
    d.d1 = 1;
    d.d2 = fr.d2;
    return d;
}

double floored(double se, double scale) { return std::max(se, 1e-12 * (1.0 + std::abs(scale))); }

} // namespace

FrozenPath simulate_frozen(const FrozenSystem& frozen, const Vec& y0, double S,
                           StepScheme scheme, const NoiseBundle& noise) {
    if (y0.size() != frozen.m) throw Error("simulate_frozen: y0 dimension mismatch");
    const std::uint64_t n_steps = detail::exact_ratio(S, scheme.h, "S/scheme.h");
    FrozenPath out;
    out.s.resize(n_steps + 1);
    out.y.setZero(n_steps + 1, frozen.m);
    out.y.row(0) = y0.transpose();

    Vec y = y0, fv(frozen.m), finc(frozen.m), dw(frozen.d2), upd(frozen.m);
    Mat gv(frozen.m, frozen.d2);
    for (std::uint64_t k = 0; k < n_steps; ++k) {
        frozen.drift(y, fv);
        drift_increment(scheme.kind, scheme.h, fv, finc);
        frozen.diffusion(y, gv);
        noise.frozen_increment(k, scheme.h, dw);
        upd = y + finc;
        upd.noalias() += gv * dw;
        if (!upd.allFinite()) {
            out.exploded = true;
            out.explosion_step = static_cast<std::ptrdiff_t>(k);
            for (std::uint64_t r = k + 1; r <= n_steps; ++r) {
                out.s[r] = static_cast<double>(r) * scheme.h;
                out.y.row(r) = y.transpose();
            }
            return out;
        }
        y.swap(upd);
        out.s[k + 1] = static_cast<double>(k + 1) * scheme.h;
        out.y.row(k + 1) = y.transpose();
    }
    return out;
}

FrozenEstimate estimate_bbar(const CoefficientSystem& sys, double t, const Vec& x,
                             const Vec& y0, const EstimateOpts& opts, const Vec& w1) {
    if (x.size() != sys.dims.n) throw Error("estimate_bbar: x dimension mismatch");
    if (y0.size() != sys.dims.m) throw Error("estimate_bbar: y0 dimension mismatch");
    if (opts.n_chains < 2) throw Error("estimate_bbar: need at least 2 chains for error bars");
    Vec w1v = w1.size() ? w1 : Vec(Vec::Zero(sys.dims.d1));
    if (w1v.size() != sys.dims.d1) throw Error("estimate_bbar: w1 dimension mismatch");

    double burn_in = opts.burn_in;
    if (burn_in < 0) {
        // default rule: contraction from the claimed monotonicity gap,
        // exp(-beta * s / 2) * scale < 1e-3
        const double beta = sys.params.beta > 0 ? sys.params.beta : 3.0;
        const double scale = 1.0 + x.norm() + y0.norm();
        burn_in = std::max(1.0, 2.0 / beta * std::log(scale * 1e3));
    }
    if (!(burn_in > 0) || !(opts.sample_time > 0))
        throw Error("estimate_bbar: burn_in and sample_time must be positive");

    const double h = opts.scheme.h;
    const auto n_burn = static_cast<std::uint64_t>(std::llround(burn_in / h));
    const auto n_samp = static_cast<std::uint64_t>(std::llround(opts.sample_time / h));
    if (n_samp < 2) throw Error("estimate_bbar: sample_time shorter than two steps");

    const FrozenSystem fr = frozen_coefficients(sys, t, x);
    const int n = sys.dims.n, m = sys.dims.m;
    const int nz = m + 1; // control signals: f components + the Ito balance
    const int J = opts.n_chains;
    const int B = static_cast<int>(std::min<std::uint64_t>(20, n_samp));

    Mat chain_a(J, n), chain_z(J, nz);            // plain chain means
    std::vector<Mat> batch_a(J), batch_z(J);      // per-chain batch means
    Mat szz = Mat::Zero(nz, nz), sza = Mat::Zero(nz, n);

    Vec y(m), fv(m), finc(m), dw(fr.d2), upd(m), bvec(n), z(nz);
    Mat gv(m, fr.d2);

    for (int j = 0; j < J; ++j) {
        NoiseBundle noise(opts.seed, static_cast<std::uint64_t>(j), sys.dims, h, h);
        y = y0;
        std::uint64_t step = 0;
        auto advance = [&]() -> bool {
            drift_increment(opts.scheme.kind, h, fv, finc);
            noise.frozen_increment(step++, h, dw);
            upd = y + finc;
            upd.noalias() += gv * dw;
            if (!upd.allFinite()) return false;
            y.swap(upd);
            return true;
        };
        for (std::uint64_t k = 0; k < n_burn; ++k) {
            fr.drift(y, fv);
            fr.diffusion(y, gv);
            if (!advance())
                throw Explosion("estimate_bbar: chain " + std::to_string(j) +
                                " exploded during burn-in at s=" + std::to_string(step * h));
        }
        Mat asum = Mat::Zero(B, n), zsum = Mat::Zero(B, nz);
        std::vector<std::int64_t> bsize(B, 0);
        for (std::uint64_t i = 0; i < n_samp; ++i) {
            fr.drift(y, fv);
            fr.diffusion(y, gv);
            sys.b(t, x, y, w1v, bvec);
            if (!bvec.allFinite())
                throw Explosion("estimate_bbar: slow drift overflowed on chain " + std::to_string(j));
            z.head(m) = fv;
            z[m] = 2.0 * y.dot(fv) + gv.squaredNorm();
            const auto bi = static_cast<int>((i * static_cast<std::uint64_t>(B)) / n_samp);
            asum.row(bi) += bvec.transpose();
            zsum.row(bi) += z.transpose();
            ++bsize[bi];
            if (!advance())
                throw Explosion("estimate_bbar: chain " + std::to_string(j) +
                                " exploded at s=" + std::to_string(step * h));
        }
        chain_a.row(j) = asum.colwise().sum() / static_cast<double>(n_samp);
        chain_z.row(j) = zsum.colwise().sum() / static_cast<double>(n_samp);
        batch_a[j] = asum;
        batch_z[j] = zsum;
        for (int bi = 0; bi < B; ++bi) {
            batch_a[j].row(bi) /= static_cast<double>(bsize[bi]);
            batch_z[j].row(bi) /= static_cast<double>(bsize[bi]);
        }
    }

    // pooled within-chain covariance of batch means (each chain centered on
    // its own batch average, so chain-level offsets do not leak in)
    Vec within_var = Vec::Zero(n);
    if (B >= 2) {
        for (int j = 0; j < J; ++j) {
            const Mat ca = batch_a[j].rowwise() - batch_a[j].colwise().mean();
            const Mat cz = batch_z[j].rowwise() - batch_z[j].colwise().mean();
            szz.noalias() += cz.transpose() * cz;
            sza.noalias() += cz.transpose() * ca;
            within_var += ca.array().square().colwise().sum().matrix().transpose();
        }
        within_var /= static_cast<double>(J * (B - 1));
    }

    FrozenEstimate est;
    est.t = t;
    est.x = x;
    est.burn_in = burn_in;
    est.sample_time = opts.sample_time;
    est.n_chains = J;
    est.variance_reduction = opts.variance_reduction && B >= 2;

    Mat adjusted = chain_a;
    if (est.variance_reduction) {
        const Mat gamma = szz.completeOrthogonalDecomposition().solve(sza); // nz x n
        adjusted.noalias() -= chain_z * gamma;
    }
    est.bbar = adjusted.colwise().mean().transpose();
    Vec between = (adjusted.rowwise() - est.bbar.transpose()).array().square().colwise().sum().matrix().transpose() /
                  static_cast<double>(J - 1);
    est.stderr_ = (between / static_cast<double>(J)).cwiseSqrt();
    for (int i = 0; i < n; ++i) est.stderr_[i] = floored(est.stderr_[i], est.bbar[i]);

    {
        RunningStats resid;
        for (int j = 0; j < J; ++j) resid.add(chain_z(j, m));
        est.stationarity_residual = resid.mean();
        est.stationarity_stderr = floored(resid.stderr_mean(), resid.mean());
    }

    if (B >= 2) {
        // between-chain spread of the *plain* means vs the spread predicted
        // from within-chain fluctuations; > 10x flags unmixed chains
        const Vec plain_mean = chain_a.colwise().mean().transpose();
        const Vec plain_between =
            ((chain_a.rowwise() - plain_mean.transpose()).array().square().colwise().sum() /
             static_cast<double>(J - 1))
                .matrix()
                .transpose();
        for (int i = 0; i < n; ++i) {
            const double between_sd = std::sqrt(plain_between[i]);
            const double within_sd = floored(std::sqrt(within_var[i] / B), plain_mean[i]);
            if (between_sd > 10.0 * within_sd)
                throw NonErgodicWarning(
                    "estimate_bbar: between-chain spread " + std::to_string(between_sd) +
                    " exceeds 10x the within-chain prediction " + std::to_string(within_sd) +
                    " in component " + std::to_string(i) + "; increase burn_in");
        }
    }
    return est;
}

ContractionReport contraction_test(const FrozenSystem& frozen, const Vec& y1, const Vec& y2,
                                   double S, int n_paths, StepScheme scheme, std::uint64_t seed) {
    if (y1.size() != frozen.m || y2.size() != frozen.m)
        throw Error("contraction_test: start dimension mismatch");
    if ((y1 - y2).norm() == 0) throw Error("contraction_test: starts must differ");
    if (n_paths < 2) throw Error("contraction_test: need at least 2 paths");

    const std::uint64_t n_steps = detail::exact_ratio(S, scheme.h, "S/scheme.h");
    const std::uint64_t stride = std::max<std::uint64_t>(1, n_steps / 50);
    std::vector<std::uint64_t> rec_steps;
    for (std::uint64_t k = 0; k <= n_steps; k += stride) rec_steps.push_back(k);
    if (rec_steps.back() != n_steps) rec_steps.push_back(n_steps);

    const Dims dims = frozen_dims(frozen);
    std::vector<RunningStats> gap(rec_steps.size());
    Vec ya(frozen.m), yb(frozen.m), fv(frozen.m), finc(frozen.m), dw(frozen.d2), upd(frozen.m);
    Mat gv(frozen.m, frozen.d2);

    for (int p = 0; p < n_paths; ++p) {
        NoiseBundle noise(seed, static_cast<std::uint64_t>(p), dims, scheme.h, scheme.h);
        ya = y1;
        yb = y2;
        std::size_t next_rec = 0;
        for (std::uint64_t k = 0; k <= n_steps; ++k) {
            if (next_rec < rec_steps.size() && rec_steps[next_rec] == k) {
                gap[next_rec].add((ya - yb).squaredNorm());
                ++next_rec;
            }
            if (k == n_steps) break;
            noise.frozen_increment(k, scheme.h, dw);
            for (Vec* y : {&ya, &yb}) {
                frozen.drift(*y, fv);
                drift_increment(scheme.kind, scheme.h, fv, finc);
                frozen.diffusion(*y, gv);
                upd = *y + finc;
                upd.noalias() += gv * dw;
                if (!upd.allFinite())
                    throw Explosion("contraction_test: path " + std::to_string(p) +
                                    " exploded at s=" + std::to_string(k * scheme.h));
                y->swap(upd);
            }
        }
    }

    ContractionReport rep;
    rep.claimed_beta = frozen.claims ? frozen.claims->beta : 0.0;
    std::vector<double> fs, fy, fw;
    for (std::size_t i = 0; i < rec_steps.size(); ++i) {
        const double s = static_cast<double>(rec_steps[i]) * scheme.h;
        rep.s.push_back(s);
        rep.mean_sq_gap.push_back(gap[i].mean());
        rep.gap_stderr.push_back(gap[i].stderr_mean());
        // log-scale fit over s > 0 above the floating-point coupling floor
        if (rec_steps[i] > 0 && gap[i].mean() > 1e-12) {
            const double se_log = std::max(gap[i].stderr_mean() / gap[i].mean(), 1e-12);
            fs.push_back(s);
            fy.push_back(std::log(gap[i].mean()));
            fw.push_back(1.0 / (se_log * se_log));
        }
    }
    if (fs.size() < 3)
        throw DegenerateGap("contraction_test: gap curve hit the 1e-12 floor before 3 usable points");
    const LineFit fit = fit_weighted_line(fs, fy, fw);
    rep.rate = -fit.slope;
    rep.rate_stderr = fit.slope_stderr;
    return rep;
}

ErgodicCurve ergodic_convergence_test(const CoefficientSystem& sys, double t, const Vec& x,
                                      const Vec& y0, const std::vector<double>& s_grid,
                                      int n_paths, const FrozenEstimate& reference,
                                      StepScheme scheme, std::uint64_t seed, const Vec& w1) {
    if (s_grid.empty()) throw Error("ergodic_convergence_test: empty s grid");
    if (n_paths < 2) throw Error("ergodic_convergence_test: need at least 2 paths");
    Vec w1v = w1.size() ? w1 : Vec(Vec::Zero(sys.dims.d1));
    const FrozenSystem fr = frozen_coefficients(sys, t, x);

    std::vector<std::uint64_t> rec_steps;
    for (double s : s_grid) {
        const std::uint64_t k =
            s == 0 ? 0 : detail::exact_ratio(s, scheme.h, "s_grid entry / scheme.h");
        if (!rec_steps.empty() && k <= rec_steps.back())
            throw Error("ergodic_convergence_test: s_grid must be strictly increasing");
        rec_steps.push_back(k);
    }

    std::vector<VecStats> acc(rec_steps.size(), VecStats(sys.dims.n));
    Vec y(fr.m), fv(fr.m), finc(fr.m), dw(fr.d2), upd(fr.m), bvec(sys.dims.n);
    Mat gv(fr.m, fr.d2);

    for (int p = 0; p < n_paths; ++p) {
        NoiseBundle noise(seed, static_cast<std::uint64_t>(p), sys.dims, scheme.h, scheme.h);
        y = y0;
        std::size_t next_rec = 0;
        for (std::uint64_t k = 0; k <= rec_steps.back(); ++k) {
            if (next_rec < rec_steps.size() && rec_steps[next_rec] == k) {
                sys.b(t, x, y, w1v, bvec);
                acc[next_rec].add(bvec);
                ++next_rec;
            }
            if (k == rec_steps.back()) break;
            fr.drift(y, fv);
            drift_increment(scheme.kind, scheme.h, fv, finc);
            fr.diffusion(y, gv);
            noise.frozen_increment(k, scheme.h, dw);
            upd = y + finc;
            upd.noalias() += gv * dw;
            if (!upd.allFinite())
                throw Explosion("ergodic_convergence_test: path " + std::to_string(p) +
                                " exploded at s=" + std::to_string(k * scheme.h));
            y.swap(upd);
        }
    }

    ErgodicCurve curve;
    for (std::size_t i = 0; i < rec_steps.size(); ++i) {
        curve.s.push_back(static_cast<double>(rec_steps[i]) * scheme.h);
        curve.deviation.push_back((acc[i].mean() - reference.bbar).norm());
        curve.stderr_.push_back(acc[i].stderr_mean().norm());
    }
    return curve;
}

MomentCurve moment_bound_test(const FrozenSystem& frozen, const Vec& y0, int k, double S,
                              int n_paths, StepScheme scheme, std::uint64_t seed) {
    if (y0.size() != frozen.m) throw Error("moment_bound_test: y0 dimension mismatch");
    if (n_paths < 2) throw Error("moment_bound_test: need at least 2 paths");
    if (!frozen.claims)
        throw MissingKProcess("moment_bound_test: system declares no coercivity claims");
    const HypothesisParams& cl = *frozen.claims;
    const bool covered =
        k >= 2 && (cl.beta_k.count(k) > 0 || (cl.k_max && k <= *cl.k_max) ||
                   (!cl.k_max && !cl.beta_k.empty()));
    if (!covered)
        throw MissingKProcess("moment_bound_test: no coercivity claim covers moment order " +
                              std::to_string(k));

    const std::uint64_t n_steps = detail::exact_ratio(S, scheme.h, "S/scheme.h");
    const std::uint64_t stride = std::max<std::uint64_t>(1, n_steps / 200);
    std::vector<std::uint64_t> rec_steps;
    for (std::uint64_t s = 0; s <= n_steps; s += stride) rec_steps.push_back(s);
    if (rec_steps.back() != n_steps) rec_steps.push_back(n_steps);

    const Dims dims = frozen_dims(frozen);
    std::vector<RunningStats> acc(rec_steps.size());
    Vec y(frozen.m), fv(frozen.m), finc(frozen.m), dw(frozen.d2), upd(frozen.m);
    Mat gv(frozen.m, frozen.d2);

    for (int p = 0; p < n_paths; ++p) {
        NoiseBundle noise(seed, static_cast<std::uint64_t>(p), dims, scheme.h, scheme.h);
        y = y0;
        std::size_t next_rec = 0;
        for (std::uint64_t s = 0; s <= n_steps; ++s) {
            if (next_rec < rec_steps.size() && rec_steps[next_rec] == s) {
                acc[next_rec].add(std::pow(y.norm(), k));
                ++next_rec;
            }
            if (s == n_steps) break;
            frozen.drift(y, fv);
            drift_increment(scheme.kind, scheme.h, fv, finc);
            frozen.diffusion(y, gv);
            noise.frozen_increment(s, scheme.h, dw);
            upd = y + finc;
            upd.noalias() += gv * dw;
            if (!upd.allFinite())
                throw Explosion("moment_bound_test: path " + std::to_string(p) +
                                " exploded at s=" + std::to_string(s * scheme.h));
            y.swap(upd);
        }
    }

    MomentCurve curve;
    curve.k = k;
    for (std::size_t i = 0; i < rec_steps.size(); ++i) {
        curve.s.push_back(static_cast<double>(rec_steps[i]) * scheme.h);
        curve.moment.push_back(acc[i].mean());
        curve.stderr_.push_back(acc[i].stderr_mean());
        curve.sup_moment = std::max(curve.sup_moment, acc[i].mean());
    }
    return curve;
}

} // namespace slowfast
