#include "slowfast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

namespace slowfast {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Static stride partition over [0, n); per-index results land in
/// preallocated slots, so scheduling cannot affect any output.
void parallel_for(long n, int workers, const std::function<void(long)>& body) {
    workers = static_cast<int>(std::min<long>(std::max(workers, 1), n));
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
            try {
                for (long i = w; i < n; i += workers) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

long fast_substep_count(double eps, long substeps) {
    return std::max(1L, std::lround(static_cast<double>(substeps) / eps));
}

} // namespace

BbarProvider make_provider(const CoefficientSystem& sys, const ExperimentConfig& config) {
    if (config.provider.kind == "analytic") return BbarProvider::analytic(sys);
    if (config.provider.kind == "table") {
        AveragedDriftTable tbl = AveragedDriftTable::load(config.provider.table_path);
        tbl.verify_fingerprint(sys);
        return BbarProvider::table(std::move(tbl), sys);
    }
    if (config.provider.kind == "on-demand")
        return BbarProvider::on_demand(sys, config.provider.estimate, config.provider.t_quantum,
                                       config.provider.x_quantum);
    throw Error("unknown provider kind '" + config.provider.kind + "'");
}

ConvergenceReport run_convergence(const CoefficientSystem& sys, const BbarProvider& provider,
                                  const ExperimentConfig& config) {
    config.validate(sys);
    const Vec x0 = config.initial_x(sys);
    const Vec y0 = config.initial_y(sys);
    const std::size_t n_eps = config.eps.size();
    const long n_paths = config.n_paths;

    // per (path, level) sup-error^p; NaN marks an exploded pair
    std::vector<std::vector<double>> errors(n_eps,
                                            std::vector<double>(static_cast<std::size_t>(n_paths)));
    const double nan = std::numeric_limits<double>::quiet_NaN();

    parallel_for(n_paths, config.workers, [&](long i) {
        // the averaged leg is simulated once per path; W1 is shared with
        // every level because the SlowW1 stream ignores the W2 substream
        NoiseBundle bar_noise(config.seed, static_cast<std::uint64_t>(i), sys.dims, config.h_slow,
                              config.h_slow);
        const AveragedPath xbar = simulate_averaged(sys, provider, x0, config.T,
                                                    {SchemeKind::TamedEM, config.h_slow}, bar_noise);
        for (std::size_t e = 0; e < n_eps; ++e) {
            const double eps = config.eps[e];
            const double h_fast = config.h_slow / static_cast<double>(fast_substep_count(
                                      eps, config.fast_substeps));
            NoiseBundle noise(config.seed, static_cast<std::uint64_t>(i), sys.dims, config.h_slow,
                              h_fast, /*w2_substream=*/static_cast<std::uint32_t>(e + 1));
            CoupledOptions opt;
            opt.T = config.T;
            opt.slow = {SchemeKind::TamedEM, config.h_slow};
            opt.fast = {SchemeKind::TamedEM, h_fast};
            const PathPair pair = simulate_coupled(sys, eps, x0, y0, opt, noise);
            if (pair.exploded || xbar.exploded) {
                errors[e][static_cast<std::size_t>(i)] = nan;
                continue;
            }
            const Eigen::Index rows = std::min(pair.x.rows(), xbar.x.rows());
            double sup = 0.0;
            for (Eigen::Index k = 0; k < rows; ++k)
                sup = std::max(sup, (pair.x.row(k) - xbar.x.row(k)).norm());
            errors[e][static_cast<std::size_t>(i)] = std::pow(sup, config.p);
        }
    });

    ConvergenceReport rep;
    rep.model_tag = sys.tag;
    rep.fingerprint = model_fingerprint(sys);
    rep.T = config.T;
    rep.p = config.p;
    rep.h_slow = config.h_slow;
    rep.n_paths = n_paths;
    rep.seed = config.seed;
    rep.gamma_tilde = ExperimentConfig::gamma_tilde(sys.params);
    rep.reference_slope = config.p * (1.0 - rep.gamma_tilde) / 2.0;

    for (std::size_t e = 0; e < n_eps; ++e) {
        RunningStats st;
        long explosions = 0;
        for (long i = 0; i < n_paths; ++i) { // fixed-order reduction
            const double v = errors[e][static_cast<std::size_t>(i)];
            if (std::isnan(v))
                ++explosions;
            else
                st.add(v);
        }
        LevelResult lv;
        lv.eps = config.eps[e];
        lv.explosions = explosions;
        lv.n_paths = st.count();
        lv.failed = explosions * 20 > n_paths; // 5% budget
        lv.mean_error = st.count() ? st.mean() : 0.0;
        lv.stderr_ = st.count() ? st.stderr_mean() : 0.0;
        rep.levels.push_back(lv);
    }

    std::vector<LevelResult> usable;
    for (const LevelResult& lv : rep.levels)
        if (!lv.failed && lv.mean_error > 0 && lv.n_paths >= 2) usable.push_back(lv);
    if (usable.size() >= 3) {
        rep.rate = fit_rate(usable);
        rep.rate_fitted = true;
    }
    return rep;
}

std::vector<KhasminskiiRow> run_khasminskii_diagnostics(const CoefficientSystem& sys,
                                                        const ExperimentConfig& config, double eps,
                                                        const std::vector<double>& delta_list) {
    config.validate(sys);
    if (delta_list.empty()) throw Error("khasminskii diagnostics: empty delta list");
    const Vec x0 = config.initial_x(sys);
    const Vec y0 = config.initial_y(sys);
    const long n_paths = config.n_paths;
    const double h_fast =
        config.h_slow / static_cast<double>(fast_substep_count(eps, config.fast_substeps));

    const std::size_t n_delta = delta_list.size();
    std::vector<std::vector<double>> x_gaps(n_delta,
                                            std::vector<double>(static_cast<std::size_t>(n_paths)));
    std::vector<std::vector<double>> y_gaps = x_gaps;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    parallel_for(n_paths, config.workers, [&](long i) {
        for (std::size_t d = 0; d < n_delta; ++d) {
            // one bundle per (path, delta) with identical keys: every delta
            // sees the same increments (common random numbers)
            NoiseBundle noise(config.seed, static_cast<std::uint64_t>(i), sys.dims, config.h_slow,
                              h_fast);
            CoupledOptions opt;
            opt.T = config.T;
            opt.slow = {SchemeKind::TamedEM, config.h_slow};
            opt.fast = {SchemeKind::TamedEM, h_fast};
            const AuxPaths aux = simulate_khasminskii(sys, eps, x0, y0, delta_list[d], opt, noise);
            if (aux.exploded) {
                x_gaps[d][static_cast<std::size_t>(i)] = nan;
                y_gaps[d][static_cast<std::size_t>(i)] = nan;
                continue;
            }
            double sup_x = 0.0, mean_y = 0.0;
            const Eigen::Index rows = aux.x.rows();
            for (Eigen::Index k = 0; k < rows; ++k) {
                sup_x = std::max(sup_x, (aux.x.row(k) - aux.xhat.row(k)).squaredNorm());
                mean_y += (aux.y.row(k) - aux.yhat.row(k)).squaredNorm();
            }
            x_gaps[d][static_cast<std::size_t>(i)] = sup_x;
            y_gaps[d][static_cast<std::size_t>(i)] = mean_y / static_cast<double>(rows);
        }
    });

    std::vector<KhasminskiiRow> rows;
    for (std::size_t d = 0; d < n_delta; ++d) {
        RunningStats sx, sy;
        long explosions = 0;
        for (long i = 0; i < n_paths; ++i) {
            const double vx = x_gaps[d][static_cast<std::size_t>(i)];
            if (std::isnan(vx)) {
                ++explosions;
                continue;
            }
            sx.add(vx);
            sy.add(y_gaps[d][static_cast<std::size_t>(i)]);
        }
        KhasminskiiRow row;
        row.delta = delta_list[d];
        row.n_paths = sx.count();
        row.explosions = explosions;
        row.x_gap = sx.count() ? sx.mean() : 0.0;
        row.x_gap_stderr = sx.count() ? sx.stderr_mean() : 0.0;
        row.y_gap = sy.count() ? sy.mean() : 0.0;
        row.y_gap_stderr = sy.count() ? sy.stderr_mean() : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::vector<RescaleRow> run_rescaling_equivalence(const CoefficientSystem& sys, double t0,
                                                  const Vec& x0, const Vec& y0, double eps,
                                                  double S, int n_grid, long n_paths, double h_s,
                                                  std::uint64_t seed) {
    if (!(eps > 0)) throw Error("rescaling equivalence: eps must be positive");
    if (!(S > 0) || !(h_s > 0)) throw Error("rescaling equivalence: S and h_s must be positive");
    if (n_grid < 1 || n_paths < 2) throw Error("rescaling equivalence: need n_grid >= 1, n_paths >= 2");
    const std::uint64_t n_steps = detail::exact_ratio(S, h_s, "rescaling equivalence: S / h_s");
    if (n_steps % static_cast<std::uint64_t>(n_grid) != 0)
        throw GridMismatch("rescaling equivalence: grid must subdivide the step count");
    const std::uint64_t stride = n_steps / static_cast<std::uint64_t>(n_grid);

    const FrozenSystem fr = frozen_coefficients(sys, t0, x0);
    const int m = fr.m;
    const double h_t = eps * h_s; // t-clock step behind one fast-clock step

    // per path and grid point: block-leg value, frozen-leg value
    const std::size_t n_cells = static_cast<std::size_t>(n_grid) * static_cast<std::size_t>(n_paths);
    std::vector<double> block_v(n_cells), frozen_v(n_cells);
    std::vector<char> ok(static_cast<std::size_t>(n_paths), 1);

    for (long i = 0; i < n_paths; ++i) {
        NoiseBundle noise(seed, static_cast<std::uint64_t>(i), sys.dims, h_t, h_t);
        // block leg: t-clock dynamics with the 1/eps scalings, read at s = t/eps
        Vec y = y0, fv(m), dw(fr.d2), incr(m);
        Mat gv(m, fr.d2);
        bool alive = true;
        for (std::uint64_t k = 0; k < n_steps; ++k) {
            if (alive) {
                fr.drift(y, fv);
                fr.diffusion(y, gv);
                fv /= eps;
                drift_increment(SchemeKind::TamedEM, h_t, fv, incr);
                noise.w2_increment(k, dw);
                y += incr + (gv * dw) / std::sqrt(eps);
                if (!y.allFinite()) alive = false;
            }
            if ((k + 1) % stride == 0) {
                const std::size_t j = static_cast<std::size_t>((k + 1) / stride) - 1;
                block_v[j * static_cast<std::size_t>(n_paths) + static_cast<std::size_t>(i)] =
                    alive ? y[0] : 0.0;
            }
        }
        // frozen leg: fast-clock dynamics, independent noise stream
        const FrozenPath fp = simulate_frozen(fr, y0, S, {SchemeKind::TamedEM, h_s}, noise);
        if (!alive || fp.exploded) {
            ok[static_cast<std::size_t>(i)] = 0;
            continue;
        }
        for (int j = 0; j < n_grid; ++j) {
            const std::uint64_t k = stride * static_cast<std::uint64_t>(j + 1);
            frozen_v[static_cast<std::size_t>(j) * static_cast<std::size_t>(n_paths) +
                     static_cast<std::size_t>(i)] = fp.y(static_cast<Eigen::Index>(k), 0);
        }
    }

    std::vector<RescaleRow> rows;
    for (int j = 0; j < n_grid; ++j) {
        RunningStats bm, bm2, fm, fm2;
        for (long i = 0; i < n_paths; ++i) {
            if (!ok[static_cast<std::size_t>(i)]) continue;
            const std::size_t cell =
                static_cast<std::size_t>(j) * static_cast<std::size_t>(n_paths) +
                static_cast<std::size_t>(i);
            bm.add(block_v[cell]);
            bm2.add(block_v[cell] * block_v[cell]);
            fm.add(frozen_v[cell]);
            fm2.add(frozen_v[cell] * frozen_v[cell]);
        }
        if (bm.count() < 2) throw Explosion("rescaling equivalence: too few surviving paths");
        RescaleRow row;
        row.s = static_cast<double>(stride * static_cast<std::uint64_t>(j + 1)) * h_s;
        row.block_mean = bm.mean();
        row.block_mean_se = bm.stderr_mean();
        row.block_m2 = bm2.mean();
        row.block_m2_se = bm2.stderr_mean();
        row.frozen_mean = fm.mean();
        row.frozen_mean_se = fm.stderr_mean();
        row.frozen_m2 = fm2.mean();
        row.frozen_m2_se = fm2.stderr_mean();
        rows.push_back(row);
    }
    return rows;
}

RateFit fit_rate(const std::vector<LevelResult>& levels) {
    if (levels.size() < 3)
        throw DegenerateFit("rate fit needs at least 3 levels, got " +
                            std::to_string(levels.size()));
    std::vector<double> lx, ly, w;
    for (const LevelResult& lv : levels) {
        if (!(lv.mean_error > 0))
            throw DegenerateFit("rate fit: non-positive mean error at eps = " + g17(lv.eps));
        const double se_log = std::max(lv.stderr_ / lv.mean_error, 1e-12); // delta method
        lx.push_back(std::log(lv.eps));
        ly.push_back(std::log(lv.mean_error));
        w.push_back(1.0 / (se_log * se_log));
    }
    const LineFit fit = fit_weighted_line(lx, ly, w);
    RateFit out;
    out.slope = fit.slope;
    out.slope_stderr = fit.slope_stderr;
    out.intercept = fit.intercept;
    return out;
}

std::string report_json(const ConvergenceReport& report) {
    std::string s = "{\n";
    s += "  \"schema\": \"slowfast-convergence/v1\",\n";
    s += "  \"model\": \"" + report.model_tag + "\",\n";
    s += "  \"fingerprint\": \"" + report.fingerprint + "\",\n";
    s += "  \"T\": " + g17(report.T) + ",\n";
    s += "  \"p\": " + g17(report.p) + ",\n";
    s += "  \"h_slow\": " + g17(report.h_slow) + ",\n";
    s += "  \"n_paths\": " + std::to_string(report.n_paths) + ",\n";
    s += "  \"seed\": " + std::to_string(report.seed) + ",\n";
    s += "  \"gamma_tilde\": " + g17(report.gamma_tilde) + ",\n";
    s += "  \"reference_slope\": " + g17(report.reference_slope) + ",\n";
    s += "  \"levels\": [\n";
    for (std::size_t e = 0; e < report.levels.size(); ++e) {
        const LevelResult& lv = report.levels[e];
        s += "    {\"eps\": " + g17(lv.eps) + ", \"mean_error\": " + g17(lv.mean_error) +
             ", \"stderr\": " + g17(lv.stderr_) + ", \"n_paths\": " + std::to_string(lv.n_paths) +
             ", \"explosions\": " + std::to_string(lv.explosions) +
             ", \"failed\": " + (lv.failed ? "true" : "false") + "}";
        s += e + 1 < report.levels.size() ? ",\n" : "\n";
    }
    s += "  ],\n";
    s += "  \"rate_fitted\": " + std::string(report.rate_fitted ? "true" : "false") + ",\n";
    s += "  \"slope\": " + g17(report.rate.slope) + ",\n";
    s += "  \"slope_stderr\": " + g17(report.rate.slope_stderr) + ",\n";
    s += "  \"intercept\": " + g17(report.rate.intercept) + "\n";
    s += "}\n";
    return s;
}

std::string errors_csv(const ConvergenceReport& report) {
    std::string s = "eps, mean_error, stderr, n_paths, explosions\n";
    for (const LevelResult& lv : report.levels)
        s += g17(lv.eps) + ", " + g17(lv.mean_error) + ", " + g17(lv.stderr_) + ", " +
             std::to_string(lv.n_paths) + ", " + std::to_string(lv.explosions) + "\n";
    return s;
}

void write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw Error("cannot write '" + tmp + "'");
        if (std::fwrite(content.data(), 1, content.size(), f) != content.size()) {
            std::fclose(f);
            throw Error("short write to '" + tmp + "'");
        }
        std::fclose(f);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("cannot rename '" + tmp + "' to '" + path + "'");
}

int convergence_exit_code(const ConvergenceReport& report) {
    for (const LevelResult& lv : report.levels)
        if (lv.failed) return 4;
    std::vector<const LevelResult*> usable;
    for (const LevelResult& lv : report.levels)
        if (lv.n_paths >= 2) usable.push_back(&lv);
    if (usable.size() < 2) return 3;
    for (std::size_t e = 1; e < usable.size(); ++e)
        if (!(usable[e]->mean_error < usable[e - 1]->mean_error)) return 3;
    const LevelResult& first = *usable.front();
    const LevelResult& last = *usable.back();
    const double pooled = std::sqrt(first.stderr_ * first.stderr_ + last.stderr_ * last.stderr_);
    if (!(first.mean_error - last.mean_error >= 4.0 * pooled)) return 3;
    if (report.rate_fitted && !(report.rate.slope - 2.0 * report.rate.slope_stderr > 0)) return 3;
    return 0;
}

} // namespace slowfast
