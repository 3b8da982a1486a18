// slowfast command-line driver: simulation, averaged-drift estimation,
// structural checks, and the convergence/diagnostic experiments.
//
// Exit codes: 0 success, 2 validation failure, 3 statistical acceptance
// failure, 4 explosion budget exceeded.

#include "CLI11.hpp"

#include "slowfast/averaging.hpp"
#include "slowfast/config.hpp"
#include "slowfast/harness.hpp"
#include "slowfast/hypotheses.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace slowfast;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
        } else {
            out += c;
        }
    }
    return out;
}

std::string json_vec(const Vec& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += g17(v[i]);
        if (i + 1 < v.size()) s += ", ";
    }
    return s + "]";
}

Vec to_vec(const std::vector<double>& v, int dim, const char* what) {
    Vec out(dim);
    if (v.size() == 1) {
        out.setConstant(v[0]);
    } else if (static_cast<int>(v.size()) == dim) {
        for (int d = 0; d < dim; ++d) out[d] = v[static_cast<std::size_t>(d)];
    } else {
        throw Error(std::string(what) + ": expected 1 or " + std::to_string(dim) + " components");
    }
    return out;
}

/// Columns `t, x[0..n), y[0..m), w1[0..d1)` at 17 significant digits.
std::string path_csv(const std::vector<double>& t, const Mat& x, const Mat& y, const Mat& w1) {
    std::string s = "t";
    for (Eigen::Index d = 0; d < x.cols(); ++d) s += ", x[" + std::to_string(d) + "]";
    for (Eigen::Index d = 0; d < y.cols(); ++d) s += ", y[" + std::to_string(d) + "]";
    for (Eigen::Index d = 0; d < w1.cols(); ++d) s += ", w1[" + std::to_string(d) + "]";
    s += "\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        const Eigen::Index row = static_cast<Eigen::Index>(k);
        s += g17(t[k]);
        for (Eigen::Index d = 0; d < x.cols(); ++d) s += ", " + g17(x(row, d));
        for (Eigen::Index d = 0; d < y.cols(); ++d) s += ", " + g17(y(row, d));
        for (Eigen::Index d = 0; d < w1.cols(); ++d) s += ", " + g17(w1(row, d));
        s += "\n";
    }
    return s;
}

std::string check_report_json(const CheckReport& rep) {
    std::string s = "{\"condition\": \"" + json_escape(rep.condition) + "\"";
    s += ", \"n_samples\": " + std::to_string(rep.n_samples);
    s += ", \"pass\": " + std::string(rep.pass ? "true" : "false");
    s += ", \"worst_margin\": " + g17(rep.worst_margin);
    s += ", \"witness\": \"" + json_escape(rep.witness) + "\"";
    s += ", \"empirical_best\": " + g17(rep.empirical_best);
    s += ", \"fitted\": {";
    bool first = true;
    for (const auto& kv : rep.fitted) {
        if (!first) s += ", ";
        first = false;
        s += "\"" + json_escape(kv.first) + "\": " + g17(kv.second);
    }
    s += "}, \"note\": \"" + json_escape(rep.note) + "\"}";
    return s;
}

/// Pre-scan for --config so config values become flag defaults; the flags
/// CLI11 actually sees then override their keys.
std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return "";
}

struct ModelFlags {
    std::string tag = "model2";
    double lambda1 = 0.0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
    cmd->add_option("--model", mf.tag, "built-in model tag: model1 | model2 | model3");
    cmd->add_option("--lambda1", mf.lambda1, "fast-into-slow feedback strength (model2 only)");
}

int cmd_simulate(const ExperimentConfig& base) {
    const CoefficientSystem sys = make_builtin(base.model_tag, base.lambda1);
    if (base.eps.empty()) throw Error("simulate: need one eps value");
    const double eps = base.eps.front();
    if (!(eps > 0) || eps > sys.params.epsilon0()) throw EpsilonOutOfRange(eps, sys.params.epsilon0());
    const long substeps = std::max(1L, std::lround(static_cast<double>(base.fast_substeps) / eps));
    const double h_fast = base.h_slow / static_cast<double>(substeps);
    NoiseBundle noise(base.seed, 0, sys.dims, base.h_slow, h_fast);
    CoupledOptions opt;
    opt.T = base.T;
    opt.slow = {SchemeKind::TamedEM, base.h_slow};
    opt.fast = {SchemeKind::TamedEM, h_fast};
    const PathPair path =
        simulate_coupled(sys, eps, base.initial_x(sys), base.initial_y(sys), opt, noise);
    std::cout << path_csv(path.t, path.x, path.y, path.w1);
    if (path.exploded) {
        std::cerr << "path exploded at step " << path.explosion_step << "\n";
        return 4;
    }
    return 0;
}

int main_guarded(int argc, char** argv) {
    ExperimentConfig base;
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) base = experiment_config_from(ConfigFile::parse_file(config_path));

    CLI::App app{"slow-fast system simulator and averaging experiment driver"};
    app.require_subcommand(1);
    std::string config_echo; // consumed by the pre-scan; registered so CLI11 accepts it
    app.add_option("--config", config_echo, "configuration file (flags override its keys)");

    // ---- simulate ----------------------------------------------------
    CLI::App* sim = app.add_subcommand("simulate", "one coupled path as CSV on stdout");
    sim->add_option("--model", base.model_tag);
    sim->add_option("--lambda1", base.lambda1);
    sim->add_option("--eps", base.eps, "timescale ratio (first value used)")->delimiter(',');
    sim->add_option("--T", base.T);
    sim->add_option("--h-slow", base.h_slow);
    sim->add_option("--fast-substeps", base.fast_substeps);
    sim->add_option("--x0", base.x0)->delimiter(',');
    sim->add_option("--y0", base.y0)->delimiter(',');
    sim->add_option("--seed", base.seed);

    // ---- freeze -------------------------------------------------------
    CLI::App* frz = app.add_subcommand("freeze", "averaged drift at one (t, x) as JSON");
    ModelFlags frz_mf;
    add_model_flags(frz, frz_mf);
    double frz_t = 0.0;
    std::vector<double> frz_x{0.0}, frz_w1;
    EstimateOpts frz_opts;
    frz->add_option("--t", frz_t, "time argument")->required();
    frz->add_option("--x", frz_x, "slow state (comma separated)")->required()->delimiter(',');
    frz->add_option("--w1", frz_w1, "driving noise value for w1-reading systems")->delimiter(',');
    frz->add_option("--burn-in", frz_opts.burn_in, "burn-in time (-1 = automatic)");
    frz->add_option("--sample-time", frz_opts.sample_time);
    frz->add_option("--chains", frz_opts.n_chains);
    frz->add_option("--step", frz_opts.scheme.h, "integrator step of the frozen chains");
    frz->add_option("--seed", frz_opts.seed);
    frz->add_flag("--no-variance-reduction", [&](std::int64_t) { frz_opts.variance_reduction = false; },
                  "disable control variates");

    // ---- avg-table ----------------------------------------------------
    CLI::App* tbl = app.add_subcommand("avg-table", "build or inspect an averaged-drift table");
    tbl->require_subcommand(1);
    CLI::App* tbl_build = tbl->add_subcommand("build", "estimate all grid nodes and save");
    ModelFlags tbl_mf;
    add_model_flags(tbl_build, tbl_mf);
    double tbl_T = 1.0;
    std::vector<double> tbl_lo{-2.0}, tbl_hi{2.0};
    int tbl_nt = 2;
    std::vector<int> tbl_nx{9};
    EstimateOpts tbl_opts;
    std::string tbl_out = "bbar_table.csv";
    tbl_build->add_option("--T", tbl_T);
    tbl_build->add_option("--x-lo", tbl_lo)->delimiter(',');
    tbl_build->add_option("--x-hi", tbl_hi)->delimiter(',');
    tbl_build->add_option("--nt", tbl_nt);
    tbl_build->add_option("--nx", tbl_nx)->delimiter(',');
    tbl_build->add_option("--burn-in", tbl_opts.burn_in);
    tbl_build->add_option("--sample-time", tbl_opts.sample_time);
    tbl_build->add_option("--chains", tbl_opts.n_chains);
    tbl_build->add_option("--step", tbl_opts.scheme.h, "integrator step of the frozen chains");
    tbl_build->add_option("--seed", tbl_opts.seed);
    tbl_build->add_option("--out", tbl_out, "output path")->required();
    CLI::App* tbl_inspect = tbl->add_subcommand("inspect", "print a saved table");
    std::string tbl_in;
    tbl_inspect->add_option("--in", tbl_in, "table path")->required();

    // ---- check ----------------------------------------------------------
    CLI::App* chk = app.add_subcommand("check", "structural inequality check, JSON on stdout");
    ModelFlags chk_mf;
    add_model_flags(chk, chk_mf);
    std::string chk_condition = "monotonicity";
    SampleSpec chk_spec;
    double chk_radius = 5.0;
    chk->add_option("--condition", chk_condition,
                    "monotonicity | coercivity:<k> | slow-growth | slow-regularity");
    chk->add_option("--t-max", chk_spec.t_max);
    chk->add_option("--x-radius", chk_spec.x_radius);
    chk->add_option("--y-radius", chk_spec.y_radius);
    chk->add_option("--samples", chk_spec.n_samples);
    chk->add_option("--seed", chk_spec.seed);
    chk->add_option("--tail-factor", chk_spec.tail_factor);
    chk->add_option("--radius", chk_radius, "ball radius of the local regularity check");

    // ---- converge -------------------------------------------------------
    CLI::App* cnv = app.add_subcommand("converge", "strong convergence experiment");
    cnv->add_option("--model", base.model_tag);
    cnv->add_option("--lambda1", base.lambda1);
    cnv->add_option("--T", base.T);
    cnv->add_option("--p", base.p);
    cnv->add_option("--eps", base.eps)->delimiter(',');
    cnv->add_option("--h-slow", base.h_slow);
    cnv->add_option("--fast-substeps", base.fast_substeps);
    cnv->add_option("--n-paths", base.n_paths);
    cnv->add_option("--seed", base.seed);
    cnv->add_option("--workers", base.workers);
    cnv->add_option("--x0", base.x0)->delimiter(',');
    cnv->add_option("--y0", base.y0)->delimiter(',');
    cnv->add_option("--provider", base.provider.kind, "analytic | table | on-demand");
    cnv->add_option("--table", base.provider.table_path);
    cnv->add_option("--out-dir", base.output_dir);
    cnv->add_flag("--dump-paths", base.dump_paths, "also write the first path per level");

    // ---- khasminskii -----------------------------------------------------
    CLI::App* khx = app.add_subcommand("khasminskii", "block-freezing gap diagnostics");
    khx->add_option("--model", base.model_tag);
    khx->add_option("--lambda1", base.lambda1);
    khx->add_option("--T", base.T);
    khx->add_option("--h-slow", base.h_slow);
    khx->add_option("--fast-substeps", base.fast_substeps);
    khx->add_option("--n-paths", base.n_paths);
    khx->add_option("--seed", base.seed);
    khx->add_option("--workers", base.workers);
    khx->add_option("--x0", base.x0)->delimiter(',');
    khx->add_option("--y0", base.y0)->delimiter(',');
    double khx_eps = 1e-3;
    std::vector<double> khx_delta;
    khx->add_option("--eps", khx_eps, "timescale ratio")->required();
    khx->add_option("--delta", khx_delta, "block sizes (default: the eps^gamma_tilde rule)")
        ->delimiter(',');

    // ---- rescale-test ----------------------------------------------------
    CLI::App* rsc = app.add_subcommand("rescale-test", "block-rescaling distribution equality");
    ModelFlags rsc_mf;
    add_model_flags(rsc, rsc_mf);
    double rsc_t0 = 1.0, rsc_eps = 1e-2, rsc_S = 1.0, rsc_h = 1e-3;
    std::vector<double> rsc_x0{1.0}, rsc_y0{2.0};
    int rsc_grid = 10;
    long rsc_paths = 2000;
    std::uint64_t rsc_seed = 0;
    rsc->add_option("--t0", rsc_t0);
    rsc->add_option("--x0", rsc_x0)->delimiter(',');
    rsc->add_option("--y0", rsc_y0)->delimiter(',');
    rsc->add_option("--eps", rsc_eps);
    rsc->add_option("--S", rsc_S, "fast-clock horizon");
    rsc->add_option("--grid", rsc_grid, "matched grid points");
    rsc->add_option("--paths", rsc_paths);
    rsc->add_option("--step", rsc_h, "fast-clock step");
    rsc->add_option("--seed", rsc_seed);

    // --config may appear after the subcommand name; let it reach the parent.
    for (CLI::App* sc : {sim, frz, tbl, tbl_build, tbl_inspect, chk, cnv, khx, rsc})
        sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return cmd_simulate(base);

    if (frz->parsed()) {
        const CoefficientSystem sys = make_builtin(frz_mf.tag, frz_mf.lambda1);
        const Vec x = to_vec(frz_x, sys.dims.n, "--x");
        const Vec w1 = frz_w1.empty() ? Vec(Vec::Zero(sys.dims.d1))
                                      : to_vec(frz_w1, sys.dims.d1, "--w1");
        const FrozenEstimate est =
            estimate_bbar(sys, frz_t, x, Vec(Vec::Zero(sys.dims.m)), frz_opts, w1);
        std::cout << "{\"t\": " << g17(est.t) << ", \"x\": " << json_vec(est.x)
                  << ", \"bbar\": " << json_vec(est.bbar) << ", \"stderr\": " << json_vec(est.stderr_)
                  << ", \"chains\": " << est.n_chains << ", \"burn_in\": " << g17(est.burn_in)
                  << ", \"sample_time\": " << g17(est.sample_time) << ", \"model_fingerprint\": \""
                  << model_fingerprint(sys) << "\"}\n";
        return 0;
    }

    if (tbl->parsed()) {
        if (tbl_build->parsed()) {
            const CoefficientSystem sys = make_builtin(tbl_mf.tag, tbl_mf.lambda1);
            const Vec lo = to_vec(tbl_lo, sys.dims.n, "--x-lo");
            const Vec hi = to_vec(tbl_hi, sys.dims.n, "--x-hi");
            TableGridSpec spec;
            spec.nt = tbl_nt;
            spec.nx = tbl_nx.size() == 1 && sys.dims.n > 1
                          ? std::vector<int>(static_cast<std::size_t>(sys.dims.n), tbl_nx[0])
                          : tbl_nx;
            const AveragedDriftTable table = build_table(sys, lo, hi, tbl_T, spec, tbl_opts);
            table.save(tbl_out);
            std::cout << "saved " << table.num_nodes() << " nodes to " << tbl_out
                      << " (fingerprint " << table.fingerprint << ")\n";
            return 0;
        }
        const AveragedDriftTable table = AveragedDriftTable::load(tbl_in);
        std::cout << "fingerprint: " << table.fingerprint << "\nT: " << g17(table.T)
                  << "\nnt: " << table.nt << "\nstate dims: " << table.n << "\n";
        for (int d = 0; d < table.n; ++d)
            std::cout << "axis " << d << ": " << table.nx[static_cast<std::size_t>(d)]
                      << " nodes on [" << g17(table.x_lo[d]) << ", " << g17(table.x_hi[d]) << "]\n";
        std::cout << "nodes: " << table.num_nodes() << "\n";
        Vec xc(table.n);
        double tc = 0;
        for (std::size_t node = 0; node < table.num_nodes(); ++node) {
            table.node_coords(node, tc, xc);
            std::cout << node << ": t=" << g17(tc);
            for (int d = 0; d < table.n; ++d) std::cout << " x[" << d << "]=" << g17(xc[d]);
            for (int d = 0; d < table.n; ++d)
                std::cout << " v[" << d << "]=" << g17(table.values(static_cast<Eigen::Index>(node), d))
                          << " se[" << d << "]=" << g17(table.stderr_(static_cast<Eigen::Index>(node), d));
            std::cout << "\n";
        }
        return 0;
    }

    if (chk->parsed()) {
        const CoefficientSystem sys = make_builtin(chk_mf.tag, chk_mf.lambda1);
        CheckReport rep;
        if (chk_condition == "monotonicity") {
            rep = check_monotonicity(sys, chk_spec);
        } else if (chk_condition.rfind("coercivity:", 0) == 0) {
            rep = check_coercivity(sys, std::stoi(chk_condition.substr(11)), chk_spec);
        } else if (chk_condition == "slow-growth") {
            rep = check_slow_growth(sys, chk_spec);
        } else if (chk_condition == "slow-regularity") {
            rep = check_slow_regularity(sys, chk_radius, chk_spec);
        } else {
            throw Error("unknown condition '" + chk_condition +
                        "' (monotonicity | coercivity:<k> | slow-growth | slow-regularity)");
        }
        std::cout << check_report_json(rep) << "\n";
        return rep.pass ? 0 : 3;
    }

    if (cnv->parsed()) {
        const CoefficientSystem sys = make_builtin(base.model_tag, base.lambda1);
        const BbarProvider provider = make_provider(sys, base);
        const ConvergenceReport report = run_convergence(sys, provider, base);
        std::filesystem::create_directories(base.output_dir);
        write_file(base.output_dir + "/report.json", report_json(report));
        write_file(base.output_dir + "/errors.csv", errors_csv(report));
        if (base.dump_paths) {
            for (std::size_t e = 0; e < base.eps.size(); ++e) {
                const double eps = base.eps[e];
                const long substeps =
                    std::max(1L, std::lround(static_cast<double>(base.fast_substeps) / eps));
                const double h_fast = base.h_slow / static_cast<double>(substeps);
                NoiseBundle noise(base.seed, 0, sys.dims, base.h_slow, h_fast,
                                  static_cast<std::uint32_t>(e + 1));
                CoupledOptions opt;
                opt.T = base.T;
                opt.slow = {SchemeKind::TamedEM, base.h_slow};
                opt.fast = {SchemeKind::TamedEM, h_fast};
                const PathPair path =
                    simulate_coupled(sys, eps, base.initial_x(sys), base.initial_y(sys), opt, noise);
                write_file(base.output_dir + "/path0_level" + std::to_string(e) + ".csv",
                           path_csv(path.t, path.x, path.y, path.w1));
            }
        }
        std::cout << report_json(report);
        return convergence_exit_code(report);
    }

    if (khx->parsed()) {
        const CoefficientSystem sys = make_builtin(base.model_tag, base.lambda1);
        std::vector<double> deltas = khx_delta;
        if (deltas.empty()) deltas.push_back(base.delta_for(khx_eps, 0, sys.params));
        const std::vector<KhasminskiiRow> rows =
            run_khasminskii_diagnostics(sys, base, khx_eps, deltas);
        std::cout << "delta, x_gap, x_gap_stderr, y_gap, y_gap_stderr, n_paths, explosions\n";
        bool budget_blown = false;
        for (const KhasminskiiRow& r : rows) {
            std::cout << g17(r.delta) << ", " << g17(r.x_gap) << ", " << g17(r.x_gap_stderr) << ", "
                      << g17(r.y_gap) << ", " << g17(r.y_gap_stderr) << ", " << r.n_paths << ", "
                      << r.explosions << "\n";
            if (r.explosions * 20 > base.n_paths) budget_blown = true;
        }
        return budget_blown ? 4 : 0;
    }

    if (rsc->parsed()) {
        const CoefficientSystem sys = make_builtin(rsc_mf.tag, rsc_mf.lambda1);
        const Vec x0 = to_vec(rsc_x0, sys.dims.n, "--x0");
        const Vec y0 = to_vec(rsc_y0, sys.dims.m, "--y0");
        const std::vector<RescaleRow> rows = run_rescaling_equivalence(
            sys, rsc_t0, x0, y0, rsc_eps, rsc_S, rsc_grid, rsc_paths, rsc_h, rsc_seed);
        std::cout << "s, block_mean, block_mean_se, frozen_mean, frozen_mean_se, block_m2, "
                     "block_m2_se, frozen_m2, frozen_m2_se, agree\n";
        bool all_agree = true;
        for (const RescaleRow& r : rows) {
            const double se_mean = std::sqrt(r.block_mean_se * r.block_mean_se +
                                             r.frozen_mean_se * r.frozen_mean_se);
            const double se_m2 =
                std::sqrt(r.block_m2_se * r.block_m2_se + r.frozen_m2_se * r.frozen_m2_se);
            const bool agree = std::abs(r.block_mean - r.frozen_mean) <= 4.0 * se_mean &&
                               std::abs(r.block_m2 - r.frozen_m2) <= 4.0 * se_m2;
            all_agree = all_agree && agree;
            std::cout << g17(r.s) << ", " << g17(r.block_mean) << ", " << g17(r.block_mean_se)
                      << ", " << g17(r.frozen_mean) << ", " << g17(r.frozen_mean_se) << ", "
                      << g17(r.block_m2) << ", " << g17(r.block_m2_se) << ", " << g17(r.frozen_m2)
                      << ", " << g17(r.frozen_m2_se) << ", " << (agree ? "yes" : "no") << "\n";
        }
        return all_agree ? 0 : 3;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return main_guarded(argc, argv);
    } catch (const EpsilonOutOfRange& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const Explosion& e) {
        std::cerr << "explosion: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
