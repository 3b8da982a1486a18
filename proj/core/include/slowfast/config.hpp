#pragma once

#include "slowfast/frozen.hpp"
#include "slowfast/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace slowfast {

/// Flat key-value configuration text with [section] headers:
///
///   # comment (';' also starts one)
///   [run]
///   eps = 0.1, 0.01, 0.001
///
/// Keys are stored as "section.key". Values are raw strings; the typed
/// getters validate on access. Unknown keys are the caller's concern
/// (ExperimentConfig rejects them so typos fail loudly).
struct ConfigFile {
    std::map<std::string, std::string> values;

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list of doubles.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
};

/// Which source the averaged equation draws its drift from.
struct ProviderSpec {
    std::string kind = "analytic"; ///< "analytic" | "table" | "on-demand"
    std::string table_path;        ///< table file ("table" kind)
    EstimateOpts estimate;         ///< estimation options ("on-demand"; also avg-table build)
    double t_quantum = 0.015625;   ///< on-demand quantization, 2^-6
    double x_quantum = 0.015625;
};

/// Full description of one convergence experiment. A report produced from an
/// ExperimentConfig is a pure function of it (master seed included).
struct ExperimentConfig {
    // model
    std::string model_tag = "model2";
    double lambda1 = 0.0; ///< feedback strength (model2 only)

    // run
    double T = 1.0;
    double p = 2.0;                 ///< error exponent
    std::vector<double> eps{0.1, 0.01, 0.001}; ///< strictly decreasing
    double h_slow = 1e-3;
    long fast_substeps = 10;        ///< h_fast = eps * h_slow / fast_substeps
    std::vector<double> delta;      ///< block sizes; empty = eps^gamma_tilde rule
    long n_paths = 200;
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<double> x0{1.0};    ///< broadcast to dims.n when 1 value given
    std::vector<double> y0{1.0};    ///< broadcast to dims.m

    // bbar provider
    ProviderSpec provider;

    // output
    std::string output_dir = ".";
    bool dump_paths = false;

    /// The built coefficient system this config names.
    CoefficientSystem build_system() const;

    /// Initial conditions broadcast to the system's dimensions.
    Vec initial_x(const CoefficientSystem& sys) const;
    Vec initial_y(const CoefficientSystem& sys) const;

    /// Block-size exponent gamma_tilde = 1 / (1 + min{2 gamma1, gamma2, 1/2}).
    static double gamma_tilde(const HypothesisParams& params);

    /// delta for one eps: the declared list entry, or round(eps^gamma_tilde
    /// to a positive multiple of h_slow) under the default rule.
    double delta_for(double eps, std::size_t eps_index, const HypothesisParams& params) const;

    /// Throws Error unless every invariant holds: positive T/h_slow/p,
    /// eps strictly decreasing inside (0, eps0), n_paths >= 2, p below the
    /// admissible bound 2k/theta4 when lambda1 > 0 and an order k is declared.
    void validate(const CoefficientSystem& sys) const;
};

/// Builds an ExperimentConfig from parsed text, rejecting unknown keys.
ExperimentConfig experiment_config_from(const ConfigFile& cfg);

} // namespace slowfast
