#include "slowfast/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace slowfast {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error("config key '" + key + "': '" + raw + "' is not a number");
    return v;
}

long long parse_ll(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error("config key '" + key + "': '" + raw + "' is not an integer");
    return v;
}

} // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw Error(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                throw Error(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw Error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty())
            throw Error(origin + ":" + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.values[full] = trim(s.substr(eq + 1));
    }
    return cfg;
}

bool ConfigFile::has(const std::string& key) const { return values.count(key) != 0; }

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : parse_double(key, it->second);
}

long ConfigFile::get_long(const std::string& key, long fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : static_cast<long>(parse_ll(key, it->second));
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string s = trim(it->second);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error("config key '" + key + "': '" + it->second + "' is not an unsigned integer");
    return v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::string s = trim(it->second);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error("config key '" + key + "': '" + it->second + "' is not a boolean");
}

std::vector<double> ConfigFile::get_list(const std::string& key,
                                         const std::vector<double>& fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    std::vector<double> out;
    std::string item;
    std::istringstream in(it->second);
    while (std::getline(in, item, ',')) {
        const std::string s = trim(item);
        if (s.empty()) throw Error("config key '" + key + "': empty list entry");
        out.push_back(parse_double(key, s));
    }
    if (out.empty()) throw Error("config key '" + key + "': empty list");
    return out;
}

CoefficientSystem ExperimentConfig::build_system() const {
    return make_builtin(model_tag, lambda1);
}

namespace {
Vec broadcast(const std::vector<double>& v, int dim, const char* what) {
    Vec out(dim);
    if (v.size() == 1) {
        out.setConstant(v[0]);
    } else if (static_cast<int>(v.size()) == dim) {
        for (int d = 0; d < dim; ++d) out[d] = v[static_cast<std::size_t>(d)];
    } else {
        throw Error(std::string(what) + ": expected 1 or " + std::to_string(dim) + " values, got " +
                    std::to_string(v.size()));
    }
    return out;
}
} // namespace

Vec ExperimentConfig::initial_x(const CoefficientSystem& sys) const {
    return broadcast(x0, sys.dims.n, "x0");
}

Vec ExperimentConfig::initial_y(const CoefficientSystem& sys) const {
    return broadcast(y0, sys.dims.m, "y0");
}

double ExperimentConfig::gamma_tilde(const HypothesisParams& params) {
    const double g = std::min({2.0 * params.gamma1, params.gamma2, 0.5});
    return 1.0 / (1.0 + g);
}

double ExperimentConfig::delta_for(double eps, std::size_t eps_index,
                                   const HypothesisParams& params) const {
    if (!delta.empty()) {
        if (eps_index >= delta.size())
            throw Error("delta list shorter than eps list");
        return delta[eps_index];
    }
    const double raw = std::pow(eps, gamma_tilde(params));
    const long blocks = std::max(1L, std::lround(raw / h_slow));
    return static_cast<double>(blocks) * h_slow;
}

void ExperimentConfig::validate(const CoefficientSystem& sys) const {
    if (!(T > 0)) throw Error("config: T must be positive");
    if (!(h_slow > 0) || h_slow > T) throw Error("config: h_slow must lie in (0, T]");
    if (!(p > 0)) throw Error("config: p must be positive");
    if (fast_substeps < 1) throw Error("config: fast_substeps must be >= 1");
    if (n_paths < 2) throw Error("config: n_paths must be >= 2");
    if (workers < 1) throw Error("config: workers must be >= 1");
    if (eps.empty()) throw Error("config: eps list is empty");
    const double eps0 = sys.params.epsilon0();
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0) || !(eps[i] < eps0))
            throw EpsilonOutOfRange(eps[i], eps0);
        if (i > 0 && !(eps[i] < eps[i - 1]))
            throw Error("config: eps list must be strictly decreasing");
    }
    if (!delta.empty() && delta.size() != eps.size())
        throw Error("config: delta list must match the eps list length");
    for (double d : delta)
        if (!(d > 0)) throw Error("config: delta values must be positive");
    if (sys.params.lambda1 > 0) {
        // admissible error exponent: p < 2k / theta4 for a declared order k
        int k = 0;
        if (sys.params.k_max) k = *sys.params.k_max;
        for (const auto& kv : sys.params.beta_k) k = std::max(k, kv.first);
        if (k > 0 && !(p < 2.0 * k / sys.params.theta4))
            throw Error("config: p = " + std::to_string(p) + " exceeds the admissible bound 2k/theta4 = " +
                        std::to_string(2.0 * k / sys.params.theta4));
    }
    if (provider.kind != "analytic" && provider.kind != "table" && provider.kind != "on-demand")
        throw Error("config: provider must be analytic, table, or on-demand");
    if (provider.kind == "table" && provider.table_path.empty())
        throw Error("config: table provider needs bbar.table");
    if (!(provider.t_quantum > 0) || !(provider.x_quantum > 0))
        throw Error("config: quantization steps must be positive");
    broadcast(x0, sys.dims.n, "x0");
    broadcast(y0, sys.dims.m, "y0");
}

ExperimentConfig experiment_config_from(const ConfigFile& cfg) {
    static const std::set<std::string> known = {
        "model.tag",        "model.lambda1",     "run.T",          "run.p",
        "run.eps",          "run.h_slow",        "run.fast_substeps", "run.delta",
        "run.n_paths",      "run.seed",          "run.workers",    "run.x0",
        "run.y0",           "bbar.provider",     "bbar.table",     "bbar.burn_in",
        "bbar.sample_time", "bbar.chains",       "bbar.h",         "bbar.t_quantum",
        "bbar.x_quantum",   "bbar.variance_reduction",
        "output.directory", "output.dump_paths",
    };
    for (const auto& kv : cfg.values)
        if (!known.count(kv.first)) throw Error("config: unknown key '" + kv.first + "'");

    ExperimentConfig ec;
    ec.model_tag = cfg.get_string("model.tag", ec.model_tag);
    ec.lambda1 = cfg.get_double("model.lambda1", ec.lambda1);
    ec.T = cfg.get_double("run.T", ec.T);
    ec.p = cfg.get_double("run.p", ec.p);
    ec.eps = cfg.get_list("run.eps", ec.eps);
    ec.h_slow = cfg.get_double("run.h_slow", ec.h_slow);
    ec.fast_substeps = cfg.get_long("run.fast_substeps", ec.fast_substeps);
    ec.delta = cfg.get_list("run.delta", ec.delta);
    ec.n_paths = cfg.get_long("run.n_paths", ec.n_paths);
    ec.seed = cfg.get_u64("run.seed", ec.seed);
    ec.workers = static_cast<int>(cfg.get_long("run.workers", ec.workers));
    ec.x0 = cfg.get_list("run.x0", ec.x0);
    ec.y0 = cfg.get_list("run.y0", ec.y0);
    ec.provider.kind = cfg.get_string("bbar.provider", ec.provider.kind);
    ec.provider.table_path = cfg.get_string("bbar.table", ec.provider.table_path);
    ec.provider.estimate.burn_in = cfg.get_double("bbar.burn_in", ec.provider.estimate.burn_in);
    ec.provider.estimate.sample_time =
        cfg.get_double("bbar.sample_time", ec.provider.estimate.sample_time);
    ec.provider.estimate.n_chains =
        static_cast<int>(cfg.get_long("bbar.chains", ec.provider.estimate.n_chains));
    ec.provider.estimate.scheme.h = cfg.get_double("bbar.h", ec.provider.estimate.scheme.h);
    ec.provider.estimate.variance_reduction =
        cfg.get_bool("bbar.variance_reduction", ec.provider.estimate.variance_reduction);
    ec.provider.t_quantum = cfg.get_double("bbar.t_quantum", ec.provider.t_quantum);
    ec.provider.x_quantum = cfg.get_double("bbar.x_quantum", ec.provider.x_quantum);
    ec.output_dir = cfg.get_string("output.directory", ec.output_dir);
    ec.dump_paths = cfg.get_bool("output.dump_paths", ec.dump_paths);
    return ec;
}

} // namespace slowfast
