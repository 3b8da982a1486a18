#include "slowfast/averaging.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace slowfast {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// per-axis interpolation weights: node index i0 and fraction toward i0+1
struct AxisPos {
    int i0 = 0;
    double frac = 0;
};

AxisPos locate(double v, double lo, double hi, int count, double t_for_err, const Vec& x_for_err,
               const std::string& domain) {
    AxisPos pos;
    if (count <= 1) return pos; // degenerate axis stores a single slice
    const double tol = 1e-12 * (1.0 + std::abs(lo) + std::abs(hi));
    if (v < lo - tol || v > hi + tol) throw OutOfTableRange(t_for_err, x_for_err, domain);
    double r = (v - lo) / (hi - lo) * static_cast<double>(count - 1);
    r = std::min(std::max(r, 0.0), static_cast<double>(count - 1));
    pos.i0 = std::min(static_cast<int>(r), count - 2);
    pos.frac = r - static_cast<double>(pos.i0);
    return pos;
}

std::string box_string(const AveragedDriftTable& tbl) {
    std::string s = "t in [0, " + g17(tbl.T) + "]";
    for (int d = 0; d < tbl.n; ++d)
        s += ", x[" + std::to_string(d) + "] in [" + g17(tbl.x_lo[d]) + ", " + g17(tbl.x_hi[d]) + "]";
    return s;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::size_t AveragedDriftTable::num_nodes() const {
    std::size_t c = static_cast<std::size_t>(nt);
    for (int k : nx) c *= static_cast<std::size_t>(k);
    return c;
}

std::size_t AveragedDriftTable::node_index(int it, const std::vector<int>& ix) const {
    std::size_t idx = static_cast<std::size_t>(it);
    for (int d = 0; d < n; ++d) idx = idx * static_cast<std::size_t>(nx[d]) + static_cast<std::size_t>(ix[d]);
    return idx;
}

void AveragedDriftTable::node_coords(std::size_t node, double& t, Vec& x) const {
    x.resize(n);
    for (int d = n - 1; d >= 0; --d) {
        const auto k = static_cast<std::size_t>(nx[d]);
        const auto i = static_cast<int>(node % k);
        node /= k;
        x[d] = nx[d] > 1 ? x_lo[d] + (x_hi[d] - x_lo[d]) * static_cast<double>(i) /
                                          static_cast<double>(nx[d] - 1)
                         : x_lo[d];
    }
    const auto it = static_cast<int>(node);
    t = nt > 1 ? T * static_cast<double>(it) / static_cast<double>(nt - 1) : 0.0;
}

void AveragedDriftTable::lookup(double t, const Vec& x, Vec& value, Vec& se) const {
    if (x.size() != n) throw Error("table lookup: x dimension mismatch");
    const std::string domain = box_string(*this);
    std::vector<AxisPos> axes(static_cast<std::size_t>(n) + 1);
    axes[0] = locate(t, 0.0, T, nt, t, x, domain);
    for (int d = 0; d < n; ++d)
        axes[static_cast<std::size_t>(d) + 1] = locate(x[d], x_lo[d], x_hi[d], nx[d], t, x, domain);

    value = Vec::Zero(n);
    se = Vec::Zero(n);
    const int n_axes = n + 1;
    std::vector<int> ix(static_cast<std::size_t>(n));
    for (unsigned corner = 0; corner < (1u << n_axes); ++corner) {
        double w = 1.0;
        for (int a = 0; a < n_axes; ++a) {
            const bool hi_side = (corner >> a) & 1u;
            const AxisPos& ap = axes[static_cast<std::size_t>(a)];
            w *= hi_side ? ap.frac : 1.0 - ap.frac;
        }
        if (w == 0.0) continue;
        const int it = axes[0].i0 + static_cast<int>(corner & 1u);
        for (int d = 0; d < n; ++d)
            ix[static_cast<std::size_t>(d)] =
                axes[static_cast<std::size_t>(d) + 1].i0 + static_cast<int>((corner >> (d + 1)) & 1u);
        const std::size_t node = node_index(it, ix);
        value += w * values.row(static_cast<Eigen::Index>(node)).transpose();
        se += w * stderr_.row(static_cast<Eigen::Index>(node)).transpose();
    }
}

std::string table_fingerprint(const CoefficientSystem& sys, const EstimateOpts& opts) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, model_fingerprint(sys));
    h = fnv1a(h, g17(opts.burn_in));
    h = fnv1a(h, g17(opts.sample_time));
    h = fnv1a(h, std::to_string(opts.n_chains));
    h = fnv1a(h, std::to_string(static_cast<int>(opts.scheme.kind)));
    h = fnv1a(h, g17(opts.scheme.h));
    h = fnv1a(h, std::to_string(opts.seed));
    h = fnv1a(h, opts.variance_reduction ? "vr1" : "vr0");
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void AveragedDriftTable::verify_fingerprint(const CoefficientSystem& sys) const {
    const std::string expected = table_fingerprint(sys, opts);
    if (expected != fingerprint) throw FingerprintMismatch(expected, fingerprint);
}

void AveragedDriftTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary); // binary: no platform newline translation
    if (!out) throw Error("cannot open table file for writing: " + path);
    out << "averaged-drift-table,v1\n";
    out << "fingerprint," << fingerprint << "\n";
    out << "T," << g17(T) << "\n";
    out << "n," << n << "\n";
    out << "nt," << nt << "\n";
    for (int d = 0; d < n; ++d)
        out << "axis," << d << "," << nx[d] << "," << g17(x_lo[d]) << "," << g17(x_hi[d]) << "\n";
    out << "opts," << g17(opts.burn_in) << "," << g17(opts.sample_time) << "," << opts.n_chains
        << "," << static_cast<int>(opts.scheme.kind) << "," << g17(opts.scheme.h) << ","
        << opts.seed << "," << (opts.variance_reduction ? 1 : 0) << "\n";
    out << "nodes," << num_nodes() << "\n";
    Vec xc;
    for (std::size_t node = 0; node < num_nodes(); ++node) {
        double tc;
        node_coords(node, tc, xc);
        out << "node," << node << "," << g17(tc);
        for (int d = 0; d < n; ++d) out << "," << g17(xc[d]);
        for (int c = 0; c < n; ++c) out << "," << g17(values(static_cast<Eigen::Index>(node), c));
        for (int c = 0; c < n; ++c) out << "," << g17(stderr_(static_cast<Eigen::Index>(node), c));
        out << "\n";
    }
    if (!out) throw Error("write failure on table file: " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw Error("table parse: bad number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') throw Error("table parse: bad integer '" + s + "'");
    return v;
}

} // namespace

AveragedDriftTable AveragedDriftTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open table file: " + path);
    std::string line;
    auto next = [&](const char* key) {
        if (!std::getline(in, line)) throw Error(std::string("table parse: missing ") + key);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto fields = split_csv(line);
        if (fields.empty() || fields[0] != key)
            throw Error(std::string("table parse: expected ") + key + ", found '" + line + "'");
        return fields;
    };

    auto header = next("averaged-drift-table");
    if (header.size() != 2 || header[1] != "v1")
        throw Error("table parse: unsupported version");
    AveragedDriftTable tbl;
    tbl.fingerprint = next("fingerprint").at(1);
    tbl.T = parse_double(next("T").at(1));
    tbl.n = static_cast<int>(parse_int(next("n").at(1)));
    tbl.nt = static_cast<int>(parse_int(next("nt").at(1)));
    tbl.x_lo.resize(tbl.n);
    tbl.x_hi.resize(tbl.n);
    tbl.nx.resize(static_cast<std::size_t>(tbl.n));
    for (int d = 0; d < tbl.n; ++d) {
        auto f = next("axis");
        if (f.size() != 5 || parse_int(f[1]) != d) throw Error("table parse: bad axis line");
        tbl.nx[static_cast<std::size_t>(d)] = static_cast<int>(parse_int(f[2]));
        tbl.x_lo[d] = parse_double(f[3]);
        tbl.x_hi[d] = parse_double(f[4]);
    }
    {
        auto f = next("opts");
        if (f.size() != 8) throw Error("table parse: bad opts line");
        tbl.opts.burn_in = parse_double(f[1]);
        tbl.opts.sample_time = parse_double(f[2]);
        tbl.opts.n_chains = static_cast<int>(parse_int(f[3]));
        tbl.opts.scheme.kind = parse_int(f[4]) == 0 ? SchemeKind::ExplicitEM : SchemeKind::TamedEM;
        tbl.opts.scheme.h = parse_double(f[5]);
        tbl.opts.seed = static_cast<std::uint64_t>(parse_int(f[6]));
        tbl.opts.variance_reduction = parse_int(f[7]) != 0;
    }
    const auto n_nodes = static_cast<std::size_t>(parse_int(next("nodes").at(1)));
    if (n_nodes != tbl.num_nodes()) throw Error("table parse: node count does not match grid");
    tbl.values.setZero(static_cast<Eigen::Index>(n_nodes), tbl.n);
    tbl.stderr_.setZero(static_cast<Eigen::Index>(n_nodes), tbl.n);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        auto f = next("node");
        const std::size_t expect = 2 + 1 + static_cast<std::size_t>(3 * tbl.n);
        if (f.size() != expect) throw Error("table parse: bad node line width");
        const auto node = static_cast<std::size_t>(parse_int(f[1]));
        if (node != i) throw Error("table parse: node lines out of order");
        // fields 2 .. 2+n are coordinates (informational)
        const std::size_t vbase = 3 + static_cast<std::size_t>(tbl.n);
        for (int c = 0; c < tbl.n; ++c) {
            tbl.values(static_cast<Eigen::Index>(i), c) = parse_double(f[vbase + static_cast<std::size_t>(c)]);
            tbl.stderr_(static_cast<Eigen::Index>(i), c) =
                parse_double(f[vbase + static_cast<std::size_t>(tbl.n + c)]);
        }
    }
    return tbl;
}

AveragedDriftTable build_table(const CoefficientSystem& sys, const Vec& x_lo, const Vec& x_hi,
                               double T, const TableGridSpec& spec, const EstimateOpts& opts) {
    if (sys.slow_reads_w1)
        throw Error("build_table: slow drift reads the W1 value; bbar(t, x, w1) cannot be "
                    "tabulated over (t, x) alone");
    if (x_lo.size() != sys.dims.n || x_hi.size() != sys.dims.n)
        throw Error("build_table: box dimension mismatch");
    if (spec.nt < 1 || static_cast<int>(spec.nx.size()) != sys.dims.n)
        throw Error("build_table: grid spec does not match the system");
    for (int d = 0; d < sys.dims.n; ++d) {
        if (spec.nx[static_cast<std::size_t>(d)] < 1) throw Error("build_table: node counts must be >= 1");
        if (!(x_lo[d] <= x_hi[d])) throw Error("build_table: box must have x_lo <= x_hi");
        if (x_lo[d] == x_hi[d] && spec.nx[static_cast<std::size_t>(d)] > 1)
            throw Error("build_table: degenerate axis must hold a single node");
    }

    AveragedDriftTable tbl;
    tbl.T = T;
    tbl.x_lo = x_lo;
    tbl.x_hi = x_hi;
    tbl.nt = spec.nt;
    tbl.nx = spec.nx;
    tbl.n = sys.dims.n;
    tbl.opts = opts;
    tbl.fingerprint = table_fingerprint(sys, opts);
    const std::size_t count = tbl.num_nodes();
    tbl.values.setZero(static_cast<Eigen::Index>(count), tbl.n);
    tbl.stderr_.setZero(static_cast<Eigen::Index>(count), tbl.n);

    const Vec y0 = Vec::Zero(sys.dims.m);
    Vec xc;
    for (std::size_t node = 0; node < count; ++node) {
        double tc;
        tbl.node_coords(node, tc, xc);
        auto tag = [&](const std::string& what) {
            return "table node (t=" + g17(tc) + ", x[0]=" + g17(xc.size() ? xc[0] : 0.0) +
                   "): " + what;
        };
        try {
            const FrozenEstimate est = estimate_bbar(sys, tc, xc, y0, opts);
            tbl.values.row(static_cast<Eigen::Index>(node)) = est.bbar.transpose();
            tbl.stderr_.row(static_cast<Eigen::Index>(node)) = est.stderr_.transpose();
        } catch (const NonErgodicWarning& e) {
            throw NonErgodicWarning(tag(e.what()));
        } catch (const Explosion& e) {
            throw Explosion(tag(e.what()));
        } catch (const Error& e) {
            throw Error(tag(e.what()));
        }
    }
    return tbl;
}

BbarProvider BbarProvider::table(AveragedDriftTable tbl, const CoefficientSystem& sys) {
    if (sys.slow_reads_w1)
        throw Error("table provider: slow drift reads the W1 value; use the analytic provider");
    tbl.verify_fingerprint(sys);
    if (tbl.n != sys.dims.n) throw Error("table provider: dimension mismatch");
    BbarProvider p;
    p.mode_ = Mode::Table;
    p.table_ = std::make_shared<AveragedDriftTable>(std::move(tbl));
    return p;
}

BbarProvider BbarProvider::on_demand(const CoefficientSystem& sys, const EstimateOpts& opts,
                                     double t_quantum, double x_quantum) {
    if (sys.slow_reads_w1)
        throw Error("on-demand provider: slow drift reads the W1 value; use the analytic provider");
    if (!(t_quantum > 0) || !(x_quantum > 0))
        throw Error("on-demand provider: quantization steps must be positive");
    BbarProvider p;
    p.mode_ = Mode::OnDemand;
    p.sys_ = &sys;
    p.opts_ = opts;
    p.t_quantum_ = t_quantum;
    p.x_quantum_ = x_quantum;
    p.memo_ = std::make_shared<std::map<std::vector<long long>, MemoEntry>>();
    p.memo_mutex_ = std::make_shared<std::mutex>();
    return p;
}

BbarProvider BbarProvider::analytic(const CoefficientSystem& sys) {
    if (!sys.analytic_bbar)
        throw Error("analytic provider: system declares no closed-form averaged drift");
    BbarProvider p;
    p.mode_ = Mode::Analytic;
    p.sys_ = &sys;
    return p;
}

const AveragedDriftTable& BbarProvider::table_ref() const {
    if (mode_ != Mode::Table || !table_) throw Error("provider holds no table");
    return *table_;
}

void BbarProvider::lookup(double t, const Vec& x, const Vec& w1, Vec& value, Vec& se) const {
    switch (mode_) {
    case Mode::Table:
        table_->lookup(t, x, value, se);
        return;
    case Mode::Analytic: {
        Vec w1v = w1.size() ? w1 : Vec(Vec::Zero(sys_->dims.d1));
        value.resize(sys_->dims.n);
        sys_->analytic_bbar(t, x, w1v, value);
        se = Vec::Zero(sys_->dims.n);
        return;
    }
    case Mode::OnDemand: {
        std::vector<long long> key(static_cast<std::size_t>(x.size()) + 1);
        key[0] = std::llround(t / t_quantum_);
        for (Eigen::Index d = 0; d < x.size(); ++d)
            key[static_cast<std::size_t>(d) + 1] = std::llround(x[d] / x_quantum_);
        {
            std::lock_guard<std::mutex> lock(*memo_mutex_);
            auto it = memo_->find(key);
            if (it != memo_->end()) {
                value = it->second.value;
                se = it->second.se;
                return;
            }
        }
        const double tq = static_cast<double>(key[0]) * t_quantum_;
        Vec xq(x.size());
        for (Eigen::Index d = 0; d < x.size(); ++d)
            xq[d] = static_cast<double>(key[static_cast<std::size_t>(d) + 1]) * x_quantum_;
        // the stored entry is a pure function of the key (estimation is
        // deterministic given opts), so neither insertion order nor a
        // duplicate concurrent computation can change the committed value
        const FrozenEstimate est =
            estimate_bbar(*sys_, tq, xq, Vec(Vec::Zero(sys_->dims.m)), opts_);
        value = est.bbar;
        se = est.stderr_;
        std::lock_guard<std::mutex> lock(*memo_mutex_);
        memo_->emplace(std::move(key), MemoEntry{est.bbar, est.stderr_});
        return;
    }
    }
    throw Error("provider: invalid mode");
}

std::pair<Vec, Vec> bbar_lookup(const BbarProvider& provider, double t, const Vec& x, const Vec& w1) {
    Vec v, se;
    provider.lookup(t, x, w1, v, se);
    return {v, se};
}

AveragedPath simulate_averaged(const CoefficientSystem& sys, const BbarProvider& provider,
                               const Vec& x0, double T, StepScheme scheme,
                               const NoiseBundle& noise) {
    if (x0.size() != sys.dims.n) throw Error("simulate_averaged: x0 dimension mismatch");
    if (std::abs(noise.dt1_base() - scheme.h) > 1e-12 * scheme.h)
        throw GridMismatch("noise bundle W1 base step does not equal scheme.h");
    const std::uint64_t n_steps = detail::exact_ratio(T, scheme.h, "T/scheme.h");

    const int n = sys.dims.n, d1 = sys.dims.d1;
    AveragedPath out;
    out.t.resize(n_steps + 1);
    out.x.setZero(n_steps + 1, n);
    out.w1.setZero(n_steps + 1, d1);
    out.x.row(0) = x0.transpose();

    Vec xc = x0, w1c = Vec::Zero(d1);
    Vec bv(n), se(n), binc(n), dw1(d1);
    Mat sig(n, d1);
    for (std::uint64_t k = 0; k < n_steps; ++k) {
        const double tk = static_cast<double>(k) * scheme.h;
        provider.lookup(tk, xc, w1c, bv, se);
        sys.sigma(tk, xc, w1c, sig);
        noise.w1_increment(k, dw1);
        drift_increment(scheme.kind, scheme.h, bv, binc);
        binc.noalias() += sig * dw1;
        if (!binc.allFinite()) {
            out.exploded = true;
            out.explosion_step = static_cast<std::ptrdiff_t>(k);
        } else {
            xc += binc;
            w1c += dw1;
        }
        out.t[k + 1] = static_cast<double>(k + 1) * scheme.h;
        out.x.row(k + 1) = xc.transpose();
        out.w1.row(k + 1) = w1c.transpose();
        if (out.exploded) {
            for (std::uint64_t r = k + 2; r <= n_steps; ++r) {
                out.t[r] = static_cast<double>(r) * scheme.h;
                out.x.row(r) = xc.transpose();
                out.w1.row(r) = w1c.transpose();
            }
            break;
        }
    }
    return out;
}

} // namespace slowfast
