#pragma once

#include "slowfast/frozen.hpp"
#include "slowfast/kernel.hpp"
#include "slowfast/model.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace slowfast {

/// Node counts of a rectangular table grid: nt nodes on [0, T] and nx[d]
/// nodes on [x_lo[d], x_hi[d]] per state dimension. An axis with one node is
/// degenerate: it stores a single slice and does not constrain lookups.
struct TableGridSpec {
    int nt = 2;
    std::vector<int> nx;
};

/// Uniform-grid interpolation table of the averaged drift with per-node
/// standard errors. Lookups inside the box return the multilinear
/// interpolant; lookups outside throw OutOfTableRange (no extrapolation of a
/// superlinear drift). Serialization is a versioned CSV bundle that reloads
/// bit-exactly (%.17g round-trip).
struct AveragedDriftTable {
    double T = 1.0;
    Vec x_lo, x_hi;
    int nt = 0;
    std::vector<int> nx;
    int n = 0;          ///< state dimension (columns of values)
    Mat values;         ///< num_nodes x n, t-major then x-dims row-major
    Mat stderr_;        ///< same layout
    std::string fingerprint; ///< hash of model tag + declared params + estimation opts
    EstimateOpts opts;       ///< estimation options used at every node

    std::size_t num_nodes() const;
    /// Flat node index from per-axis indices (it, ix[0], ix[1], ...).
    std::size_t node_index(int it, const std::vector<int>& ix) const;
    /// Node coordinates of a flat index.
    void node_coords(std::size_t node, double& t, Vec& x) const;

    /// Multilinear interpolation; throws OutOfTableRange outside the box.
    void lookup(double t, const Vec& x, Vec& value, Vec& se) const;

    void save(const std::string& path) const;
    static AveragedDriftTable load(const std::string& path);
    /// Throws FingerprintMismatch unless the table was built for this system
    /// (same tag, declared constants, and estimation options).
    void verify_fingerprint(const CoefficientSystem& sys) const;
};

/// Fingerprint binding a table to (system declaration, estimation options).
std::string table_fingerprint(const CoefficientSystem& sys, const EstimateOpts& opts);

/// Populates every node of the grid with frozen-equation estimates.
/// Estimation errors are rethrown with the node coordinates attached.
/// Systems whose slow drift reads the W1 value cannot be tabulated.
AveragedDriftTable build_table(const CoefficientSystem& sys, const Vec& x_lo, const Vec& x_hi,
                               double T, const TableGridSpec& spec, const EstimateOpts& opts);

/// Source of averaged-drift values for the averaged equation:
///  - Table: multilinear interpolation in a prebuilt AveragedDriftTable;
///  - OnDemand: frozen-equation estimation at (t, x) quantized to a declared
///    step, memoized; each memo value is a pure function of its key, so
///    results are identical regardless of evaluation order;
///  - Analytic: closed-form map (models flagged with analytic_bbar only).
/// Table and OnDemand refuse systems whose slow drift reads the W1 value.
class BbarProvider {
  public:
    enum class Mode { Table, OnDemand, Analytic };

    static BbarProvider table(AveragedDriftTable tbl, const CoefficientSystem& sys);
    static BbarProvider on_demand(const CoefficientSystem& sys, const EstimateOpts& opts,
                                  double t_quantum, double x_quantum);
    static BbarProvider analytic(const CoefficientSystem& sys);

    Mode mode() const { return mode_; }
    /// Averaged drift and its standard error at (t, x); w1 is consumed by
    /// Analytic providers of w1-reading systems and ignored otherwise.
    void lookup(double t, const Vec& x, const Vec& w1, Vec& value, Vec& se) const;
    /// The table backing a Table provider.
    const AveragedDriftTable& table_ref() const;

  private:
    BbarProvider() = default;
    Mode mode_ = Mode::Analytic;
    std::shared_ptr<const AveragedDriftTable> table_;
    // OnDemand state
    const CoefficientSystem* sys_ = nullptr; // Analytic/OnDemand: must outlive provider
    EstimateOpts opts_;
    double t_quantum_ = 0, x_quantum_ = 0;
    struct MemoEntry {
        Vec value, se;
    };
    // Each memo value is a pure function of its key, so concurrent lookups
    // commit identical entries; the lock only protects the map structure.
    mutable std::shared_ptr<std::map<std::vector<long long>, MemoEntry>> memo_;
    mutable std::shared_ptr<std::mutex> memo_mutex_;
};

/// value/stderr pair of one provider lookup.
std::pair<Vec, Vec> bbar_lookup(const BbarProvider& provider, double t, const Vec& x,
                                const Vec& w1 = Vec());

/// One trajectory of the averaged equation dXbar = bbar dt + sigma dW1.
struct AveragedPath {
    std::vector<double> t;
    Mat x;  ///< (N+1) x n
    Mat w1; ///< (N+1) x d1 cumulative W1 values
    bool exploded = false;
    std::ptrdiff_t explosion_step = -1;
};

/// Euler solution of the averaged equation on [0, T], driven by the bundle's
/// W1 stream (the identical increments a coupled run at the same base step
/// consumes). sigma is evaluated at the live w1 argument, like the slow
/// equation. Throws OutOfTableRange if the path leaves the provider's
/// coverage; a non-finite state flags the path exploded and freezes it.
AveragedPath simulate_averaged(const CoefficientSystem& sys, const BbarProvider& provider,
                               const Vec& x0, double T, StepScheme scheme,
                               const NoiseBundle& noise);

} // namespace slowfast
