#pragma once

#include "slowfast/types.hpp"

#include <array>
#include <cstdint>

namespace slowfast {

/// Philox4x64-10 counter-based block cipher (Random123 family).
/// Pure function of (counter, key); used as the root of all randomness so that
/// any draw is addressable as (seed, path, stream, component, index).
struct Philox4x64 {
    static std::array<std::uint64_t, 4> block(const std::array<std::uint64_t, 4>& counter,
                                              const std::array<std::uint64_t, 2>& key);
};

/// SplitMix64 finalizer; used to derive subkeys from (seed, path, stream).
std::uint64_t splitmix64(std::uint64_t x);

/// Independent noise streams of one path.
enum class NoiseStream : std::uint32_t {
    SlowW1 = 1,   ///< drives the slow equation (and the averaged equation)
    FastW2 = 2,   ///< drives the fast equation of the coupled system
    FrozenW2 = 3, ///< drives frozen-equation chains (independent space)
};

/// All Brownian increments of one simulated path, generated counter-based:
/// every N(0,1) draw is a pure function of (seed, path_index, stream,
/// component, fine index). Increments over [i0, i1) fine steps are exact sums
/// of the unit increments, so a coarse consumer and a fine consumer of the
/// same stream see the same Brownian path. The W1 stream keeps one base step
/// for every scale-separation level, which makes the identical W1 path drive
/// the slow equation at every eps as well as the averaged equation.
class NoiseBundle {
  public:
    /// w2_substream decorrelates the fast stream across eps levels without
    /// touching W1 (pass the level index).
    NoiseBundle(std::uint64_t seed, std::uint64_t path_index, Dims dims,
                double dt1_base, double dt2_base, std::uint32_t w2_substream = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_index_; }
    double dt1_base() const { return dt1_; }
    double dt2_base() const { return dt2_; }
    const Dims& dims() const { return dims_; }

    /// Unit-variance Gaussian for (stream, component, fine index).
    double standard_gaussian(NoiseStream stream, std::uint32_t component, std::uint64_t index) const;

    /// One W1 base-step increment: out ~ N(0, dt1 * I_d1).
    void w1_increment(std::uint64_t step, Vec& out) const;

    /// One W2 base-step increment: out ~ N(0, dt2 * I_d2).
    void w2_increment(std::uint64_t step, Vec& out) const;

    /// One frozen-stream increment at base step dt: out ~ N(0, dt * I_d2).
    void frozen_increment(std::uint64_t step, double dt, Vec& out) const;

    /// Increment of the stream over fine steps [i0, i1) at base step dt_base
    /// (exact sum of the unit increments).
    void increment_sum(NoiseStream stream, std::uint64_t i0, std::uint64_t i1,
                       double dt_base, Vec& out) const;

  private:
    std::array<std::uint64_t, 2> stream_key(NoiseStream stream) const;

    std::uint64_t seed_;
    std::uint64_t path_index_;
    Dims dims_;
    double dt1_;
    double dt2_;
    std::uint32_t w2_substream_;
    std::array<std::uint64_t, 2> key_w1_, key_w2_, key_frozen_;

    // one-block memo: consecutive indices share a Philox block (two lanes);
    // a bundle is used by one thread at a time, so no synchronization
    struct BlockCache {
        std::uint64_t block = ~0ULL;
        std::uint64_t tag = ~0ULL;
        std::array<std::uint64_t, 4> words{};
    };
    mutable BlockCache cache_;
};

} // namespace slowfast
