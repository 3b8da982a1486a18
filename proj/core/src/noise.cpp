#include "slowfast/noise.hpp"

#include <cmath>

namespace slowfast {

namespace {

using u64 = std::uint64_t;

inline void mulhilo(u64 a, u64 b, u64& hi, u64& lo) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<u64>(p >> 64);
    lo = static_cast<u64>(p);
}

constexpr u64 kM0 = 0xD2E7470EE14C6C93ULL;
constexpr u64 kM1 = 0xCA5A826395121157ULL;
constexpr u64 kW0 = 0x9E3779B97F4A7C15ULL;
constexpr u64 kW1 = 0xBB67AE8584CAA73BULL;

constexpr double kTwoPi = 6.283185307179586476925286766559;

// map a 64-bit word to (0,1]; never 0, so log() below is finite
inline double uniform_pos(u64 w) {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1p-53;
}

// map a 64-bit word to [0,1)
inline double uniform_half_open(u64 w) {
    return static_cast<double>(w >> 11) * 0x1p-53;
}

} // namespace

std::array<u64, 4> Philox4x64::block(const std::array<u64, 4>& counter,
                                     const std::array<u64, 2>& key) {
    std::array<u64, 4> c = counter;
    std::array<u64, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        u64 hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

u64 splitmix64(u64 x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

NoiseBundle::NoiseBundle(u64 seed, u64 path_index, Dims dims,
                         double dt1_base, double dt2_base, std::uint32_t w2_substream)
    : seed_(seed), path_index_(path_index), dims_(dims),
      dt1_(dt1_base), dt2_(dt2_base), w2_substream_(w2_substream) {
    key_w1_ = stream_key(NoiseStream::SlowW1);
    key_w2_ = stream_key(NoiseStream::FastW2);
    key_frozen_ = stream_key(NoiseStream::FrozenW2);
}

std::array<u64, 2> NoiseBundle::stream_key(NoiseStream stream) const {
    // Subkey chain (seed, path, stream[, substream]); W1 deliberately ignores
    // the substream so that the slow noise is identical across eps levels.
    u64 tag = static_cast<u64>(static_cast<std::uint32_t>(stream));
    if (stream != NoiseStream::SlowW1)
        tag |= static_cast<u64>(w2_substream_) << 32;
    u64 a = splitmix64(seed_ ^ splitmix64(path_index_ ^ splitmix64(tag)));
    u64 b = splitmix64(a ^ 0xA5A5A5A5A5A5A5A5ULL);
    return {a, b};
}

double NoiseBundle::standard_gaussian(NoiseStream stream, std::uint32_t component,
                                      u64 index) const {
    const std::array<u64, 2>& key = stream == NoiseStream::SlowW1    ? key_w1_
                                    : stream == NoiseStream::FastW2 ? key_w2_
                                                                    : key_frozen_;
    // Two draws per Philox block: index selects (block, lane).
    const u64 block_index = index >> 1;
    const unsigned lane = static_cast<unsigned>(index & 1);
    const u64 tag = (static_cast<u64>(static_cast<std::uint32_t>(stream)) << 32) | component;
    if (cache_.block != block_index || cache_.tag != tag) {
        std::array<u64, 4> counter = {block_index, static_cast<u64>(component), 0, 0};
        cache_.words = Philox4x64::block(counter, key);
        cache_.block = block_index;
        cache_.tag = tag;
    }
    const double u1 = uniform_pos(cache_.words[0]);
    const double u2 = uniform_half_open(cache_.words[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    return lane == 0 ? r * std::cos(a) : r * std::sin(a);
}

void NoiseBundle::w1_increment(u64 step, Vec& out) const {
    out.resize(dims_.d1);
    const double s = std::sqrt(dt1_);
    for (int c = 0; c < dims_.d1; ++c)
        out[c] = s * standard_gaussian(NoiseStream::SlowW1, static_cast<std::uint32_t>(c), step);
}

void NoiseBundle::w2_increment(u64 step, Vec& out) const {
    out.resize(dims_.d2);
    const double s = std::sqrt(dt2_);
    for (int c = 0; c < dims_.d2; ++c)
        out[c] = s * standard_gaussian(NoiseStream::FastW2, static_cast<std::uint32_t>(c), step);
}

void NoiseBundle::frozen_increment(u64 step, double dt, Vec& out) const {
    out.resize(dims_.d2);
    const double s = std::sqrt(dt);
    for (int c = 0; c < dims_.d2; ++c)
        out[c] = s * standard_gaussian(NoiseStream::FrozenW2, static_cast<std::uint32_t>(c), step);
}

void NoiseBundle::increment_sum(NoiseStream stream, u64 i0, u64 i1, double dt_base,
                                Vec& out) const {
    const int d = stream == NoiseStream::SlowW1 ? dims_.d1 : dims_.d2;
    out.setZero(d);
    const double s = std::sqrt(dt_base);
    for (u64 i = i0; i < i1; ++i)
        for (int c = 0; c < d; ++c)
            out[c] += s * standard_gaussian(stream, static_cast<std::uint32_t>(c), i);
}

} // namespace slowfast
