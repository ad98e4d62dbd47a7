#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace anb {

// Philox4x32-10 counter-based generator. Each 128-bit counter block maps to
// four 32-bit words under a 64-bit key; there is no sequential state, so any
// element of a stream can be produced independently of the others.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint32_t k0,
                                               std::uint32_t k1) {
    constexpr std::uint32_t mul0 = 0xD2511F53u;
    constexpr std::uint32_t mul1 = 0xCD9E8D57u;
    constexpr std::uint32_t weyl0 = 0x9E3779B9u;
    constexpr std::uint32_t weyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(mul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(mul1) * ctr[2];
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += weyl0;
        k1 += weyl1;
    }
    return ctr;
}

inline double u32_to_unit_double(std::uint32_t w) {
    // (w + 0.5) / 2^32, strictly inside (0, 1) so log() is always finite.
    return (static_cast<double>(w) + 0.5) * 0x1p-32;
}

/// Keyed stream of standard normal values. Element k of the stream is a pure
/// function of (seed, trial, stream, k): Philox4x32-10 with the counter
/// {k_lo, k_hi, trial, stream} and key = seed, pushed through Box-Muller
/// (cosine branch). Evaluation order does not matter.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint32_t trial, std::uint32_t stream)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          trial_(trial),
          stream_(stream) {}

    double operator()(std::uint64_t k) const {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
            trial_, stream_};
        const auto w = philox4x32(ctr, key0_, key1_);
        const double u1 = u32_to_unit_double(w[0]);
        const double u2 = u32_to_unit_double(w[1]);
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    std::uint32_t key0_, key1_, trial_, stream_;
};

/// Sequential convenience wrapper over the same Philox core, for fixture
/// generation and anywhere a plain deterministic RNG is enough.
class PhiloxRng {
public:
    explicit PhiloxRng(std::uint64_t seed, std::uint32_t stream = 0)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          stream_(stream) {}

    std::uint32_t next_u32() {
        if (have_ == 0) {
            buf_ = philox4x32({static_cast<std::uint32_t>(counter_),
                               static_cast<std::uint32_t>(counter_ >> 32), 0,
                               stream_},
                              key0_, key1_);
            ++counter_;
            have_ = 4;
        }
        return buf_[4 - have_--];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform in (0, 1).
    double uniform() { return u32_to_unit_double(next_u32()); }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal, Box-Muller cosine branch.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    std::uint32_t key0_, key1_, stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int have_ = 0;
};

}  // namespace anb
