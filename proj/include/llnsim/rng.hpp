#pragma once

#include <cmath>
#include <cstdint>

namespace llnsim {

// Purpose tag of a random stream. Streams are keyed by (purpose, node id) so
// drawing from one stream (say, a mobility model) never perturbs another
// (topology placement); scenarios with matched seeds then differ only in the
// streams they actually consume.
enum class StreamPurpose : std::uint32_t {
    Placement = 1,
    Mobility = 2,
    Trickle = 3,
    Mac = 4,
    Traffic = 5,
    Loss = 6,
    Startup = 7,
    Fuzz = 8,
};

namespace detail {
// 64-bit avalanche mix (splitmix64 finalizer).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return detail::mix64(base + 0x9e3779b97f4a7c15ULL * (salt + 1));
}

// Counter-based splittable generator (splitmix scheme with a per-stream odd
// increment). Identical (seed, purpose, node) gives the identical draw
// sequence on any platform; distinct stream keys get distinct Weyl
// increments, making streams independent by construction.
class RngStream {
public:
    RngStream() : RngStream(0, StreamPurpose::Fuzz, 0) {}

    RngStream(std::uint64_t seed, StreamPurpose purpose, std::uint32_t node) {
        std::uint64_t key = detail::mix64(seed ^ 0x6a09e667f3bcc909ULL);
        key = detail::mix64(key + (static_cast<std::uint64_t>(purpose) << 32 | node));
        state_ = key;
        gamma_ = detail::mix64(key ^ 0x9e3779b97f4a7c15ULL) | 1ULL;
    }

    std::uint64_t next_u64() {
        state_ += gamma_;
        return detail::mix64(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * next_unit(); }

    // Uniform integer on [0, n), n > 0; rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t min = (0 - n) % n;  // 2^64 mod n
        std::uint64_t x = next_u64();
        while (x < min) x = next_u64();
        return x % n;
    }

    bool bernoulli(double p) {
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return next_unit() < p;
    }

    // Box-Muller; one value per call (two uniforms consumed).
    double normal(double mean, double sd) {
        double u1 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
    std::uint64_t gamma_;
};

}  // namespace llnsim
