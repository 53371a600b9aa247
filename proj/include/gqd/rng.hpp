#pragma once

// Counter-based random source: Philox4x32-10 (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11) with Box-Muller for Gaussian variates.
//
// Every draw is a pure function of (seed, stream, index, attempt), so any
// sample can be generated independently of all others: generation order and
// worker count never change the output. The algorithm identifier below is
// recorded in dataset metadata so files can be regenerated bit-exactly by any
// implementation of the same scheme.

#include <array>
#include <cmath>
#include <cstdint>

namespace gqd::rng {

inline constexpr const char* algorithm_id = "philox4x32-10/box-muller";

// Stream tags keep unrelated consumers of the same seed on disjoint counters.
inline constexpr std::uint32_t stream_dataset_x = 0;
inline constexpr std::uint32_t stream_dataset_p = 1;
inline constexpr std::uint32_t stream_inversion_mc = 2;

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b,
                      std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo32(m0, ctr[0], hi0, lo0);
        detail::mulhilo32(m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

struct NormalPair {
    double z0 = 0.0;
    double z1 = 0.0;
};

// Two independent standard normals from one Philox block.
// u0 is mapped into (0,1] so log(u0) is always finite.
inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t index,
                              std::uint32_t stream, std::uint32_t attempt = 0) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32),
        stream,
        attempt,
    };
    const std::array<std::uint32_t, 2> key = {
        static_cast<std::uint32_t>(seed),
        static_cast<std::uint32_t>(seed >> 32),
    };
    const auto x = philox4x32_10(ctr, key);
    const std::uint64_t a = (static_cast<std::uint64_t>(x[0]) << 32) | x[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(x[2]) << 32) | x[3];
    constexpr double two_pow_53 = 9007199254740992.0;
    const double u0 = (static_cast<double>(a >> 11) + 1.0) / two_pow_53;  // (0,1]
    const double u1 = static_cast<double>(b >> 11) / two_pow_53;          // [0,1)
    const double radius = std::sqrt(-2.0 * std::log(u0));
    const double angle = 2.0 * 3.14159265358979323846 * u1;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace gqd::rng
