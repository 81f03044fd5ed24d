#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace lad::rng {

// Counter-based generator: every draw is a pure function of (key, counter),
// so results are independent of call order and thread scheduling.

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

class Stream {
public:
    Stream(std::uint64_t seed, std::string_view name) noexcept
        : key_(mix64(mix64(seed) ^ fnv1a(name))) {}

    // Derived sub-stream, e.g. one per scene or per network.
    Stream fork(std::uint64_t id) const noexcept { return Stream(mix64(key_ ^ mix64(id))); }

    std::uint64_t bits(std::uint64_t ctr) const noexcept { return mix64(key_ ^ mix64(ctr)); }

    // Uniform in [0,1), 53-bit resolution.
    double uniform(std::uint64_t ctr) const noexcept {
        return static_cast<double>(bits(ctr) >> 11) * 0x1.0p-53;
    }

    double uniform(std::uint64_t ctr, double lo, double hi) const noexcept {
        return lo + uniform(ctr) * (hi - lo);
    }

    // Uniform integer in [0, n), n > 0. Lemire multiply-shift; bias is
    // negligible for the n used here and the mapping stays portable.
    std::uint64_t uniform_int(std::uint64_t ctr, std::uint64_t n) const noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(bits(ctr)) * n) >> 64);
    }

    double log_uniform(std::uint64_t ctr, double lo, double hi) const noexcept {
        return std::exp(uniform(ctr, std::log(lo), std::log(hi)));
    }

    // Standard normal via Box-Muller; both uniforms derive from one counter.
    double normal(std::uint64_t ctr) const noexcept {
        const std::uint64_t b = bits(ctr);
        const double u1 = static_cast<double>(mix64(b ^ 0xD6E8FEB86659FD93ull) >> 11) * 0x1.0p-53
                        + 0x1.0p-54;  // keep log() argument away from 0
        const double u2 = static_cast<double>(mix64(b ^ 0xA3EC647659359ACDull) >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(std::uint64_t ctr, double mean, double sigma) const noexcept {
        return mean + sigma * normal(ctr);
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    explicit Stream(std::uint64_t key) noexcept : key_(key) {}
    std::uint64_t key_;
};

}  // namespace lad::rng
