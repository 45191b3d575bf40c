#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tmsmd {

/// Identifies an independent random sub-stream derived from one seed.
/// Changing any value here changes every simulated series.
enum class Stream : std::uint64_t {
    msmd = 0x6d736d64,            // latent states and MSMD exponential shocks
    exponential = 0x65787064,     // stand-alone exponential durations
    truncation = 0x74727563,      // truncating exponential of the TMSMD
    tick_returns = 0x7469636b,    // Gaussian trade-time returns
    bootstrap = 0x626f6f74,
    optimizer = 0x6f707469,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the i-th parallel task of a batch. Results never depend on which
/// thread runs the task.
inline constexpr std::uint64_t task_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return seed ^ index;
}

/// Portable random source. Only mt19937_64 output bits are consumed (the
/// standard fixes that sequence exactly); all distributions are written out
/// here so simulated series are bit-identical across standard libraries.
class Rng {
public:
    Rng(std::uint64_t seed, Stream stream)
        : engine_(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream))) {}

    /// Uniform on (0, 1]; never returns 0.
    double uniform() noexcept {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// Unit-mean exponential via the inverse CDF, -ln(U).
    double exponential() noexcept { return -std::log(uniform()); }

    /// Standard normal by Box-Muller; the second variate is kept for the next call.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(2.0 * exponential());
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    bool bernoulli(double p) noexcept { return uniform() <= p; }

    bool coin() noexcept { return (engine_() >> 63) != 0; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace tmsmd
