#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "tmsmd/csv.hpp"
#include "tmsmd/duration_models.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/msmd_inference.hpp"
#include "tmsmd/random.hpp"

namespace tmsmd {

inline constexpr double kDefaultTickSize = 0.25;

/// Nearest multiple of `tick`, ties away from zero.
inline double round_to_tick(double x, double tick) { return std::round(x / tick) * tick; }

/// Gaussian trade-time returns rounded to the tick grid.
inline std::vector<double> simulate_tick_returns(const GaussianParams& g, std::size_t n, std::uint64_t seed,
                                                 double tick_size = kDefaultTickSize) {
    validate(g);
    detail::require(tick_size > 0.0 && std::isfinite(tick_size), "tick_size must be > 0");
    Rng rng(seed, Stream::tick_returns);
    std::vector<double> out(n);
    for (auto& r : out) r = round_to_tick(g.mu + g.sigma * rng.normal(), tick_size);
    return out;
}

/// Rounds a duration to whole milliseconds (halves up); anything that would
/// round to zero becomes 1 ms.
inline double discretize_duration(double d) { return std::max(1.0, std::floor(d + 0.5)); }

inline DurationSeries discretize_durations(const DurationSeries& durations) {
    DurationSeries out{durations.values, durations.origin};
    for (auto& d : out.values) d = discretize_duration(d);
    return out;
}

// ---------------------------------------------------------------------------
// Support sets and clamping
// ---------------------------------------------------------------------------

/// Admissible discrete clock-time return values. Always contains 0.
struct SupportSet {
    std::vector<double> values;

    [[nodiscard]] bool contains(double v) const { return std::binary_search(values.begin(), values.end(), v); }

    static SupportSet from_values(std::span<const double> observed) {
        SupportSet s{std::vector<double>(observed.begin(), observed.end())};
        s.values.push_back(0.0);
        std::sort(s.values.begin(), s.values.end());
        s.values.erase(std::unique(s.values.begin(), s.values.end()), s.values.end());
        return s;
    }

    /// Every tick multiple in [-max_abs, max_abs].
    static SupportSet from_range(double max_abs, double tick_size = kDefaultTickSize) {
        detail::require(tick_size > 0.0, "tick_size must be > 0");
        const auto steps = static_cast<long long>(std::floor(std::abs(max_abs) / tick_size + 1e-9));
        SupportSet s;
        for (long long i = -steps; i <= steps; ++i) s.values.push_back(static_cast<double>(i) * tick_size);
        return s;
    }
};

struct ClampReport {
    std::size_t adjusted = 0;
    double fraction = 0.0;
};

struct ClampResult {
    std::vector<double> returns;
    ClampReport report;
};

/// Replaces every return outside the support with zero.
inline ClampResult clamp_to_support(std::span<const double> returns, const SupportSet& support) {
    ClampResult out{std::vector<double>(returns.begin(), returns.end()), {}};
    for (auto& r : out.returns) {
        if (!support.contains(r)) {
            r = 0.0;
            ++out.report.adjusted;
        }
    }
    if (!returns.empty())
        out.report.fraction = static_cast<double>(out.report.adjusted) / static_cast<double>(returns.size());
    return out;
}

// ---------------------------------------------------------------------------
// Compounding
// ---------------------------------------------------------------------------

/// Durations paired with trade returns and aggregated over consecutive
/// clock windows [j tau, (j+1) tau), j = 0, 1, ... The first trade arrives
/// at its own duration after time 0; a trade exactly on a boundary belongs
/// to the later window.
struct CompoundSimulation {
    double tau = 0.0;
    DurationSeries durations;  // whole milliseconds
    std::vector<double> tick_returns;
    std::vector<double> window_returns;
    std::vector<std::size_t> counts;
    ClampReport adjustments;

    [[nodiscard]] std::size_t windows() const noexcept { return window_returns.size(); }
};

namespace detail {

inline void aggregate_windows(CompoundSimulation& sim, std::size_t max_windows) {
    const double tau = sim.tau;
    double t = 0.0;
    for (double d : sim.durations.values) t += d;
    auto complete = static_cast<std::size_t>(std::floor(t / tau));
    complete = std::min(complete, max_windows);
    sim.window_returns.assign(complete, 0.0);
    sim.counts.assign(complete, 0);
    t = 0.0;
    for (std::size_t i = 0; i < sim.durations.values.size(); ++i) {
        t += sim.durations.values[i];
        const auto j = static_cast<std::size_t>(std::floor(t / tau));
        if (j >= complete) break;
        sim.window_returns[j] += sim.tick_returns[i];
        ++sim.counts[j];
    }
}

}  // namespace detail

/// Window returns and trade counts for every window that closes before the
/// last arrival. Durations are discretized to whole milliseconds first.
inline CompoundSimulation compound_returns(const DurationSeries& durations, std::span<const double> tick_returns,
                                           double tau) {
    if (durations.size() != tick_returns.size())
        throw DataError("durations and tick returns must have equal length");
    detail::require(tau >= 1.0 && std::isfinite(tau), "tau must be >= 1 ms");
    CompoundSimulation sim;
    sim.tau = tau;
    sim.durations = discretize_durations(durations);
    sim.tick_returns.assign(tick_returns.begin(), tick_returns.end());
    detail::aggregate_windows(sim, std::numeric_limits<std::size_t>::max());
    return sim;
}

/// Empirical distribution of trade counts per window; probs[k] = P(N = k).
struct CountDistribution {
    std::vector<double> probs;
    std::size_t windows = 0;
};

inline CountDistribution counting_distribution(const DurationSeries& durations, double tau) {
    const std::vector<double> zeros(durations.size(), 0.0);
    const auto sim = compound_returns(durations, zeros, tau);
    if (sim.windows() == 0) throw DataError("no complete window of length tau fits the durations");
    CountDistribution out;
    out.windows = sim.windows();
    const std::size_t max_count = *std::max_element(sim.counts.begin(), sim.counts.end());
    std::vector<std::size_t> hist(max_count + 1, 0);
    for (auto c : sim.counts) ++hist[c];
    out.probs.resize(hist.size());
    for (std::size_t k = 0; k < hist.size(); ++k)
        out.probs[k] = static_cast<double>(hist[k]) / static_cast<double>(out.windows);
    return out;
}

/// P(N = k) for N ~ Poisson(gamma * tau), evaluated in log space.
inline double poisson_count_pmf(double gamma, double tau, long long k) {
    detail::require(k >= 0, "count k must be >= 0");
    detail::require(gamma > 0.0 && tau > 0.0, "gamma and tau must be > 0");
    const double rate = gamma * tau;
    return std::exp(static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0));
}

// ---------------------------------------------------------------------------
// End-to-end simulation
// ---------------------------------------------------------------------------

/// Window counts matching the observation counts of the reference sample at
/// each standard horizon.
struct HorizonProtocol {
    double tau;
    std::size_t n_windows;
};

inline constexpr std::array<HorizonProtocol, 6> kStandardHorizons{{
    {250, 208000}, {500, 104000}, {1000, 52000}, {5000, 10400}, {10000, 5200}, {30000, 1716}}};

struct ClockSimulationOptions {
    double tick_size = kDefaultTickSize;
    std::optional<SupportSet> support;  // clamp when set
};

/// Simulates durations from `model` and tick returns from `g`, discretizes
/// both, and compounds until exactly `n_windows` windows of length tau are
/// complete. The tick-return stream depends only on the seed, so different
/// duration models under one seed share their trade-time returns.
inline CompoundSimulation simulate_clock_returns(const DurationModelParams& model, const GaussianParams& g,
                                                 double tau, std::size_t n_windows, std::uint64_t seed,
                                                 const ClockSimulationOptions& options = {}) {
    validate(model);
    validate(g);
    detail::require(tau >= 1.0 && std::isfinite(tau), "tau must be >= 1 ms");
    detail::require(n_windows >= 1, "n_windows must be >= 1");
    detail::require(options.tick_size > 0.0, "tick_size must be > 0");

    DurationSampler durations(model, seed);
    Rng ticks(seed, Stream::tick_returns);
    CompoundSimulation sim;
    sim.tau = tau;
    sim.durations.origin = SeriesOrigin::simulated(model_name(model), seed);

    const double horizon = tau * static_cast<double>(n_windows);
    double t = 0.0;
    while (t < horizon) {
        const double d = discretize_duration(durations.next());
        sim.durations.values.push_back(d);
        sim.tick_returns.push_back(round_to_tick(g.mu + g.sigma * ticks.normal(), options.tick_size));
        t += d;
    }
    detail::aggregate_windows(sim, n_windows);

    if (options.support) {
        auto clamped = clamp_to_support(sim.window_returns, *options.support);
        sim.window_returns = std::move(clamped.returns);
        sim.adjustments = clamped.report;
    }
    return sim;
}

inline void write_compound_csv(std::ostream& out, const CompoundSimulation& sim) {
    csv::Writer w(out);
    w.row("window_index", "count", "return");
    for (std::size_t j = 0; j < sim.windows(); ++j) w.row(j, sim.counts[j], sim.window_returns[j]);
}

}  // namespace tmsmd
