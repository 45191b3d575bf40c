#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tmsmd/csv.hpp"
#include "tmsmd/duration_models.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/msmd_inference.hpp"
#include "tmsmd/parallel.hpp"
#include "tmsmd/stats.hpp"
#include "tmsmd/subordination.hpp"
#include "tmsmd/tick_ingest.hpp"

namespace tmsmd {

// ---------------------------------------------------------------------------
// Trade-rate / volatility curve
// ---------------------------------------------------------------------------

struct VolCurvePoint {
    double lambda = 0.0;
    double tau_med = 0.0;         // median simulated duration, ms
    double vol_annualized = 0.0;  // percent
};

struct VolCurveOptions {
    double price_ref = stats::kDefaultPriceRef;
    double annual_ms = stats::kDefaultAnnualMs;
    double tick_size = kDefaultTickSize;
    unsigned threads = 0;
};

struct VolCurve {
    std::vector<VolCurvePoint> points;
    /// Grid values whose simulation failed, with the reason.
    std::vector<std::pair<double, std::string>> failures;
    std::optional<stats::Cubic> cubic;  // vol as a cubic in tau_med
    double r_squared = 0.0;
    double residual_se = 0.0;
    double tau_med_min = 0.0;
    double tau_med_max = 0.0;
    double tau = 0.0;
    VolCurveOptions options;
};

/// Lower median (the smaller middle element for even counts).
inline double lower_median(std::vector<double> v) {
    if (v.empty()) throw DataError("median of an empty series");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

/// Sweeps the baseline intensity of a TMSMD model, simulating clock-time
/// returns at each value and recording (median duration, annualized vol).
/// A cubic in tau_med is fitted to the successful points. Grid point i uses
/// seed task_seed(seed, i).
inline VolCurve vol_curve(const TmsmdParams& base, const GaussianParams& g, std::span<const double> lambda_grid,
                          double tau, std::size_t n_windows, std::uint64_t seed, const VolCurveOptions& options = {}) {
    validate(base);
    validate(g);
    detail::require(!lambda_grid.empty(), "lambda grid is empty");
    for (double l : lambda_grid) detail::require(l >= 0.01 && l <= 6.0, "lambda grid must lie within [0.01, 6]");
    detail::require(n_windows >= 500, "n_windows must be >= 500");

    struct Slot {
        std::optional<VolCurvePoint> point;
        std::string error;
    };
    std::vector<Slot> slots(lambda_grid.size());
    parallel_for(
        lambda_grid.size(),
        [&](std::size_t i) {
            try {
                TmsmdParams p = base;
                p.msmd.lambda = lambda_grid[i];
                ClockSimulationOptions sim_opts;
                sim_opts.tick_size = options.tick_size;
                const auto sim = simulate_clock_returns(p, g, tau, n_windows, task_seed(seed, i), sim_opts);
                slots[i].point = VolCurvePoint{
                    lambda_grid[i], lower_median(sim.durations.values),
                    stats::annualized_vol(sim.window_returns, tau, options.price_ref, options.annual_ms)};
            } catch (const Error& e) {
                slots[i].error = e.what();
            }
        },
        options.threads);

    VolCurve curve;
    curve.tau = tau;
    curve.options = options;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].point) curve.points.push_back(*slots[i].point);
        else curve.failures.emplace_back(lambda_grid[i], slots[i].error);
    }
    if (curve.points.empty()) return curve;

    std::vector<double> x, y;
    for (const auto& p : curve.points) {
        x.push_back(p.tau_med);
        y.push_back(p.vol_annualized);
    }
    curve.tau_med_min = *std::min_element(x.begin(), x.end());
    curve.tau_med_max = *std::max_element(x.begin(), x.end());
    try {
        curve.cubic = stats::fit_cubic(x, y);
        curve.r_squared = stats::r_squared(*curve.cubic, x, y);
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - (*curve.cubic)(x[i]), 2);
        curve.residual_se = x.size() > 4 ? std::sqrt(ss / static_cast<double>(x.size() - 4)) : 0.0;
    } catch (const RankError&) {
        curve.cubic.reset();
    }
    return curve;
}

struct VolQuery {
    double vol = 0.0;
    bool extrapolated = false;
};

/// Evaluates the fitted cubic; flags queries outside the simulated tau_med range.
inline VolQuery extrapolate_vol(const VolCurve& curve, double tau_med_query) {
    if (!curve.cubic) throw DataError("vol curve has no fitted cubic");
    return {(*curve.cubic)(tau_med_query),
            tau_med_query < curve.tau_med_min || tau_med_query > curve.tau_med_max};
}

inline void write_vol_curve_csv(std::ostream& out, const VolCurve& curve) {
    csv::Writer w(out);
    w.row("lambda", "tau_med", "vol");
    for (const auto& p : curve.points) w.row(p.lambda, p.tau_med, p.vol_annualized);
}

// ---------------------------------------------------------------------------
// Lead-lag price formation
// ---------------------------------------------------------------------------

/// Price in force at the end of each millisecond of [t0, t0 + size()).
/// NaN marks milliseconds before the first trade.
struct InforceSeries {
    std::int64_t t0 = 0;
    std::vector<double> prices;

    [[nodiscard]] std::size_t size() const noexcept { return prices.size(); }
    [[nodiscard]] std::int64_t t1() const noexcept { return t0 + static_cast<std::int64_t>(prices.size()); }
    [[nodiscard]] bool defined(std::int64_t t) const {
        return t >= t0 && t < t1() && !std::isnan(prices[static_cast<std::size_t>(t - t0)]);
    }
    [[nodiscard]] double at(std::int64_t t) const { return prices[static_cast<std::size_t>(t - t0)]; }
};

inline InforceSeries inforce_series(const TickSeries& ticks, std::int64_t t0, std::int64_t t1) {
    detail::require(t1 > t0, "need t1 > t0");
    if (ticks.empty() || ticks.records.front().timestamp_ms >= t1)
        throw DataError("no trade at or before the requested interval");
    InforceSeries out;
    out.t0 = t0;
    out.prices.assign(static_cast<std::size_t>(t1 - t0), std::numeric_limits<double>::quiet_NaN());
    std::size_t idx = 0;
    bool have = false;
    double price = 0.0;
    for (std::int64_t t = t0; t < t1; ++t) {
        while (idx < ticks.size() && ticks.records[idx].timestamp_ms <= t) {
            price = ticks.records[idx].price;
            have = true;
            ++idx;
        }
        if (have) out.prices[static_cast<std::size_t>(t - t0)] = price;
    }
    return out;
}

struct PriceEvent {
    std::int64_t time_ms = 0;
    int direction = 0;  // +1 up, -1 down
};

/// Milliseconds whose in-force price differs from the previous defined one.
inline std::vector<PriceEvent> price_changing_events(const InforceSeries& series) {
    std::vector<PriceEvent> out;
    std::optional<double> last;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double p = series.prices[i];
        if (std::isnan(p)) continue;
        if (last && p != *last) out.push_back({series.t0 + static_cast<std::int64_t>(i), p > *last ? 1 : -1});
        last = p;
    }
    return out;
}

/// Follower price response per leader price-changing event at lags
/// -max_lag..max_lag milliseconds. Responses to down-moves are sign-flipped
/// so both directions accumulate together.
struct LagResponse {
    int max_lag = 0;
    std::vector<double> response;  // index l + max_lag
    std::size_t n_events = 0;      // events used
    std::size_t n_skipped = 0;     // events too close to the follower window edges

    [[nodiscard]] double at(int lag) const { return response.at(static_cast<std::size_t>(lag + max_lag)); }
};

inline LagResponse lagged_response(std::span<const PriceEvent> leader_events, const InforceSeries& follower,
                                   int max_lag = 30, unsigned threads = 0) {
    detail::require(max_lag >= 1, "max_lag must be >= 1");
    const auto width = static_cast<std::size_t>(2 * max_lag + 1);

    // Fixed chunking keeps the summation order, and so the result, independent
    // of the thread count.
    constexpr std::size_t kChunk = 4096;
    const std::size_t n_chunks = (leader_events.size() + kChunk - 1) / kChunk;
    struct Partial {
        std::vector<double> sum;
        std::size_t used = 0;
        std::size_t skipped = 0;
    };
    std::vector<Partial> partials(n_chunks);
    parallel_for(
        n_chunks,
        [&](std::size_t c) {
            auto& part = partials[c];
            part.sum.assign(width, 0.0);
            const std::size_t end = std::min(leader_events.size(), (c + 1) * kChunk);
            for (std::size_t e = c * kChunk; e < end; ++e) {
                const auto& ev = leader_events[e];
                // Lag -max_lag compares against the millisecond before it.
                if (ev.time_ms - max_lag - 1 < follower.t0 || ev.time_ms + max_lag >= follower.t1()) {
                    ++part.skipped;
                    continue;
                }
                ++part.used;
                for (int l = -max_lag; l <= max_lag; ++l) {
                    const std::int64_t u = ev.time_ms + l;
                    if (!follower.defined(u) || !follower.defined(u - 1)) continue;
                    const double delta = follower.at(u) - follower.at(u - 1);
                    if (delta != 0.0) part.sum[static_cast<std::size_t>(l + max_lag)] += ev.direction * delta;
                }
            }
        },
        threads);

    LagResponse out;
    out.max_lag = max_lag;
    out.response.assign(width, 0.0);
    for (const auto& part : partials) {
        for (std::size_t i = 0; i < width; ++i) out.response[i] += part.sum[i];
        out.n_events += part.used;
        out.n_skipped += part.skipped;
    }
    if (out.n_events > 0)
        for (auto& r : out.response) r /= static_cast<double>(out.n_events);
    return out;
}

/// Running sums of the response outward from lag 0 on each side. Lag 0
/// belongs to neither side. The ratio is plus/minus at t_f = max_lag and is
/// +infinity when the negative side sums to zero.
struct CumulativeResponse {
    std::vector<double> plus;   // plus[t_f - 1] = sum_{l=1..t_f} response(l)
    std::vector<double> minus;  // minus[t_f - 1] = sum_{l=1..t_f} response(-l)
    double ratio = 0.0;
};

inline CumulativeResponse cumulative_response(const LagResponse& resp) {
    CumulativeResponse out;
    double pos = 0.0, neg = 0.0;
    for (int tf = 1; tf <= resp.max_lag; ++tf) {
        pos += resp.at(tf);
        neg += resp.at(-tf);
        out.plus.push_back(pos);
        out.minus.push_back(neg);
    }
    out.ratio = neg == 0.0 ? std::numeric_limits<double>::infinity() : pos / neg;
    return out;
}

inline void write_lag_response_csv(std::ostream& out, const LagResponse& resp) {
    csv::Writer w(out);
    w.row("lag", "response");
    for (int l = -resp.max_lag; l <= resp.max_lag; ++l) w.row(l, resp.at(l));
}

inline void write_cumulative_csv(std::ostream& out, const CumulativeResponse& cum) {
    csv::Writer w(out);
    w.row("t_f", "plus", "minus");
    for (std::size_t i = 0; i < cum.plus.size(); ++i) w.row(i + 1, cum.plus[i], cum.minus[i]);
}

}  // namespace tmsmd
