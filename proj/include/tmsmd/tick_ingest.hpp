#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tmsmd/csv.hpp"
#include "tmsmd/duration_models.hpp"
#include "tmsmd/error.hpp"

namespace tmsmd {

struct TickRecord {
    std::int64_t timestamp_ms = 0;  // epoch milliseconds
    double price = 0.0;             // index points

    friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

/// Trades sorted by time. After aggregate_ms there is at most one record per
/// millisecond and timestamps are strictly increasing.
struct TickSeries {
    std::vector<TickRecord> records;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
    [[nodiscard]] bool empty() const noexcept { return records.empty(); }
};

struct ParsedTicks {
    std::vector<TickRecord> records;
    std::vector<std::string> warnings;
};

/// Reads a "timestamp_ms,price" CSV. Rows are stably sorted by timestamp
/// (with a warning) when the file is out of order.
inline ParsedTicks parse_ticks(std::istream& in) {
    const csv::Table table = csv::read_table(in);
    ParsedTicks out;
    if (table.header.empty()) return out;
    const auto ts_col = table.column("timestamp_ms");
    const auto px_col = table.column("price");
    if (ts_col < 0 || px_col < 0) throw ParseError(1, "header must contain timestamp_ms and price");
    out.records.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        long long ts = 0;
        double px = 0.0;
        if (!csv::parse_int(row[ts_col], ts))
            throw ParseError(table.line_numbers[r], "bad timestamp '" + row[ts_col] + "'");
        if (!csv::parse_double(row[px_col], px) || !(px > 0.0))
            throw ParseError(table.line_numbers[r], "bad price '" + row[px_col] + "'");
        out.records.push_back({ts, px});
    }
    const auto by_time = [](const TickRecord& a, const TickRecord& b) { return a.timestamp_ms < b.timestamp_ms; };
    if (!std::is_sorted(out.records.begin(), out.records.end(), by_time)) {
        std::stable_sort(out.records.begin(), out.records.end(), by_time);
        out.warnings.emplace_back("input timestamps were not sorted; rows were reordered");
    }
    return out;
}

inline ParsedTicks parse_ticks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_ticks(in);
}

/// Collapses trades sharing a millisecond to one record carrying the last
/// price of that millisecond (file order breaks ties).
inline TickSeries aggregate_ms(std::vector<TickRecord> raw) {
    std::stable_sort(raw.begin(), raw.end(),
                     [](const TickRecord& a, const TickRecord& b) { return a.timestamp_ms < b.timestamp_ms; });
    TickSeries out;
    out.records.reserve(raw.size());
    for (const auto& r : raw) {
        if (!out.records.empty() && out.records.back().timestamp_ms == r.timestamp_ms) out.records.back() = r;
        else out.records.push_back(r);
    }
    return out;
}

inline TickSeries aggregate_ms(const TickSeries& ticks) { return aggregate_ms(ticks.records); }

/// True when every price is a positive multiple of `tick_size`.
inline bool on_tick_grid(const TickSeries& ticks, double tick_size) {
    return std::all_of(ticks.records.begin(), ticks.records.end(), [&](const TickRecord& r) {
        const double steps = r.price / tick_size;
        return r.price > 0.0 && std::abs(steps - std::round(steps)) < 1e-9 * std::max(1.0, steps);
    });
}

// ---------------------------------------------------------------------------
// Returns and durations
// ---------------------------------------------------------------------------

inline DurationSeries durations(const TickSeries& ticks) {
    if (ticks.size() < 2) throw DataError("durations need at least two ticks");
    DurationSeries out;
    out.values.reserve(ticks.size() - 1);
    for (std::size_t i = 1; i < ticks.size(); ++i)
        out.values.push_back(static_cast<double>(ticks.records[i].timestamp_ms - ticks.records[i - 1].timestamp_ms));
    return out;
}

/// r_tau(t) = p(t) - p(t - tau) on the grid t0 + tau, t0 + 2 tau, ... where
/// t0 is the first trade time and p(t) is the price in force at t.
inline std::vector<double> clock_returns(const TickSeries& ticks, std::int64_t tau) {
    detail::require(tau >= 1, "tau must be >= 1 ms");
    if (ticks.empty()) throw DataError("clock returns of an empty tick series");
    const std::int64_t t0 = ticks.records.front().timestamp_ms;
    const std::int64_t t_end = ticks.records.back().timestamp_ms;
    if (t_end - t0 < tau) throw DataError("tick series spans less than one tau");
    std::vector<double> out;
    std::size_t idx = 0;
    double prev = ticks.records.front().price;
    for (std::int64_t t = t0 + tau; t <= t_end; t += tau) {
        while (idx + 1 < ticks.size() && ticks.records[idx + 1].timestamp_ms <= t) ++idx;
        const double now = ticks.records[idx].price;
        out.push_back(now - prev);
        prev = now;
    }
    return out;
}

/// r_m(n) = p(n) - p(n - m) for n = m, 2m, ... (non-overlapping).
inline std::vector<double> trade_returns(const TickSeries& ticks, std::size_t m) {
    detail::require(m >= 1, "m must be >= 1");
    if (ticks.size() < m + 1) throw DataError("trade returns need at least m + 1 ticks");
    std::vector<double> out;
    for (std::size_t n = m; n < ticks.size(); n += m)
        out.push_back(ticks.records[n].price - ticks.records[n - m].price);
    return out;
}

// ---------------------------------------------------------------------------
// News calendar and window slicing
// ---------------------------------------------------------------------------

struct NewsEvent {
    std::chrono::year_month_day date;
    std::int32_t seconds_of_day = 0;  // exchange-local announcement time
    std::string label;
    std::optional<double> consensus;
    std::optional<double> actual;
};

struct NewsCalendar {
    std::vector<NewsEvent> entries;

    [[nodiscard]] bool has(std::chrono::year_month_day date, std::int32_t seconds) const {
        return std::any_of(entries.begin(), entries.end(),
                           [&](const NewsEvent& e) { return e.date == date && e.seconds_of_day == seconds; });
    }
};

namespace detail {

inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
    long long y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!csv::parse_int(s.substr(0, 4), y) || !csv::parse_int(s.substr(5, 2), m) || !csv::parse_int(s.substr(8, 2), d))
        return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(y)), std::chrono::month(static_cast<unsigned>(m)),
                                    std::chrono::day(static_cast<unsigned>(d))};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

}  // namespace detail

/// "HH:MM" or "HH:MM:SS" to seconds after midnight.
inline std::optional<std::int32_t> parse_time_of_day(std::string_view s) {
    long long h = 0, m = 0, sec = 0;
    if (s.size() != 5 && s.size() != 8) return std::nullopt;
    if (s[2] != ':' || !csv::parse_int(s.substr(0, 2), h) || !csv::parse_int(s.substr(3, 2), m)) return std::nullopt;
    if (s.size() == 8 && (s[5] != ':' || !csv::parse_int(s.substr(6, 2), sec))) return std::nullopt;
    if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) return std::nullopt;
    return static_cast<std::int32_t>(h * 3600 + m * 60 + sec);
}

/// Reads "date,time,label,consensus,actual"; consensus and actual may be
/// empty or absent.
inline NewsCalendar parse_calendar(std::istream& in) {
    const csv::Table table = csv::read_table(in);
    NewsCalendar cal;
    if (table.header.empty()) return cal;
    const auto date_col = table.column("date");
    const auto time_col = table.column("time");
    if (date_col < 0 || time_col < 0) throw ParseError(1, "calendar header must contain date and time");
    const auto label_col = table.column("label");
    const auto cons_col = table.column("consensus");
    const auto act_col = table.column("actual");
    auto optional_number = [&](const std::vector<std::string>& row, std::ptrdiff_t col,
                               std::size_t line) -> std::optional<double> {
        if (col < 0 || row[col].empty()) return std::nullopt;
        double v = 0.0;
        if (!csv::parse_double(row[col], v)) throw ParseError(line, "bad number '" + row[col] + "'");
        return v;
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        const auto date = detail::parse_date(row[date_col]);
        if (!date) throw ParseError(line, "bad date '" + row[date_col] + "' (want YYYY-MM-DD)");
        const auto secs = parse_time_of_day(row[time_col]);
        if (!secs) throw ParseError(line, "bad time '" + row[time_col] + "' (want HH:MM)");
        if (cal.has(*date, *secs)) throw ParseError(line, "duplicate calendar entry for this date and time");
        cal.entries.push_back({*date, *secs, label_col >= 0 ? row[label_col] : std::string{},
                               optional_number(row, cons_col, line), optional_number(row, act_col, line)});
    }
    return cal;
}

inline NewsCalendar parse_calendar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_calendar(in);
}

enum class WindowKind { active, passive };

inline const char* to_string(WindowKind k) { return k == WindowKind::active ? "active" : "passive"; }

struct WindowSlice {
    WindowKind kind = WindowKind::passive;
    std::int64_t start_ms = 0;
    std::int64_t length_ms = 0;
    TickSeries ticks;        // trades in [start, start + length)
    bool truncated = false;  // window runs past the end of the data
    std::string label;
};

struct SliceOptions {
    std::int64_t window_ms = 1'000'000;
    /// Candidate announcement times (seconds after local midnight).
    std::vector<std::int32_t> candidate_times{8 * 3600 + 30 * 60, 10 * 3600};
    /// Exchange-local time = UTC + offset.
    std::int32_t utc_offset_minutes = 0;
};

/// Active slices start at each announcement on a date with data. Every
/// (date with data, candidate time) slot without an announcement yields a
/// passive slice, so no slot is ever both.
inline std::vector<WindowSlice> slice_windows(const TickSeries& ticks, const NewsCalendar& calendar,
                                              const SliceOptions& options = {}) {
    using namespace std::chrono;
    detail::require(options.window_ms >= 1, "window length must be >= 1 ms");
    std::vector<WindowSlice> out;
    if (ticks.empty()) return out;

    constexpr std::int64_t kDayMs = 86'400'000;
    const std::int64_t offset_ms = static_cast<std::int64_t>(options.utc_offset_minutes) * 60'000;
    auto local_day = [&](std::int64_t ts) {
        const std::int64_t local = ts + offset_ms;
        return local / kDayMs - (local % kDayMs < 0 ? 1 : 0);
    };
    std::set<std::int64_t> data_days;
    for (const auto& r : ticks.records) data_days.insert(local_day(r.timestamp_ms));
    const std::int64_t data_end = ticks.records.back().timestamp_ms;

    auto make_slice = [&](WindowKind kind, std::int64_t day, std::int32_t secs, std::string label) {
        WindowSlice s;
        s.kind = kind;
        s.start_ms = day * kDayMs + static_cast<std::int64_t>(secs) * 1000 - offset_ms;
        s.length_ms = options.window_ms;
        s.truncated = s.start_ms + options.window_ms > data_end + 1;
        s.label = std::move(label);
        const auto lo = std::lower_bound(ticks.records.begin(), ticks.records.end(), s.start_ms,
                                         [](const TickRecord& r, std::int64_t t) { return r.timestamp_ms < t; });
        const auto hi = std::lower_bound(lo, ticks.records.end(), s.start_ms + options.window_ms,
                                         [](const TickRecord& r, std::int64_t t) { return r.timestamp_ms < t; });
        s.ticks.records.assign(lo, hi);
        out.push_back(std::move(s));
    };

    for (std::int64_t day : data_days) {
        const year_month_day ymd{sys_days{std::chrono::days{day}}};
        std::vector<std::pair<std::int32_t, const NewsEvent*>> slots;
        for (const auto& e : calendar.entries)
            if (e.date == ymd) slots.emplace_back(e.seconds_of_day, &e);
        for (auto t : options.candidate_times)
            if (!calendar.has(ymd, t)) slots.emplace_back(t, nullptr);
        std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [secs, event] : slots)
            make_slice(event ? WindowKind::active : WindowKind::passive, day, secs, event ? event->label : "");
    }
    return out;
}

inline void write_ticks_csv(std::ostream& out, const TickSeries& ticks) {
    csv::Writer w(out);
    w.row("timestamp_ms", "price");
    for (const auto& r : ticks.records) w.row(static_cast<long long>(r.timestamp_ms), r.price);
}

}  // namespace tmsmd
