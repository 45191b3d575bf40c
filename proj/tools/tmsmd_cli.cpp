// tmsmd: simulation, estimation and diagnostics for inter-trade duration models.
//
// Every command writes its outputs plus manifest.json into --out (default
// $TMSMD_OUT_DIR, else the working directory). `tmsmd replay --manifest M`
// reruns a command from its manifest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "cli_support.hpp"
#include "tmsmd/json_io.hpp"
#include "tmsmd/tmsmd.hpp"

using namespace tmsmd;
using namespace tmsmd::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSupport = 3;
constexpr int kExitReplayMismatch = 4;

const char* const kDefaultTaus = "250,500,1000,5000,10000,30000";

std::vector<double> read_series(const std::string& path, const std::string& column) {
    if (path.empty()) throw UsageError("--input is required");
    auto values = csv::read_column(path, column);
    if (values.empty()) throw DataError(path + " has no data rows");
    return values;
}

TickSeries read_ticks(const std::string& path, std::vector<std::string>* warnings = nullptr) {
    auto parsed = parse_ticks(path);
    if (warnings)
        for (auto& w : parsed.warnings) warnings->push_back(path + ": " + w);
    return aggregate_ms(std::move(parsed.records));
}

std::vector<std::int64_t> parse_taus(const std::string& text) {
    std::vector<std::int64_t> out;
    for (double t : parse_number_list(text, "tau")) {
        if (t < 1.0 || t != std::floor(t)) throw UsageError("--tau values must be whole milliseconds >= 1");
        out.push_back(static_cast<std::int64_t>(t));
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 1) throw UsageError("point count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        out[static_cast<std::size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    out.back() = hi;
    return out;
}

std::vector<double> logspace(double lo, double hi, int points) {
    if (!(lo > 0.0)) throw UsageError("log spacing needs a positive lower bound");
    auto out = linspace(std::log(lo), std::log(hi), points);
    for (auto& v : out) v = std::exp(v);
    out.front() = lo;
    out.back() = hi;
    return out;
}

// ---------------------------------------------------------------------------
// Shared model flags
// ---------------------------------------------------------------------------

struct ModelFlags {
    std::string model = "tmsmd";
    double nu = 300.7;
    int kbar = 7;
    double lambda = 0.09660;
    double gamma_kbar = 0.5884;
    double b = 4.461;
    double m0 = 0.1386;
    double nu_max = 5866.0;

    void add(Options& o) {
        o.add("model", model, "exp | msmd | tmsmd")->check(CLI::IsMember({"exp", "msmd", "tmsmd"}));
        o.add("nu", nu, "exponential mean duration, ms");
        o.add("kbar", kbar, "number of MSMD frequencies");
        o.add("lambda", lambda, "MSMD baseline intensity");
        o.add("gamma-kbar", gamma_kbar, "top-frequency switching probability");
        o.add("b", b, "frequency spacing base");
        o.add("m0", m0, "low multiplier value");
        o.add("nu-max", nu_max, "truncating exponential mean, ms");
    }

    [[nodiscard]] DurationModelParams params() const {
        const MsmdParams msmd{kbar, lambda, gamma_kbar, b, m0};
        DurationModelParams p;
        if (model == "exp") p = ExpParams{nu};
        else if (model == "msmd") p = msmd;
        else p = TmsmdParams{msmd, nu_max};
        try {
            validate(p);
        } catch (const DomainError& e) {
            throw UsageError(std::string("invalid ") + model + " parameters: " + e.what());
        }
        return p;
    }
};

struct GaussianFlags {
    double mu = -7.103e-05;
    double sigma = 0.1196;
    double tick_size = kDefaultTickSize;

    void add(Options& o) {
        o.add("mu", mu, "mean trade-time return, index points");
        o.add("sigma", sigma, "trade-time return standard deviation, index points");
        o.add("tick-size", tick_size, "price grid for rounding trade returns");
    }

    [[nodiscard]] GaussianParams params() const {
        const GaussianParams g{mu, sigma};
        try {
            validate(g);
        } catch (const DomainError& e) {
            throw UsageError(std::string("invalid Gaussian parameters: ") + e.what());
        }
        if (!(tick_size > 0.0)) throw UsageError("--tick-size must be > 0");
        return g;
    }
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct Command {
    virtual ~Command() = default;
    virtual void run(OutputSet& out) = 0;
};

struct Ingest final : Command {
    std::string ticks, calendar, taus = kDefaultTaus, candidate_times = "08:30,10:00";
    int m = 1;
    std::int64_t window_ms = 1'000'000;
    int utc_offset_minutes = 0;
    double tick_size = kDefaultTickSize;

    explicit Ingest(Options& o) {
        o.add_path("ticks", ticks, "tick CSV with header timestamp_ms,price")->required();
        o.add_path("calendar", calendar, "news calendar CSV: date,time,label,consensus,actual");
        o.add("tau", taus, "clock-return horizons, ms (comma separated)");
        o.add("m", m, "trade-time return spacing");
        o.add("window-ms", window_ms, "news window length, ms");
        o.add("candidate-times", candidate_times, "local announcement times for passive windows");
        o.add("utc-offset-minutes", utc_offset_minutes, "exchange-local time minus UTC");
        o.add("tick-size", tick_size, "expected price grid (checked, not enforced)");
    }

    void run(OutputSet& out) override {
        auto parsed = parse_ticks(ticks);
        const std::size_t raw = parsed.records.size();
        json warnings = parsed.warnings;
        const TickSeries series = aggregate_ms(std::move(parsed.records));
        if (series.size() < 2) throw DataError(ticks + ": need at least two distinct-millisecond trades");

        OutTable t{{"timestamp_ms", "price"}, {}};
        for (const auto& r : series.records) t.add(static_cast<long long>(r.timestamp_ms), r.price);
        out.table("ticks", t);

        OutTable d{{"duration_ms"}, {}};
        for (double v : durations(series).values) d.add(v);
        out.table("durations", d);

        if (m < 1) throw UsageError("--m must be >= 1");
        OutTable tr{{"return"}, {}};
        if (series.size() >= static_cast<std::size_t>(m) + 1)
            for (double r : trade_returns(series, static_cast<std::size_t>(m))) tr.add(r);
        else
            warnings.push_back("fewer than m + 1 trades; no trade-time returns");
        out.table("trade_returns", tr);

        OutTable cr{{"tau", "index", "return"}, {}};
        const auto span = series.records.back().timestamp_ms - series.records.front().timestamp_ms;
        for (auto tau : parse_taus(taus)) {
            if (span < tau) {
                warnings.push_back("tau " + std::to_string(tau) + " exceeds the data span; skipped");
                continue;
            }
            const auto r = clock_returns(series, tau);
            for (std::size_t i = 0; i < r.size(); ++i) cr.add(static_cast<long long>(tau), i, r[i]);
        }
        out.table("clock_returns", cr);

        json summary{{"raw_records", raw},
                     {"aggregated_records", series.size()},
                     {"first_ms", series.records.front().timestamp_ms},
                     {"last_ms", series.records.back().timestamp_ms},
                     {"on_tick_grid", on_tick_grid(series, tick_size)}};

        if (!calendar.empty()) {
            SliceOptions so;
            so.window_ms = window_ms;
            so.utc_offset_minutes = utc_offset_minutes;
            so.candidate_times.clear();
            for (auto cell : csv::split(candidate_times)) {
                const auto secs = parse_time_of_day(cell);
                if (!secs) throw UsageError("bad --candidate-times entry '" + std::string(cell) + "'");
                so.candidate_times.push_back(*secs);
            }
            const auto slices = slice_windows(series, parse_calendar(calendar), so);
            OutTable w{{"kind", "start_ms", "length_ms", "n_ticks", "truncated", "label"}, {}};
            std::size_t active = 0, passive = 0, truncated = 0;
            for (const auto& s : slices) {
                w.add(std::string(to_string(s.kind)), static_cast<long long>(s.start_ms),
                      static_cast<long long>(s.length_ms), s.ticks.size(), s.truncated, s.label);
                (s.kind == WindowKind::active ? active : passive)++;
                truncated += s.truncated ? 1 : 0;
            }
            out.table("windows", w);
            summary["windows"] = {{"active", active}, {"passive", passive}, {"truncated", truncated}};
        }
        summary["warnings"] = warnings;
        out.document("ingest.json", summary);
    }
};

struct Simulate final : Command {
    ModelFlags model;
    GaussianFlags gauss;
    std::uint64_t n = 1000, n_windows = 0, seed = 1;
    double tau = 0.0, clamp_max_abs = 0.0, p0 = stats::kDefaultPriceRef;
    std::string support;
    bool latent = false, ticks = false;

    explicit Simulate(Options& o) {
        model.add(o);
        gauss.add(o);
        o.add("n", n, "number of durations (duration mode)");
        o.add("tau", tau, "clock window, ms; > 0 switches to clock-return mode");
        o.add("n-windows", n_windows, "complete windows to simulate (clock-return mode)");
        o.add("clamp-max-abs", clamp_max_abs, "clamp window returns to tick multiples within +-this (0 = off)");
        o.add_path("support", support, "CSV whose first column lists the admissible window returns");
        o.add("latent", latent, "also write the MSMD latent path");
        o.add("ticks", ticks, "also write a simulated tick file");
        o.add("p0", p0, "starting price of the simulated tick file");
        o.add("seed", seed, "master seed");
    }

    void run(OutputSet& out) override {
        const auto params = model.params();
        const auto g = gauss.params();
        if (tau > 0.0) {
            run_clock(out, params, g);
            return;
        }
        if (n == 0) throw UsageError("--n must be >= 1");
        const auto series = simulate_durations(params, n, seed);
        OutTable d{{"duration_ms"}, {}};
        for (double v : series.values) d.add(v);
        out.table("durations", d);

        if (latent) {
            const MsmdParams* mp = std::get_if<MsmdParams>(&params);
            if (const auto* tp = std::get_if<TmsmdParams>(&params)) mp = &tp->msmd;
            if (!mp) throw UsageError("--latent needs an msmd or tmsmd model");
            const auto path = intensity_path(*mp, n, seed);
            OutTable lp;
            lp.columns.push_back("step");
            for (int k = 1; k <= path.kbar; ++k) lp.columns.push_back("M_" + std::to_string(k));
            lp.columns.push_back("intensity");
            for (std::size_t i = 0; i < path.size(); ++i) {
                std::vector<Cell> row{static_cast<long long>(i)};
                for (int k = 0; k < path.kbar; ++k) row.emplace_back(path.multiplier(i, k));
                row.emplace_back(path.intensities[i]);
                lp.rows.push_back(std::move(row));
            }
            out.table("latent_path", lp);
        }

        if (ticks) {
            if (!(p0 > 0.0)) throw UsageError("--p0 must be > 0");
            const auto rets = simulate_tick_returns(g, n, seed, gauss.tick_size);
            OutTable tk{{"timestamp_ms", "price"}, {}};
            long long t = 0;
            double price = p0;
            tk.add(t, price);
            for (std::size_t i = 0; i < n; ++i) {
                t += static_cast<long long>(discretize_duration(series.values[i]));
                price = round_to_tick(price + rets[i], gauss.tick_size);
                tk.add(t, price);
            }
            out.table("ticks", tk);
        }

        const double max = *std::max_element(series.values.begin(), series.values.end());
        out.document("simulate.json", {{"model", model_name(params)},
                                       {"params", json_io::params_to_json(params)},
                                       {"n", n},
                                       {"seed", seed},
                                       {"mean", json_io::number(stats::mean(series.values))},
                                       {"dispersion_ratio", json_io::number(stats::dispersion_ratio(series.values))},
                                       {"max", json_io::number(max)}});
    }

    void run_clock(OutputSet& out, const DurationModelParams& params, const GaussianParams& g) const {
        if (n_windows == 0) throw UsageError("clock-return mode needs --n-windows >= 1");
        if (tau < 1.0) throw UsageError("--tau must be >= 1 ms");
        ClockSimulationOptions so;
        so.tick_size = gauss.tick_size;
        if (!support.empty()) so.support = SupportSet::from_values(csv::read_column(support));
        else if (clamp_max_abs > 0.0) so.support = SupportSet::from_range(clamp_max_abs, gauss.tick_size);
        const auto sim = simulate_clock_returns(params, g, tau, n_windows, seed, so);
        OutTable c{{"window_index", "count", "return"}, {}};
        for (std::size_t j = 0; j < sim.windows(); ++j) c.add(j, sim.counts[j], sim.window_returns[j]);
        out.table("compound", c);
        out.document("compound_summary.json", json_io::compound_sidecar(params, g, sim, seed));
    }
};

struct Estimate final : Command {
    std::string model = "exp", input, column, kbar_range, profile, profile_range;
    int kbar = 3, profile_points = 21, threads = 0, max_kbar = kDefaultMaxKbar;
    std::uint64_t bootstrap = 0, seed = 1;

    explicit Estimate(Options& o) {
        o.add("model", model, "exp | msmd | tmsmd | gaussian")
            ->check(CLI::IsMember({"exp", "msmd", "tmsmd", "gaussian"}));
        o.add_path("input", input, "CSV of durations (ms) or trade returns")->required();
        o.add("column", column, "column name (default: first column)");
        o.add("kbar", kbar, "MSMD frequencies");
        o.add("kbar-range", kbar_range, "fit every kbar in LO..HI and write kbar_table");
        o.add("bootstrap", bootstrap, "parametric bootstrap replicates (0 = none)");
        o.add("profile", profile, "parameter to profile");
        o.add("profile-range", profile_range, "LO..HI for the profile grid");
        o.add("profile-points", profile_points, "profile grid size");
        o.add("max-kbar", max_kbar, "state-space cap");
        o.add("threads", threads, "worker threads (0 = all cores)");
        o.add("seed", seed, "bootstrap seed");
    }

    void run(OutputSet& out) override {
        const auto data = read_series(input, column);
        if (model == "gaussian") {
            run_gaussian(out, data);
            return;
        }

        MsmdFitOptions fo;
        fo.max_kbar = max_kbar;
        fo.threads = static_cast<unsigned>(std::max(threads, 0));
        fo.seed = seed;

        FitResult fit;
        if (model == "exp") {
            fit = fit_exponential(data);
            fit.seed = seed;
        } else if (!kbar_range.empty()) {
            const auto range = parse_int_range(kbar_range, "kbar-range");
            const auto rows = select_kbar(data, range, fo);
            OutTable kt{{"kbar", "lambda", "gamma_kbar", "b", "m0", "loglik", "converged", "error"}, {}};
            const KbarRow* best = nullptr;
            for (const auto& row : rows) {
                if (row.fit) {
                    const auto& p = std::get<MsmdParams>(row.fit->params);
                    kt.add(row.kbar, p.lambda, p.gamma_kbar, p.b, p.m0, row.fit->loglik, row.fit->converged,
                           std::string{});
                    if (!best || row.fit->loglik > best->fit->loglik) best = &row;
                } else {
                    kt.rows.push_back({static_cast<long long>(row.kbar), "", "", "", "", "", "false", row.error});
                }
            }
            out.table("kbar_table", kt);
            if (!best) throw OptimizerError("no kbar in the range produced a fit", {}, 0.0);
            fit = *best->fit;
        } else {
            fit = fit_msmd(data, kbar, fo);
        }
        if (model == "tmsmd") {
            const double d_max = *std::max_element(data.begin(), data.end());
            const double total = std::accumulate(data.begin(), data.end(), 0.0);
            fit.params = TmsmdParams{std::get<MsmdParams>(fit.params), calibrate_nu_max(d_max, total)};
        }

        if (bootstrap > 0) {
            FitResult target = fit;
            if (const auto* t = std::get_if<TmsmdParams>(&fit.params)) {
                target.params = t->msmd;
                fit.warnings.push_back("nu_max is calibrated, not estimated; it has no standard error");
            }
            fo.starts.clear();
            const auto bs = bootstrap_se(target, data.size(), bootstrap, seed, fo);
            fit.se = bs.se;
            if (bs.degenerate) fit.warnings.push_back("bootstrap degenerate: fewer than two successful refits");
        }

        if (!fit.trace.empty()) {
            OutTable tr{{"iteration", "neg_loglik", "lambda", "gamma_kbar", "b", "m0"}, {}};
            const int k = std::holds_alternative<ExpParams>(fit.params) ? 0 : kbar_of(fit.params);
            for (std::size_t i = 0; i < fit.trace.size(); ++i) {
                const auto p = MsmdTransform::from_free(k, fit.trace[i].point);
                tr.add(i, fit.trace[i].objective, p.lambda, p.gamma_kbar, p.b, p.m0);
            }
            out.table("trace", tr);
        }

        if (!profile.empty()) {
            if (profile_range.empty()) throw UsageError("--profile needs --profile-range");
            const auto [lo, hi] = parse_range(profile_range, "profile-range");
            const auto grid = linspace(lo, hi, profile_points);
            OutTable pt{{"value", "loglik", "valid"}, {}};
            std::vector<ProfilePoint> points;
            try {
                points = profile_loglik(fit, data, profile, grid, max_kbar);
            } catch (const DomainError& e) {
                throw UsageError(e.what());
            }
            for (const auto& p : points) pt.add(p.value, p.loglik, p.valid);
            out.table("profile", pt);
        }

        out.document("fit.json", json_io::fit_to_json(fit));
    }

    static int kbar_of(const DurationModelParams& p) {
        if (const auto* m = std::get_if<MsmdParams>(&p)) return m->kbar;
        return std::get<TmsmdParams>(p).msmd.kbar;
    }

    void run_gaussian(OutputSet& out, const std::vector<double>& data) const {
        const auto g = fit_gaussian(data);
        json j{{"model", "gaussian"},
               {"params", json_io::gaussian_to_json(g)},
               {"loglik", json_io::number(gaussian_loglik(g, data))},
               {"se", nullptr},
               {"converged", true},
               {"n_obs", data.size()},
               {"seed", seed}};
        if (bootstrap > 0) {
            const auto bs = bootstrap_se(g, data.size(), bootstrap, seed, static_cast<unsigned>(std::max(threads, 0)));
            j["se"] = {{"mu", json_io::number(bs.se.at("mu"))}, {"sigma", json_io::number(bs.se.at("sigma"))}};
        }
        out.document("fit.json", j);
    }
};

struct Gof final : Command {
    std::string data, sim, taus = kDefaultTaus;
    bool clamp = false;
    int ljung_lags = 20;
    double kl_floor = -1.0;

    explicit Gof(Options& o) {
        o.add_path("data", data, "observed tick CSV")->required();
        o.add_path("sim", sim, "simulated tick CSV")->required();
        o.add("tau", taus, "clock-return horizons, ms (comma separated)");
        o.add("clamp", clamp, "set simulated returns outside the observed support to zero");
        o.add("ljung-lags", ljung_lags, "Ljung-Box lag count");
        o.add("kl-floor", kl_floor, "KL floor on model mass (negative = 1/(10 n_sim))");
    }

    void run(OutputSet& out) override {
        if (ljung_lags < 1) throw UsageError("--ljung-lags must be >= 1");
        json warnings = json::array();
        std::vector<std::string> w;
        const auto obs_ticks = read_ticks(data, &w);
        const auto sim_ticks = read_ticks(sim, &w);
        for (auto& s : w) warnings.push_back(s);
        if (obs_ticks.size() < 2 || sim_ticks.size() < 2) throw DataError("both tick files need at least two trades");

        OutTable chi{{"tau", "bins", "df", "chi2", "critical_5pct", "reject", "kl", "kl_floored_mass", "n_data",
                      "n_sim", "clamped", "clamped_fraction"},
                     {}};
        OutTable lb{{"tau", "series", "n", "q", "df", "critical_5pct", "reject"}, {}};
        const double lb_crit = stats::chi2_critical(0.95, ljung_lags);

        auto span = [](const TickSeries& t) { return t.records.back().timestamp_ms - t.records.front().timestamp_ms; };
        for (auto tau : parse_taus(taus)) {
            if (span(obs_ticks) < tau || span(sim_ticks) < tau) {
                warnings.push_back("tau " + std::to_string(tau) + " exceeds a data span; skipped");
                continue;
            }
            const auto ro = clock_returns(obs_ticks, tau);
            auto rs = clock_returns(sim_ticks, tau);
            const auto support = SupportSet::from_values(ro);
            ClampReport report;
            const auto outside = std::count_if(rs.begin(), rs.end(), [&](double r) { return !support.contains(r); });
            if (outside > 0) {
                if (!clamp)
                    throw SupportMismatch("tau " + std::to_string(tau) + ": " + std::to_string(outside) +
                                          " simulated returns fall outside the observed support; rerun with "
                                          "--clamp to set them to zero");
                auto clamped = clamp_to_support(rs, support);
                rs = std::move(clamped.returns);
                report = clamped.report;
            }
            const auto po = stats::DiscretePmf::from_samples(ro);
            const auto ps = stats::DiscretePmf::from_samples(rs);
            const auto c = stats::chi_squared_gof(po, ro.size(), ps, rs.size());
            const double crit = c.df >= 1 ? stats::chi2_critical(0.95, static_cast<int>(c.df))
                                          : std::numeric_limits<double>::quiet_NaN();
            const double floor = kl_floor < 0.0 ? 1.0 / (10.0 * static_cast<double>(rs.size())) : kl_floor;
            const auto kl = stats::kl_divergence(po, ps, floor);
            chi.add(static_cast<long long>(tau), po.size(), c.df, c.statistic, crit, c.statistic > crit,
                    kl.divergence, kl.floored_mass, ro.size(), rs.size(), report.adjusted, report.fraction);

            for (const auto& [name, series] : {std::pair<const char*, const std::vector<double>*>{"data", &ro}, {"sim", &rs}}) {
                const auto sq = stats::squared(*series);
                double q = std::numeric_limits<double>::quiet_NaN();
                if (sq.size() > static_cast<std::size_t>(ljung_lags)) {
                    try {
                        q = stats::ljung_box(sq, static_cast<std::size_t>(ljung_lags)).q;
                    } catch (const DataError&) {
                        // constant squared returns: no autocorrelation to test
                    }
                }
                lb.add(static_cast<long long>(tau), std::string(name), series->size(), q, ljung_lags, lb_crit,
                       std::isfinite(q) && q > lb_crit);
            }
        }
        out.table("gof_chi2", chi);
        out.table("gof_ljung_box", lb);
        out.document("gof.json", {{"warnings", warnings}, {"clamp", clamp}});
    }
};

struct Acf final : Command {
    std::string input, column;
    int max_lag = 50, ljung_lags = 20;
    bool squared = false;

    explicit Acf(Options& o) {
        o.add_path("input", input, "CSV with the series")->required();
        o.add("column", column, "column name (default: first column)");
        o.add("max-lag", max_lag, "largest lag");
        o.add("ljung-lags", ljung_lags, "Ljung-Box lag count");
        o.add("squared", squared, "use squared values");
    }

    void run(OutputSet& out) override {
        if (max_lag < 1 || ljung_lags < 1) throw UsageError("lags must be >= 1");
        auto x = read_series(input, column);
        if (squared) x = stats::squared(x);
        const auto lags = static_cast<std::size_t>(std::max(max_lag, ljung_lags));
        const auto r = stats::acf(x, lags);
        OutTable t{{"lag", "rho"}, {}};
        for (std::size_t l = 1; l <= static_cast<std::size_t>(max_lag); ++l) t.add(l, r.at(l));
        out.table("acf", t);
        const auto q = stats::ljung_box(r, static_cast<std::size_t>(ljung_lags));
        const double crit = stats::chi2_critical(0.95, ljung_lags);
        out.document("acf_summary.json", {{"n", r.n},
                                  {"squared", squared},
                                  {"ljung_box", {{"q", json_io::number(q.q)}, {"df", q.df},
                                                 {"critical_5pct", json_io::number(crit)}, {"reject", q.q > crit}}}});
    }
};

struct Qq final : Command {
    std::string input, column, dist = "normal", reference, reference_column;
    int points = 99;

    explicit Qq(Options& o) {
        o.add_path("input", input, "CSV with the sample")->required();
        o.add("column", column, "column name (default: first column)");
        o.add("dist", dist, "normal | exponential (fitted) | empirical (needs --reference)")
            ->check(CLI::IsMember({"normal", "exponential", "empirical"}));
        o.add_path("reference", reference, "reference sample for --dist empirical");
        o.add("reference-column", reference_column, "column of the reference sample");
        o.add("points", points, "number of quantile levels");
    }

    void run(OutputSet& out) override {
        if (points < 1) throw UsageError("--points must be >= 1");
        const auto x = read_series(input, column);
        std::function<double(double)> q;
        json info{{"dist", dist}};
        if (dist == "normal") {
            const auto g = fit_gaussian(x);
            q = [g](double p) { return g.mu + g.sigma * std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0); };
            info["params"] = json_io::gaussian_to_json(g);
        } else if (dist == "exponential") {
            const double m = stats::mean(x);
            if (!(m > 0.0)) throw DataError("exponential reference needs a positive mean");
            q = [m](double p) { return -m * std::log1p(-p); };
            info["params"] = {{"nu", json_io::number(m)}};
        } else {
            if (reference.empty()) throw UsageError("--dist empirical needs --reference");
            auto ref = read_series(reference, reference_column);
            std::sort(ref.begin(), ref.end());
            q = [ref = std::move(ref)](double p) { return stats::empirical_quantile(ref, p); };
        }
        OutTable t{{"theoretical_quantile", "sample_quantile"}, {}};
        for (const auto& p : stats::qq_points(x, q, static_cast<std::size_t>(points))) t.add(p.theoretical, p.sample);
        out.table("qq", t);
        out.document("qq_summary.json", info);
    }
};

struct Volmap final : Command {
    int kbar = 5, points = 25, threads = 0;
    double gamma_kbar = 0.5815, b = 4.269, m0 = 0.1395, nu_max = 5866.0;
    GaussianFlags gauss;
    std::string lambda_range = "0.01..6", spacing = "linear";
    double tau = 10000.0, price_ref = stats::kDefaultPriceRef, annual_ms = stats::kDefaultAnnualMs,
           query_tau_med = 8.0;
    std::uint64_t n_windows = 5200, seed = 1;

    explicit Volmap(Options& o) {
        o.add("kbar", kbar, "MSMD frequencies");
        o.add("gamma-kbar", gamma_kbar, "top-frequency switching probability");
        o.add("b", b, "frequency spacing base");
        o.add("m0", m0, "low multiplier value");
        o.add("nu-max", nu_max, "truncating exponential mean, ms");
        gauss.add(o);
        o.add("lambda", lambda_range, "baseline intensity sweep LO..HI within [0.01, 6]");
        o.add("points", points, "grid size");
        o.add("spacing", spacing, "linear | log")->check(CLI::IsMember({"linear", "log"}));
        o.add("tau", tau, "clock window, ms");
        o.add("n-windows", n_windows, "windows per grid point (>= 500)");
        o.add("price-ref", price_ref, "reference price for annualization");
        o.add("annual-ms", annual_ms, "trading milliseconds per year");
        o.add("query-tau-med", query_tau_med, "median duration at which to evaluate the fitted curve");
        o.add("threads", threads, "worker threads (0 = all cores)");
        o.add("seed", seed, "master seed");
    }

    void run(OutputSet& out) override {
        const auto [lo, hi] = parse_range(lambda_range, "lambda");
        const auto grid = spacing == "log" ? logspace(lo, hi, points) : linspace(lo, hi, points);
        const auto g = gauss.params();
        TmsmdParams base{{kbar, grid.front(), gamma_kbar, b, m0}, nu_max};
        VolCurveOptions vo{price_ref, annual_ms, gauss.tick_size, static_cast<unsigned>(std::max(threads, 0))};
        VolCurve curve;
        try {
            curve = vol_curve(base, g, grid, tau, n_windows, seed, vo);
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
        OutTable t{{"lambda", "tau_med", "vol"}, {}};
        for (const auto& p : curve.points) t.add(p.lambda, p.tau_med, p.vol_annualized);
        out.table("vol_curve", t);
        auto j = json_io::vol_curve_to_json(curve);
        if (curve.cubic) {
            const auto q = extrapolate_vol(curve, query_tau_med);
            j["query"] = {{"tau_med", json_io::number(query_tau_med)}, {"vol", json_io::number(q.vol)},
                          {"extrapolated", q.extrapolated}};
        } else {
            j["query"] = nullptr;
        }
        out.document("vol_curve_fit.json", j);
    }
};

struct Leadlag final : Command {
    std::string leader, follower, t0_text, t1_text;
    int max_lag = 30, threads = 0;

    explicit Leadlag(Options& o) {
        o.add_path("leader", leader, "leader tick CSV")->required();
        o.add_path("follower", follower, "follower tick CSV")->required();
        o.add("max-lag", max_lag, "largest lag, ms");
        o.add("t0", t0_text, "analysis start, epoch ms (default: overlap start)");
        o.add("t1", t1_text, "analysis end, epoch ms, exclusive (default: overlap end + 1)");
        o.add("threads", threads, "worker threads (0 = all cores)");
    }

    void run(OutputSet& out) override {
        if (max_lag < 1) throw UsageError("--max-lag must be >= 1");
        const auto lt = read_ticks(leader);
        const auto ft = read_ticks(follower);
        if (lt.empty() || ft.empty()) throw DataError("leader and follower need at least one trade each");
        auto bound = [](const std::string& text, std::int64_t fallback, const char* name) {
            if (text.empty()) return fallback;
            long long v = 0;
            if (!csv::parse_int(text, v)) throw UsageError(std::string("bad --") + name);
            return static_cast<std::int64_t>(v);
        };
        const std::int64_t t0 = bound(t0_text, std::max(lt.records.front().timestamp_ms, ft.records.front().timestamp_ms), "t0");
        const std::int64_t t1 =
            bound(t1_text, std::min(lt.records.back().timestamp_ms, ft.records.back().timestamp_ms) + 1, "t1");
        if (t1 <= t0) throw DataError("leader and follower do not overlap in time");

        const auto events = price_changing_events(inforce_series(lt, t0, t1));
        const auto resp = lagged_response(events, inforce_series(ft, t0, t1), max_lag,
                                          static_cast<unsigned>(std::max(threads, 0)));
        const auto cum = cumulative_response(resp);

        OutTable r{{"lag", "response"}, {}};
        for (int l = -max_lag; l <= max_lag; ++l) r.add(l, resp.at(l));
        out.table("lag_response", r);
        OutTable c{{"t_f", "plus", "minus"}, {}};
        for (std::size_t i = 0; i < cum.plus.size(); ++i) c.add(i + 1, cum.plus[i], cum.minus[i]);
        out.table("cumulative", c);
        out.document("leadlag.json", {{"ratio", json_io::number(cum.ratio)},
                                      {"t_f", max_lag},
                                      {"n_events", resp.n_events},
                                      {"n_skipped", resp.n_skipped},
                                      {"t0", t0},
                                      {"t1", t1},
                                      {"convention", "ratio = sum response(1..t_f) / sum response(-t_f..-1); "
                                                     "lag 0 excluded; inf when the denominator is 0"}});
    }
};

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

struct Registry {
    CLI::App app{"tmsmd: inter-trade duration models, subordinated returns and diagnostics"};
    std::map<std::string, std::unique_ptr<Options>> options;
    std::map<std::string, std::unique_ptr<Command>> commands;
    std::map<std::string, std::string> formats;
    std::string out_dir;
    std::string config_dummy;

    template <typename C>
    void add(const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        auto opts = std::make_unique<Options>(sub);
        commands[name] = std::make_unique<C>(*opts);
        formats[name] = "csv";
        opts->add("format", formats[name], "table format: csv | json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out", out_dir, "output directory (default $TMSMD_OUT_DIR or .)");
        sub->add_option("--config", config_dummy, "key=value file; flags on the command line win");
        options[name] = std::move(opts);
    }

    Registry() {
        app.require_subcommand(1);
        add<Ingest>("ingest", "aggregate ticks; extract durations, returns and news windows");
        add<Simulate>("simulate", "simulate durations or clock-time returns");
        add<Estimate>("estimate", "fit exp, msmd, tmsmd or gaussian");
        add<Gof>("gof", "chi-squared, KL and Ljung-Box comparison of two tick files");
        add<Acf>("acf", "sample autocorrelations and Ljung-Box");
        add<Qq>("qq", "Q-Q points");
        add<Volmap>("volmap", "trade-rate / volatility curve");
        add<Leadlag>("leadlag", "millisecond lead-lag response");
    }
};

/// Parses and runs one command. `args` excludes the program name.
int run_command(std::vector<std::string> args, const std::string& out_override) {
    Registry reg;
    try {
        if (!args.empty() && reg.options.count(args.front())) {
            const std::string name = args.front();
            std::vector<std::string> tail(args.begin() + 1, args.end());
            tail = expand_config(std::move(tail), *reg.options.at(name));
            args.assign(1, name);
            args.insert(args.end(), tail.begin(), tail.end());
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        reg.app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return reg.app.exit(e);
    } catch (const CLI::ParseError& e) {
        reg.app.exit(e);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const std::string name = reg.app.get_subcommands().front()->get_name();
    fs::path dir = !out_override.empty() ? fs::path(out_override)
                   : !reg.out_dir.empty() ? fs::path(reg.out_dir)
                                          : default_out_dir();
    try {
        OutputSet outputs(reg.formats.at(name));
        reg.commands.at(name)->run(outputs);
        const auto m = manifest(name, reg.options.at(name)->resolved(), outputs);
        outputs.document("manifest.json", m);
        outputs.commit(dir);
        for (const auto& [file, content] : outputs.files()) std::cout << (dir / file).string() << "\n";
        return kExitOk;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: invalid parameter: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SupportMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSupport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

int replay(const std::vector<std::string>& args) {
    CLI::App app{"rerun a command from its manifest"};
    std::string manifest_path, out;
    bool verify = false;
    app.add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
    app.add_option("--out", out, "output directory (default $TMSMD_OUT_DIR or .)");
    app.add_flag("--verify", verify, "compare every output with the manifest's recorded size and hash");
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    json m;
    try {
        std::ifstream in(manifest_path);
        if (!in) throw DataError("cannot open " + manifest_path);
        m = json::parse(in);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }

    Registry reg;
    const std::string command = m.value("command", "");
    if (!reg.options.count(command)) {
        std::cerr << "error: manifest names unknown command '" << command << "'\n";
        return kExitFailure;
    }
    std::vector<std::string> argv{command};
    for (const auto& [key, value] : m.at("config").items()) {
        const auto text = value.get<std::string>();
        if (reg.options.at(command)->is_flag(key)) {
            if (text == "true") argv.push_back("--" + key);
        } else if (!text.empty()) {
            argv.push_back("--" + key);
            argv.push_back(text);
        }
    }
    const fs::path dir = out.empty() ? default_out_dir() : fs::path(out);
    if (const int rc = run_command(argv, dir.string()); rc != kExitOk) return rc;
    if (!verify) return kExitOk;

    bool ok = true;
    for (const auto& f : m.at("outputs")) {
        const auto name = f.at("file").get<std::string>();
        std::ifstream in(dir / name, std::ios::binary);
        const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const bool same = in.good() || in.eof() ? content.size() == f.at("bytes").get<std::size_t>() &&
                                                      hex64(fnv1a64(content)) == f.at("fnv1a64").get<std::string>()
                                                : false;
        std::cerr << (same ? "identical " : "DIFFERS   ") << name << "\n";
        ok = ok && same;
    }
    return ok ? kExitOk : kExitReplayMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && args.front() == "replay") return replay({args.begin() + 1, args.end()});
    return run_command(args, "");
}
