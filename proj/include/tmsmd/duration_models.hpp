#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tmsmd/csv.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/random.hpp"

namespace tmsmd {

// ---------------------------------------------------------------------------
// Parameter sets
// ---------------------------------------------------------------------------

/// Exponential (Poisson-arrival) durations with mean `nu` milliseconds.
struct ExpParams {
    double nu = 1.0;

    /// Arrival intensity per millisecond.
    [[nodiscard]] double gamma() const noexcept { return 1.0 / nu; }

    static ExpParams from_gamma(double gamma) { return ExpParams{1.0 / gamma}; }
};

/// Markov-switching multifractal duration model.
///
/// Durations are d_i = e_i / lambda_i with e_i ~ Exp(1) and
/// lambda_i = lambda * prod_k M_{k,i}. Each multiplier M_k takes the values
/// m0 and 2 - m0 with equal probability and is redrawn at step i with
/// probability gamma_k, where the gamma_k are tied to gamma_kbar through the
/// spacing base b (see gamma_ladder).
struct MsmdParams {
    int kbar = 1;
    double lambda = 1.0;
    double gamma_kbar = 0.5;
    double b = 2.0;
    double m0 = 1.0;

    [[nodiscard]] double high_multiplier() const noexcept { return 2.0 - m0; }
};

/// MSMD truncated by an independent exponential with mean `nu_max`.
struct TmsmdParams {
    MsmdParams msmd;
    double nu_max = 1.0;
};

using DurationModelParams = std::variant<ExpParams, MsmdParams, TmsmdParams>;

inline void validate(const ExpParams& p) {
    detail::require(std::isfinite(p.nu) && p.nu > 0.0, "exponential mean nu must be finite and > 0");
}

inline void validate(const MsmdParams& p) {
    detail::require(p.kbar >= 1, "kbar must be >= 1");
    detail::require(std::isfinite(p.lambda) && p.lambda > 0.0, "lambda must be finite and > 0");
    detail::require(p.gamma_kbar > 0.0 && p.gamma_kbar < 1.0, "gamma_kbar must lie in (0, 1)");
    detail::require(std::isfinite(p.b) && p.b > 1.0, "b must be finite and > 1");
    detail::require(p.m0 > 0.0 && p.m0 <= 2.0, "m0 must lie in (0, 2]");
}

inline void validate(const TmsmdParams& p) {
    validate(p.msmd);
    detail::require(std::isfinite(p.nu_max) && p.nu_max > 0.0, "nu_max must be finite and > 0");
}

inline void validate(const DurationModelParams& p) {
    std::visit([](const auto& q) { validate(q); }, p);
}

inline std::string model_name(const DurationModelParams& p) {
    struct {
        std::string operator()(const ExpParams&) const { return "exp"; }
        std::string operator()(const MsmdParams&) const { return "msmd"; }
        std::string operator()(const TmsmdParams&) const { return "tmsmd"; }
    } name;
    return std::visit(name, p);
}

// ---------------------------------------------------------------------------
// Series types
// ---------------------------------------------------------------------------

struct SeriesOrigin {
    enum class Kind { observed, simulated };
    Kind kind = Kind::observed;
    std::string model;       // empty for observed data
    std::uint64_t seed = 0;  // meaningful only when simulated

    static SeriesOrigin observed() { return {}; }
    static SeriesOrigin simulated(std::string model, std::uint64_t seed) {
        return {Kind::simulated, std::move(model), seed};
    }
};

/// Positive inter-trade durations in milliseconds.
struct DurationSeries {
    std::vector<double> values;
    SeriesOrigin origin;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool empty() const noexcept { return values.empty(); }
};

/// Latent multiplier states and composite intensities, one row per step.
struct LatentPath {
    int kbar = 0;
    std::vector<double> multipliers;  // row-major, size() * kbar entries
    std::vector<double> intensities;

    [[nodiscard]] std::size_t size() const noexcept { return intensities.size(); }
    [[nodiscard]] double multiplier(std::size_t step, int k) const {
        return multipliers[step * static_cast<std::size_t>(kbar) + static_cast<std::size_t>(k)];
    }
};

// ---------------------------------------------------------------------------
// Switching probabilities
// ---------------------------------------------------------------------------

/// gamma_k = 1 - (1 - gamma_kbar)^(b^(k - kbar)) for k = 1..kbar.
inline std::vector<double> gamma_ladder(double gamma_kbar, double b, int kbar) {
    validate(MsmdParams{kbar, 1.0, gamma_kbar, b, 1.0});
    std::vector<double> gammas(static_cast<std::size_t>(kbar));
    const double log_stay = std::log1p(-gamma_kbar);
    for (int k = 1; k < kbar; ++k) {
        const double exponent = std::pow(b, static_cast<double>(k - kbar));
        gammas[static_cast<std::size_t>(k - 1)] = -std::expm1(exponent * log_stay);
    }
    gammas.back() = gamma_kbar;
    return gammas;
}

inline std::vector<double> gamma_ladder(const MsmdParams& p) { return gamma_ladder(p.gamma_kbar, p.b, p.kbar); }

// ---------------------------------------------------------------------------
// Streaming generators
// ---------------------------------------------------------------------------

/// Stand-alone exponential durations with mean `nu`.
class ExponentialGenerator {
public:
    ExponentialGenerator(double nu, std::uint64_t seed, Stream stream = Stream::exponential)
        : nu_(nu), rng_(seed, stream) {
        validate(ExpParams{nu});
    }

    double next() noexcept { return nu_ * rng_.exponential(); }

private:
    double nu_;
    Rng rng_;
};

/// MSMD durations. Step 0 uses the initial (stationary) draw of the
/// multipliers; every later step first applies the switching rule. A switch
/// redraws the multiplier from {m0, 2 - m0}, so it may keep its value.
class MsmdGenerator {
public:
    MsmdGenerator(const MsmdParams& params, std::uint64_t seed)
        : params_(params), rng_(seed, Stream::msmd) {
        validate(params_);
        gammas_ = gamma_ladder(params_);
        states_.resize(static_cast<std::size_t>(params_.kbar));
        for (auto& m : states_) m = draw_multiplier();
    }

    double next() {
        if (started_) {
            for (std::size_t k = 0; k < states_.size(); ++k) {
                if (rng_.bernoulli(gammas_[k])) states_[k] = draw_multiplier();
            }
        }
        started_ = true;
        intensity_ = params_.lambda;
        for (double m : states_) intensity_ *= m;
        return rng_.exponential() / intensity_;
    }

    /// Multipliers in force for the most recent draw.
    [[nodiscard]] const std::vector<double>& states() const noexcept { return states_; }
    [[nodiscard]] double intensity() const noexcept { return intensity_; }

private:
    double draw_multiplier() { return rng_.coin() ? params_.high_multiplier() : params_.m0; }

    MsmdParams params_;
    Rng rng_;
    std::vector<double> gammas_;
    std::vector<double> states_;
    double intensity_ = 0.0;
    bool started_ = false;
};

/// min(MSMD, Exp(nu_max)) with the two components on independent sub-streams.
/// The MSMD component reproduces MsmdGenerator under the same seed.
class TmsmdGenerator {
public:
    TmsmdGenerator(const TmsmdParams& params, std::uint64_t seed)
        : msmd_(params.msmd, seed), cap_(params.nu_max, seed, Stream::truncation) {
        validate(params);
    }

    double next() {
        const double a = msmd_.next();
        const double c = cap_.next();
        return std::min(a, c);
    }

    [[nodiscard]] const MsmdGenerator& msmd() const noexcept { return msmd_; }

private:
    MsmdGenerator msmd_;
    ExponentialGenerator cap_;
};

/// Type-erased generator over any DurationModelParams.
class DurationSampler {
public:
    DurationSampler(const DurationModelParams& params, std::uint64_t seed)
        : gen_(make(params, seed)) {}

    double next() {
        return std::visit([](auto& g) { return g.next(); }, gen_);
    }

private:
    using Variant = std::variant<ExponentialGenerator, MsmdGenerator, TmsmdGenerator>;

    static Variant make(const DurationModelParams& params, std::uint64_t seed) {
        validate(params);
        struct {
            std::uint64_t seed;
            Variant operator()(const ExpParams& p) const { return ExponentialGenerator(p.nu, seed); }
            Variant operator()(const MsmdParams& p) const { return MsmdGenerator(p, seed); }
            Variant operator()(const TmsmdParams& p) const { return TmsmdGenerator(p, seed); }
        } factory{seed};
        return std::visit(factory, params);
    }

    Variant gen_;
};

// ---------------------------------------------------------------------------
// Batch simulators
// ---------------------------------------------------------------------------

namespace detail {
inline void require_nonempty_request(std::size_t n) {
    if (n == 0) throw DomainError("simulation request for zero durations");
}
}  // namespace detail

struct MsmdSimulation {
    DurationSeries durations;
    LatentPath path;
};

inline DurationSeries simulate_exponential(const ExpParams& params, std::size_t n, std::uint64_t seed) {
    detail::require_nonempty_request(n);
    ExponentialGenerator gen(params.nu, seed);
    DurationSeries out{{}, SeriesOrigin::simulated("exp", seed)};
    out.values.resize(n);
    for (auto& d : out.values) d = gen.next();
    return out;
}

inline MsmdSimulation simulate_msmd(const MsmdParams& params, std::size_t n, std::uint64_t seed) {
    detail::require_nonempty_request(n);
    MsmdGenerator gen(params, seed);
    MsmdSimulation sim;
    sim.durations.origin = SeriesOrigin::simulated("msmd", seed);
    sim.durations.values.resize(n);
    sim.path.kbar = params.kbar;
    sim.path.intensities.resize(n);
    sim.path.multipliers.reserve(n * static_cast<std::size_t>(params.kbar));
    for (std::size_t i = 0; i < n; ++i) {
        sim.durations.values[i] = gen.next();
        sim.path.intensities[i] = gen.intensity();
        sim.path.multipliers.insert(sim.path.multipliers.end(), gen.states().begin(), gen.states().end());
    }
    return sim;
}

inline LatentPath intensity_path(const MsmdParams& params, std::size_t n, std::uint64_t seed) {
    return simulate_msmd(params, n, seed).path;
}

inline DurationSeries simulate_tmsmd(const TmsmdParams& params, std::size_t n, std::uint64_t seed) {
    detail::require_nonempty_request(n);
    TmsmdGenerator gen(params, seed);
    DurationSeries out{{}, SeriesOrigin::simulated("tmsmd", seed)};
    out.values.resize(n);
    for (auto& d : out.values) d = gen.next();
    return out;
}

inline DurationSeries simulate_durations(const DurationModelParams& params, std::size_t n, std::uint64_t seed) {
    struct {
        std::size_t n;
        std::uint64_t seed;
        DurationSeries operator()(const ExpParams& p) const { return simulate_exponential(p, n, seed); }
        DurationSeries operator()(const MsmdParams& p) const { return simulate_msmd(p, n, seed).durations; }
        DurationSeries operator()(const TmsmdParams& p) const { return simulate_tmsmd(p, n, seed); }
    } dispatch{n, seed};
    return std::visit(dispatch, params);
}

// ---------------------------------------------------------------------------
// Expected maximum of exponentials and nu_max calibration
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kExactHarmonicLimit = 10'000'000;

/// H_n = sum_{i=1..n} 1/i. Exact (summed smallest-first) up to 1e7 terms,
/// asymptotic expansion beyond.
inline double harmonic_number(std::uint64_t n) {
    if (n <= kExactHarmonicLimit) {
        double sum = 0.0;
        for (std::uint64_t i = n; i >= 1; --i) sum += 1.0 / static_cast<double>(i);
        return sum;
    }
    const double x = static_cast<double>(n);
    return std::log(x) + 0.5772156649015329 + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
}

/// E[max of n i.i.d. Exp(mean nu)] = nu * H_n.
inline double expected_max_exponential(double nu, std::uint64_t n) {
    detail::require(std::isfinite(nu) && nu > 0.0, "nu must be finite and > 0");
    detail::require(n >= 1, "n must be >= 1");
    return nu * harmonic_number(n);
}

/// (nu * H_[T/nu] - d_max)^2, with [.] rounding half away from zero.
inline double nu_max_objective(double nu, double d_max, double total_time_ms) {
    const double count = std::round(total_time_ms / nu);
    if (count < 1.0) return std::numeric_limits<double>::infinity();
    const double gap = expected_max_exponential(nu, static_cast<std::uint64_t>(count)) - d_max;
    return gap * gap;
}

/// Chooses nu so that the expected maximum of the ~T/nu exponential draws
/// falling in a sample of length T matches the observed maximal duration.
/// Log-spaced grid over [1, T/10] followed by golden-section refinement of
/// the best grid cell.
inline double calibrate_nu_max(double d_max, double total_time_ms, int max_refine_iterations = 200) {
    detail::require(std::isfinite(d_max) && d_max > 0.0, "d_max must be finite and > 0");
    detail::require(std::isfinite(total_time_ms) && total_time_ms > d_max, "total time must exceed d_max");

    auto objective = [&](double nu) { return nu_max_objective(nu, d_max, total_time_ms); };

    constexpr int kGrid = 200;
    const double lo = 1.0;
    const double hi = std::max(total_time_ms / 10.0, 1.0 + 1e-9);
    std::vector<double> grid(kGrid);
    for (int i = 0; i < kGrid; ++i)
        grid[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (kGrid - 1));

    int best = 0;
    double best_value = objective(grid[0]);
    for (int i = 1; i < kGrid; ++i) {
        const double v = objective(grid[i]);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }
    double best_nu = grid[best];

    double a = grid[std::max(best - 1, 0)];
    double c = grid[std::min(best + 1, kGrid - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = c - inv_phi * (c - a);
    double x2 = a + inv_phi * (c - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    bool converged = false;
    for (int it = 0; it < max_refine_iterations; ++it) {
        if (c - a <= 1e-10 * std::max(1.0, std::abs(x1))) {
            converged = true;
            break;
        }
        if (f1 <= f2) {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - inv_phi * (c - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (c - a);
            f2 = objective(x2);
        }
        for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
            if (f < best_value) {
                best_value = f;
                best_nu = x;
            }
        }
    }
    if (!converged)
        throw OptimizerError("nu_max refinement did not converge", {best_nu}, best_value);
    return best_nu;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

inline void write_durations_csv(std::ostream& out, const DurationSeries& series) {
    csv::Writer w(out);
    w.row("duration_ms");
    for (double d : series.values) w.row(d);
}

inline void write_latent_path_csv(std::ostream& out, const LatentPath& path) {
    out << "step";
    for (int k = 1; k <= path.kbar; ++k) out << ",M_" << k;
    out << ",intensity\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
        out << i;
        for (int k = 0; k < path.kbar; ++k) out << ',' << csv::format(path.multiplier(i, k));
        out << ',' << csv::format(path.intensities[i]) << '\n';
    }
}

}  // namespace tmsmd
