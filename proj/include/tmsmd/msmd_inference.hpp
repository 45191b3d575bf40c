#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmsmd/duration_models.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/optimize.hpp"
#include "tmsmd/parallel.hpp"

namespace tmsmd {

// ---------------------------------------------------------------------------
// Latent state space
// ---------------------------------------------------------------------------

inline constexpr int kDefaultMaxKbar = 12;

/// Enumeration of the 2^kbar joint multiplier states. Bit k-1 of a state
/// index set means M_k = 2 - m0, clear means M_k = m0.
struct StateSpace {
    int kbar = 0;
    double lambda = 0.0;
    double m0 = 1.0;
    std::vector<double> intensities;  // lambda * prod_k M_k per state
    std::vector<double> gammas;       // switching probability per frequency
    /// transitions[k][from][to] for frequency k+1; index 0 = m0, 1 = 2 - m0.
    std::vector<std::array<std::array<double, 2>, 2>> transitions;

    [[nodiscard]] std::size_t size() const noexcept { return intensities.size(); }

    [[nodiscard]] std::vector<double> multipliers(std::size_t state) const {
        std::vector<double> out(static_cast<std::size_t>(kbar));
        for (int k = 0; k < kbar; ++k) out[static_cast<std::size_t>(k)] = (state >> k) & 1U ? 2.0 - m0 : m0;
        return out;
    }
};

inline StateSpace build_state_space(const MsmdParams& params, int max_kbar = kDefaultMaxKbar) {
    validate(params);
    if (params.kbar > max_kbar)
        throw ResourceError("kbar = " + std::to_string(params.kbar) + " exceeds the state-space cap of " +
                            std::to_string(max_kbar));
    StateSpace space;
    space.kbar = params.kbar;
    space.lambda = params.lambda;
    space.m0 = params.m0;
    space.gammas = gamma_ladder(params);
    const std::size_t count = std::size_t{1} << params.kbar;
    space.intensities.resize(count);
    for (std::size_t s = 0; s < count; ++s) {
        double intensity = params.lambda;
        for (int k = 0; k < params.kbar; ++k) intensity *= (s >> k) & 1U ? params.high_multiplier() : params.m0;
        space.intensities[s] = intensity;
    }
    // A switch event redraws uniformly from the two values, so a switch lands
    // on the current value half the time.
    for (double g : space.gammas) {
        const double cross = 0.5 * g;
        const double stay = (1.0 - g) + 0.5 * g;
        space.transitions.push_back({{{stay, cross}, {cross, stay}}});
    }
    return space;
}

// ---------------------------------------------------------------------------
// Forward filter
// ---------------------------------------------------------------------------

/// Discrete-state forward filter over the MSMD latent chain. The joint
/// transition is applied as kbar independent 2x2 updates, so one step costs
/// O(kbar * 2^kbar). Normalizers are accumulated in log space.
class MsmdFilter {
public:
    explicit MsmdFilter(const MsmdParams& params, int max_kbar = kDefaultMaxKbar)
        : space_(build_state_space(params, max_kbar)) {
        const std::size_t n = space_.size();
        log_intensities_.resize(n);
        for (std::size_t s = 0; s < n; ++s) log_intensities_[s] = std::log(space_.intensities[s]);
        posterior_.assign(n, 1.0 / static_cast<double>(n));
        log_emission_.resize(n);
    }

    /// Consumes one duration; returns log p(d_i | d_1..d_{i-1}).
    double step(double duration) {
        if (!(duration > 0.0) || !std::isfinite(duration))
            throw DataError("durations must be finite and > 0 (got " + csv::format(duration) + ")");
        if (steps_ > 0) predict();
        ++steps_;

        const std::size_t n = space_.size();
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < n; ++s) {
            log_emission_[s] = log_intensities_[s] - space_.intensities[s] * duration;
            peak = std::max(peak, log_emission_[s]);
        }
        double norm = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            posterior_[s] *= std::exp(log_emission_[s] - peak);
            norm += posterior_[s];
        }
        if (!(norm > 0.0) || !std::isfinite(norm)) throw DataError("filter normalizer is not finite");
        const double inv = 1.0 / norm;
        for (auto& p : posterior_) p *= inv;
        return peak + std::log(norm);
    }

    /// Filtered state probabilities after the last step.
    [[nodiscard]] std::span<const double> posterior() const noexcept { return posterior_; }
    [[nodiscard]] const StateSpace& state_space() const noexcept { return space_; }

private:
    void predict() {
        const std::size_t n = space_.size();
        for (int k = 0; k < space_.kbar; ++k) {
            const auto& t = space_.transitions[static_cast<std::size_t>(k)];
            const std::size_t bit = std::size_t{1} << k;
            for (std::size_t s = 0; s < n; ++s) {
                if (s & bit) continue;
                const double low = posterior_[s];
                const double high = posterior_[s | bit];
                posterior_[s] = t[0][0] * low + t[1][0] * high;
                posterior_[s | bit] = t[0][1] * low + t[1][1] * high;
            }
        }
    }

    StateSpace space_;
    std::vector<double> log_intensities_;
    std::vector<double> posterior_;
    std::vector<double> log_emission_;
    std::size_t steps_ = 0;
};

/// Exact log-likelihood of the durations under the MSMD model, with the
/// latent chain started from its uniform stationary distribution.
inline double msmd_loglik(const MsmdParams& params, std::span<const double> durations,
                          int max_kbar = kDefaultMaxKbar) {
    if (durations.empty()) throw DataError("msmd_loglik needs at least one duration");
    MsmdFilter filter(params, max_kbar);
    double total = 0.0;
    for (double d : durations) total += filter.step(d);
    return total;
}

inline double msmd_loglik(const MsmdParams& params, const DurationSeries& durations,
                          int max_kbar = kDefaultMaxKbar) {
    return msmd_loglik(params, std::span<const double>(durations.values), max_kbar);
}

/// sum(ln gamma - gamma * d) for exponential durations with mean nu.
inline double exponential_loglik(double nu, std::span<const double> durations) {
    validate(ExpParams{nu});
    const double gamma = 1.0 / nu;
    const double log_gamma = std::log(gamma);
    double total = 0.0;
    for (double d : durations) total += log_gamma - gamma * d;
    return total;
}

// ---------------------------------------------------------------------------
// Fit results
// ---------------------------------------------------------------------------

struct GaussianParams {
    double mu = 0.0;
    double sigma = 1.0;
};

inline void validate(const GaussianParams& g) {
    detail::require(std::isfinite(g.mu), "mu must be finite");
    detail::require(std::isfinite(g.sigma) && g.sigma > 0.0, "sigma must be finite and > 0");
}

struct FitResult {
    DurationModelParams params;
    double loglik = -std::numeric_limits<double>::infinity();
    std::optional<std::map<std::string, double>> se;  // set by bootstrap only
    std::vector<optimize::TracePoint> trace;
    bool converged = false;
    std::size_t n_obs = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

/// Named parameter values of a model, in reporting order.
inline std::vector<std::pair<std::string, double>> named_params(const DurationModelParams& params) {
    struct {
        std::vector<std::pair<std::string, double>> operator()(const ExpParams& p) const {
            return {{"nu", p.nu}, {"gamma", p.gamma()}};
        }
        std::vector<std::pair<std::string, double>> operator()(const MsmdParams& p) const {
            return {{"lambda", p.lambda}, {"gamma_kbar", p.gamma_kbar}, {"b", p.b}, {"m0", p.m0}};
        }
        std::vector<std::pair<std::string, double>> operator()(const TmsmdParams& p) const {
            auto out = (*this)(p.msmd);
            out.emplace_back("nu_max", p.nu_max);
            return out;
        }
    } names;
    return std::visit(names, params);
}

// ---------------------------------------------------------------------------
// Closed-form fits
// ---------------------------------------------------------------------------

namespace detail {
inline void require_positive_durations(std::span<const double> durations) {
    if (durations.empty()) throw DataError("no durations supplied");
    for (double d : durations)
        if (!(d > 0.0) || !std::isfinite(d)) throw DataError("durations must be finite and > 0");
}
}  // namespace detail

/// Exponential MLE: nu = sample mean.
inline FitResult fit_exponential(std::span<const double> durations) {
    detail::require_positive_durations(durations);
    const double n = static_cast<double>(durations.size());
    const double nu = std::accumulate(durations.begin(), durations.end(), 0.0) / n;
    FitResult fit;
    fit.params = ExpParams{nu};
    fit.loglik = n * std::log(1.0 / nu) - n;
    fit.converged = true;
    fit.n_obs = durations.size();
    return fit;
}

inline FitResult fit_exponential(const DurationSeries& durations) {
    return fit_exponential(std::span<const double>(durations.values));
}

/// Gaussian MLE: sample mean and standard deviation with divisor n.
inline GaussianParams fit_gaussian(std::span<const double> returns) {
    if (returns.size() < 2) throw DataError("fit_gaussian needs at least two observations");
    const double n = static_cast<double>(returns.size());
    const double mu = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : returns) ss += (r - mu) * (r - mu);
    const double sigma = std::sqrt(ss / n);
    if (!(sigma > 0.0)) throw DataError("returns have zero variance; sigma must be > 0");
    return {mu, sigma};
}

inline double gaussian_loglik(const GaussianParams& g, std::span<const double> returns) {
    validate(g);
    const double log_norm = -0.5 * std::log(2.0 * 3.14159265358979323846 * g.sigma * g.sigma);
    double total = 0.0;
    for (double r : returns) {
        const double z = (r - g.mu) / g.sigma;
        total += log_norm - 0.5 * z * z;
    }
    return total;
}

// ---------------------------------------------------------------------------
// MSMD maximum likelihood
// ---------------------------------------------------------------------------

struct MsmdFitOptions {
    int max_kbar = kDefaultMaxKbar;
    double f_tolerance = 1e-6;
    std::size_t max_evaluations = 0;  // per start; 0 = 500 * 4
    double initial_step = 0.5;
    /// Explicit starting points. When empty, the fixed 8-point design is used.
    std::vector<MsmdParams> starts;
    unsigned threads = 0;
    std::uint64_t seed = 0;  // recorded in the result
};

/// Unconstrained coordinates: (log lambda, logit gamma_kbar, log(b - 1), logit(m0 / 2)).
struct MsmdTransform {
    static std::vector<double> to_free(const MsmdParams& p) {
        auto logit = [](double x) { return std::log(x / (1.0 - x)); };
        return {std::log(p.lambda), logit(p.gamma_kbar), std::log(p.b - 1.0), logit(p.m0 / 2.0)};
    }

    static MsmdParams from_free(int kbar, const std::vector<double>& x) {
        auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        return {kbar, std::exp(x[0]), logistic(x[1]), 1.0 + std::exp(x[2]), 2.0 * logistic(x[3])};
    }
};

inline bool msmd_params_in_domain(const MsmdParams& p) {
    return p.kbar >= 1 && std::isfinite(p.lambda) && p.lambda > 0.0 && p.gamma_kbar > 0.0 && p.gamma_kbar < 1.0 &&
           std::isfinite(p.b) && p.b > 1.0 && p.m0 > 0.0 && p.m0 <= 2.0;
}

/// Maps m0 into (0, 1]; the likelihood is symmetric under m0 <-> 2 - m0.
inline MsmdParams canonicalize(MsmdParams p) {
    if (p.m0 > 1.0) p.m0 = 2.0 - p.m0;
    return p;
}

/// Fixed multi-start design: every combination of gamma_kbar in {0.2, 0.7},
/// b in {1.5, 4}, m0 in {0.15, 0.6}. lambda is set so that the model's mean
/// log-duration matches the sample.
inline std::vector<MsmdParams> default_msmd_starts(std::span<const double> durations, int kbar) {
    double mean_log = 0.0;
    for (double d : durations) mean_log += std::log(d);
    mean_log /= static_cast<double>(durations.size());
    constexpr double euler_gamma = 0.5772156649015329;
    std::vector<MsmdParams> starts;
    for (double g : {0.2, 0.7})
        for (double b : {1.5, 4.0})
            for (double m0 : {0.15, 0.6}) {
                // E[log d] = -euler_gamma - log lambda - kbar * E[log M]
                const double mean_log_m = 0.5 * (std::log(m0) + std::log(2.0 - m0));
                const double log_lambda = -euler_gamma - mean_log - kbar * mean_log_m;
                starts.push_back({kbar, std::exp(log_lambda), g, b, m0});
            }
    return starts;
}

/// Maximizes msmd_loglik over (lambda, gamma_kbar, b, m0) for fixed kbar by
/// Nelder-Mead in transformed coordinates from several starts.
inline FitResult fit_msmd(std::span<const double> durations, int kbar, const MsmdFitOptions& options = {}) {
    detail::require_positive_durations(durations);
    detail::require(kbar >= 1, "kbar must be >= 1");
    if (kbar > options.max_kbar)
        throw ResourceError("kbar = " + std::to_string(kbar) + " exceeds the state-space cap");

    std::vector<std::string> warnings;
    if (durations.size() < 100)
        warnings.push_back("only " + std::to_string(durations.size()) + " durations; estimates may be unreliable");

    const auto starts = options.starts.empty() ? default_msmd_starts(durations, kbar) : options.starts;
    for (const auto& s : starts) validate(s);

    auto objective = [&](const std::vector<double>& x) {
        const MsmdParams p = MsmdTransform::from_free(kbar, x);
        if (!msmd_params_in_domain(p)) return std::numeric_limits<double>::infinity();
        try {
            return -msmd_loglik(p, durations, options.max_kbar);
        } catch (const DataError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    struct StartOutcome {
        optimize::NelderMeadResult run;
        double start_loglik = -std::numeric_limits<double>::infinity();
    };
    std::vector<StartOutcome> outcomes(starts.size());
    optimize::NelderMeadOptions nm;
    nm.f_tolerance = options.f_tolerance;
    nm.max_evaluations = options.max_evaluations;
    nm.initial_step = options.initial_step;

    parallel_for(
        starts.size(),
        [&](std::size_t i) {
            auto x0 = MsmdTransform::to_free({kbar, starts[i].lambda, starts[i].gamma_kbar, starts[i].b, starts[i].m0});
            outcomes[i].start_loglik = -objective(x0);
            outcomes[i].run = optimize::nelder_mead(objective, x0, nm);
        },
        options.threads);

    std::size_t best = 0;
    for (std::size_t i = 1; i < outcomes.size(); ++i)
        if (outcomes[i].run.f < outcomes[best].run.f) best = i;

    const bool any_converged =
        std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.run.converged; });
    const auto& run = outcomes[best].run;
    if (!any_converged || !std::isfinite(run.f)) {
        std::vector<double> natural;
        if (!run.x.empty()) {
            const auto p = MsmdTransform::from_free(kbar, run.x);
            natural = {p.lambda, p.gamma_kbar, p.b, p.m0};
        }
        throw OptimizerError("no MSMD start converged within the evaluation budget", natural, run.f);
    }

    FitResult fit;
    fit.params = canonicalize(MsmdTransform::from_free(kbar, run.x));
    fit.loglik = -run.f;
    fit.trace = run.trace;
    fit.converged = run.converged;
    fit.n_obs = durations.size();
    fit.seed = options.seed;
    fit.warnings = std::move(warnings);
    if (!run.converged)
        fit.warnings.push_back("best start hit the evaluation budget; another start converged");
    return fit;
}

inline FitResult fit_msmd(const DurationSeries& durations, int kbar, const MsmdFitOptions& options = {}) {
    return fit_msmd(std::span<const double>(durations.values), kbar, options);
}

/// MSMD fit plus nu_max calibrated to the sample maximum over the sample's
/// total elapsed time. The MSMD component is the stand-alone MSMD fit.
inline FitResult fit_tmsmd(std::span<const double> durations, int kbar, const MsmdFitOptions& options = {}) {
    FitResult fit = fit_msmd(durations, kbar, options);
    const double d_max = *std::max_element(durations.begin(), durations.end());
    const double total = std::accumulate(durations.begin(), durations.end(), 0.0);
    fit.params = TmsmdParams{std::get<MsmdParams>(fit.params), calibrate_nu_max(d_max, total)};
    return fit;
}

// ---------------------------------------------------------------------------
// kbar selection
// ---------------------------------------------------------------------------

struct KbarRow {
    int kbar = 0;
    std::optional<FitResult> fit;
    std::string error;  // non-empty when the fit for this kbar failed
};

/// One independent fit per candidate kbar. A failing row records its error
/// and does not stop the others.
inline std::vector<KbarRow> select_kbar(std::span<const double> durations, std::span<const int> kbar_range,
                                        const MsmdFitOptions& options = {}) {
    std::vector<KbarRow> rows;
    rows.reserve(kbar_range.size());
    for (int kbar : kbar_range) {
        KbarRow row;
        row.kbar = kbar;
        try {
            row.fit = fit_msmd(durations, kbar, options);
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_kbar_table_csv(std::ostream& out, std::span<const KbarRow> rows) {
    csv::Writer w(out);
    w.row("kbar", "lambda", "gamma_kbar", "b", "m0", "loglik", "converged", "error");
    for (const auto& row : rows) {
        if (row.fit) {
            const auto& p = std::get<MsmdParams>(row.fit->params);
            w.row(row.kbar, p.lambda, p.gamma_kbar, p.b, p.m0, row.fit->loglik, row.fit->converged ? "true" : "false",
                  "");
        } else {
            std::string msg = row.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            w.row(row.kbar, "", "", "", "", "", "false", msg);
        }
    }
}

// ---------------------------------------------------------------------------
// Parametric bootstrap
// ---------------------------------------------------------------------------

struct BootstrapResult {
    std::map<std::string, double> se;
    std::size_t replicates = 0;
    std::size_t successes = 0;
    /// True when fewer than two refits succeeded, so every se is zero.
    bool degenerate = false;
};

namespace detail {

inline BootstrapResult summarize_bootstrap(const std::vector<std::string>& names,
                                           const std::vector<std::optional<std::vector<double>>>& draws) {
    BootstrapResult out;
    out.replicates = draws.size();
    std::vector<std::vector<double>> ok;
    for (const auto& d : draws)
        if (d) ok.push_back(*d);
    out.successes = ok.size();
    if (2 * out.successes < out.replicates)
        throw BootstrapError("only " + std::to_string(out.successes) + " of " + std::to_string(out.replicates) +
                             " bootstrap refits succeeded");
    out.degenerate = out.successes < 2;
    for (std::size_t j = 0; j < names.size(); ++j) {
        double se = 0.0;
        if (!out.degenerate) {
            double mean = 0.0;
            for (const auto& v : ok) mean += v[j];
            mean /= static_cast<double>(ok.size());
            double ss = 0.0;
            for (const auto& v : ok) ss += (v[j] - mean) * (v[j] - mean);
            se = std::sqrt(ss / static_cast<double>(ok.size() - 1));
        }
        out.se[names[j]] = se;
    }
    return out;
}

}  // namespace detail

/// Simulates `n_boot` samples of length `n_obs` at the fitted parameters,
/// refits each, and reports the standard deviation of the refitted values.
/// MSMD refits start from the original estimate. Replicate b uses seed
/// task_seed(seed, b).
inline BootstrapResult bootstrap_se(const FitResult& fit, std::size_t n_obs, std::size_t n_boot, std::uint64_t seed,
                                    const MsmdFitOptions& refit_options = {}) {
    detail::require(fit.converged, "bootstrap requires a converged fit");
    detail::require(n_boot >= 1, "n_boot must be >= 1");
    detail::require(n_obs >= 1, "bootstrap sample length must be >= 1");

    std::vector<std::optional<std::vector<double>>> draws(n_boot);
    std::vector<std::string> names;

    if (const auto* exp = std::get_if<ExpParams>(&fit.params)) {
        names = {"nu", "gamma"};
        parallel_for(
            n_boot,
            [&](std::size_t b) {
                const auto sample = simulate_exponential(*exp, n_obs, task_seed(seed, b));
                const auto refit = fit_exponential(sample);
                const auto& p = std::get<ExpParams>(refit.params);
                draws[b] = std::vector<double>{p.nu, p.gamma()};
            },
            refit_options.threads);
    } else if (const auto* msmd = std::get_if<MsmdParams>(&fit.params)) {
        names = {"lambda", "gamma_kbar", "b", "m0"};
        MsmdFitOptions options = refit_options;
        options.starts = {*msmd};
        options.threads = 1;
        parallel_for(
            n_boot,
            [&](std::size_t b) {
                try {
                    const auto sample = simulate_msmd(*msmd, n_obs, task_seed(seed, b)).durations;
                    const auto refit = fit_msmd(sample, msmd->kbar, options);
                    const auto p = canonicalize(std::get<MsmdParams>(refit.params));
                    draws[b] = std::vector<double>{p.lambda, p.gamma_kbar, p.b, p.m0};
                } catch (const Error&) {
                    draws[b].reset();
                }
            },
            refit_options.threads);
    } else {
        throw DomainError("bootstrap standard errors are not defined for nu_max; bootstrap the MSMD component");
    }
    return detail::summarize_bootstrap(names, draws);
}

inline BootstrapResult bootstrap_se(const GaussianParams& g, std::size_t n_obs, std::size_t n_boot,
                                    std::uint64_t seed, unsigned threads = 0) {
    validate(g);
    detail::require(n_boot >= 1, "n_boot must be >= 1");
    detail::require(n_obs >= 2, "bootstrap sample length must be >= 2");
    std::vector<std::optional<std::vector<double>>> draws(n_boot);
    parallel_for(
        n_boot,
        [&](std::size_t b) {
            Rng rng(task_seed(seed, b), Stream::bootstrap);
            std::vector<double> sample(n_obs);
            for (auto& x : sample) x = g.mu + g.sigma * rng.normal();
            try {
                const auto refit = fit_gaussian(sample);
                draws[b] = std::vector<double>{refit.mu, refit.sigma};
            } catch (const Error&) {
                draws[b].reset();
            }
        },
        threads);
    return detail::summarize_bootstrap({"mu", "sigma"}, draws);
}

// ---------------------------------------------------------------------------
// Likelihood profiles
// ---------------------------------------------------------------------------

struct ProfilePoint {
    double value = 0.0;
    double loglik = std::numeric_limits<double>::quiet_NaN();
    bool valid = false;  // false when the grid value is outside the parameter domain
};

/// Log-likelihood along one coordinate with the others held at the estimate.
inline std::vector<ProfilePoint> profile_loglik(const FitResult& fit, std::span<const double> durations,
                                                const std::string& param_name, std::span<const double> grid,
                                                int max_kbar = kDefaultMaxKbar) {
    std::vector<ProfilePoint> out;
    out.reserve(grid.size());

    if (std::holds_alternative<ExpParams>(fit.params)) {
        detail::require(param_name == "nu" || param_name == "gamma", "exponential profile parameter must be nu or gamma");
        for (double v : grid) {
            ProfilePoint pt{v};
            const double nu = param_name == "nu" ? v : 1.0 / v;
            if (std::isfinite(nu) && nu > 0.0) {
                pt.loglik = exponential_loglik(nu, durations);
                pt.valid = true;
            }
            out.push_back(pt);
        }
        return out;
    }

    const MsmdParams base = std::holds_alternative<MsmdParams>(fit.params)
                                ? std::get<MsmdParams>(fit.params)
                                : std::get<TmsmdParams>(fit.params).msmd;
    double MsmdParams::*field = nullptr;
    if (param_name == "lambda") field = &MsmdParams::lambda;
    else if (param_name == "gamma_kbar") field = &MsmdParams::gamma_kbar;
    else if (param_name == "b") field = &MsmdParams::b;
    else if (param_name == "m0") field = &MsmdParams::m0;
    else throw DomainError("unknown MSMD parameter '" + param_name + "'");

    for (double v : grid) {
        ProfilePoint pt{v};
        MsmdParams p = base;
        p.*field = v;
        if (msmd_params_in_domain(p)) {
            pt.loglik = msmd_loglik(p, durations, max_kbar);
            pt.valid = true;
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace tmsmd
