#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tmsmd/error.hpp"

namespace tmsmd::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw DataError("mean of an empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Variance with divisor n.
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size());
}

/// Sample variance with divisor n - 1.
inline double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw DataError("sample variance needs at least two values");
    return variance(x) * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

/// Excess kurtosis m4 / m2^2 - 3 with central moments of divisor n.
inline double excess_kurtosis(std::span<const double> x) {
    const double m = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    if (!(m2 > 0.0)) throw DataError("kurtosis of a constant series");
    return m4 / (m2 * m2) - 3.0;
}

// ---------------------------------------------------------------------------
// Serial dependence
// ---------------------------------------------------------------------------

struct AcfResult {
    std::vector<double> rho;  // rho[i] is the autocorrelation at lag i + 1
    std::size_t n = 0;

    [[nodiscard]] std::size_t max_lag() const noexcept { return rho.size(); }
    [[nodiscard]] double at(std::size_t lag) const { return lag == 0 ? 1.0 : rho.at(lag - 1); }
};

/// Sample autocorrelations for lags 1..max_lag, normalized by the lag-0
/// sum of squared deviations.
inline AcfResult acf(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (n <= max_lag) throw DataError("series length must exceed max_lag");
    const double m = mean(x);
    std::vector<double> centered(n);
    for (std::size_t t = 0; t < n; ++t) centered[t] = x[t] - m;
    double denom = 0.0;
    for (double c : centered) denom += c * c;
    if (!(denom > 0.0)) throw DataError("autocorrelation of a zero-variance series");
    AcfResult out;
    out.n = n;
    out.rho.resize(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double num = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) num += centered[t] * centered[t + lag];
        out.rho[lag - 1] = num / denom;
    }
    return out;
}

struct LjungBoxResult {
    double q = 0.0;
    std::size_t df = 0;
};

/// Q = n (n + 2) sum_{i=1..l} rho_i^2 / (n - i).
inline LjungBoxResult ljung_box(const AcfResult& r, std::size_t lags) {
    if (r.n <= lags || r.max_lag() < lags) throw DataError("ljung_box needs n > l and an ACF through lag l");
    const double n = static_cast<double>(r.n);
    double sum = 0.0;
    for (std::size_t i = 1; i <= lags; ++i) sum += r.rho[i - 1] * r.rho[i - 1] / (n - static_cast<double>(i));
    return {n * (n + 2.0) * sum, lags};
}

inline LjungBoxResult ljung_box(std::span<const double> x, std::size_t lags = 20) {
    if (x.size() <= lags) throw DataError("ljung_box needs more observations than lags");
    return ljung_box(acf(x, lags), lags);
}

inline std::vector<double> squared(std::span<const double> x) {
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v * v; });
    return out;
}

// ---------------------------------------------------------------------------
// Discrete distributions
// ---------------------------------------------------------------------------

/// Empirical probability mass function on sorted distinct values.
struct DiscretePmf {
    std::vector<double> values;
    std::vector<double> probs;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }

    /// Probability of `v`, or 0 when v is not in the support.
    [[nodiscard]] double prob(double v) const {
        auto it = std::lower_bound(values.begin(), values.end(), v);
        if (it == values.end() || *it != v) return 0.0;
        return probs[static_cast<std::size_t>(std::distance(values.begin(), it))];
    }

    static DiscretePmf from_samples(std::span<const double> samples) {
        if (samples.empty()) throw DataError("pmf of an empty sample");
        std::map<double, std::size_t> counts;
        for (double s : samples) ++counts[s];
        DiscretePmf pmf;
        const double n = static_cast<double>(samples.size());
        for (const auto& [v, c] : counts) {
            pmf.values.push_back(v);
            pmf.probs.push_back(static_cast<double>(c) / n);
        }
        return pmf;
    }
};

struct ChiSquaredResult {
    double statistic = 0.0;
    std::size_t df = 0;
};

/// Two-sample chi-squared statistic over the observed support:
/// sum_i (sqrt(n_sim/n_obs) O_i - sqrt(n_obs/n_sim) S_i)^2 / (O_i + S_i),
/// with O_i, S_i the bin counts. df = bins - 1. Every model value must lie
/// in the observed support (clamp first).
inline ChiSquaredResult chi_squared_gof(const DiscretePmf& observed, std::size_t n_obs, const DiscretePmf& model,
                                        std::size_t n_sim) {
    if (n_obs == 0 || n_sim == 0) throw DataError("chi-squared test needs nonempty samples");
    for (double v : model.values)
        if (observed.prob(v) == 0.0)
            throw DataError("model support contains " + std::to_string(v) +
                            ", which is outside the observed support; clamp the model returns first");
    const double k1 = std::sqrt(static_cast<double>(n_sim) / static_cast<double>(n_obs));
    const double k2 = std::sqrt(static_cast<double>(n_obs) / static_cast<double>(n_sim));
    ChiSquaredResult out;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double o = std::round(observed.probs[i] * static_cast<double>(n_obs));
        const double s = std::round(model.prob(observed.values[i]) * static_cast<double>(n_sim));
        if (o + s == 0.0) continue;
        const double diff = k1 * o - k2 * s;
        out.statistic += diff * diff / (o + s);
    }
    out.df = observed.size() > 0 ? observed.size() - 1 : 0;
    return out;
}

struct KlResult {
    double divergence = 0.0;
    /// Total mass added to G by the floor (0 when no floor was needed).
    double floored_mass = 0.0;
};

/// D(F||G) = sum F ln(F/G). Where G has no mass under F's support, G is
/// raised to `floor` and renormalized; with floor <= 0 that case is an error.
/// The conventional floor is 1 / (10 n_sim).
inline KlResult kl_divergence(const DiscretePmf& f, const DiscretePmf& g, double floor = 0.0) {
    std::vector<double> gv(f.size());
    KlResult out;
    double total_g = 0.0;
    for (double p : g.probs) total_g += p;
    for (std::size_t i = 0; i < f.size(); ++i) {
        gv[i] = g.prob(f.values[i]);
        if (f.probs[i] > 0.0 && gv[i] <= 0.0) {
            if (!(floor > 0.0))
                throw DomainError("G has no mass at " + std::to_string(f.values[i]) + " where F has mass");
            gv[i] = floor;
            out.floored_mass += floor;
        }
    }
    const double renorm = total_g + out.floored_mass;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f.probs[i] <= 0.0) continue;
        out.divergence += f.probs[i] * std::log(f.probs[i] / (gv[i] / renorm));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quantiles
// ---------------------------------------------------------------------------

struct QqPoint {
    double theoretical = 0.0;
    double sample = 0.0;
};

/// Empirical quantile with linear interpolation between order statistics
/// placed at plotting positions (i - 0.5) / n.
inline double empirical_quantile(std::span<const double> sorted, double p) {
    const double n = static_cast<double>(sorted.size());
    const double h = n * p + 0.5;  // 1-based fractional rank
    if (h <= 1.0) return sorted.front();
    if (h >= n) return sorted.back();
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

inline std::vector<QqPoint> qq_points(std::span<const double> sample, const std::function<double(double)>& quantile_fn,
                                      std::size_t n_points) {
    if (sample.empty()) throw DataError("Q-Q plot of an empty sample");
    detail::require(n_points >= 1, "n_points must be >= 1");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<QqPoint> out(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n_points);
        out[i] = {quantile_fn(p), empirical_quantile(sorted, p)};
    }
    return out;
}

/// Sample variance over sample mean.
inline double dispersion_ratio(std::span<const double> durations) {
    if (durations.empty()) throw DataError("dispersion ratio of an empty series");
    const double m = mean(durations);
    if (durations.size() < 2) return 0.0;
    return sample_variance(durations) / m;
}

// ---------------------------------------------------------------------------
// Chi-squared quantiles
// ---------------------------------------------------------------------------

inline double chi2_cdf(double x, double df) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

/// Upper-tail critical value: x with P(chi2_df <= x) = p. Wilson-Hilferty
/// gives the starting bracket, bisection on the regularized incomplete
/// gamma function finishes it.
inline double chi2_critical(double p, int df) {
    detail::require(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
    detail::require(df >= 1, "df must be >= 1");
    const double k = static_cast<double>(df);
    const double z = std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
    const double c = 2.0 / (9.0 * k);
    const double guess = k * std::pow(std::max(1.0 - c + z * std::sqrt(c), 1e-3), 3.0);

    double lo = guess, hi = guess;
    while (lo > 0.0 && chi2_cdf(lo, k) > p) lo *= 0.5;
    while (chi2_cdf(hi, k) < p) hi *= 2.0;
    if (lo == hi) lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, k) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Volatility and curve fitting
// ---------------------------------------------------------------------------

inline constexpr double kDefaultPriceRef = 1640.0;
inline constexpr double kDefaultAnnualMs = 252.0 * 6.5 * 3.6e6;

/// Percent annualized volatility of clock-time returns at horizon tau:
/// std / price_ref * sqrt(annual_ms / tau) * 100 (std with divisor n).
inline double annualized_vol(std::span<const double> window_returns, double tau_ms,
                             double price_ref = kDefaultPriceRef, double annual_ms = kDefaultAnnualMs) {
    detail::require(price_ref > 0.0, "price_ref must be > 0");
    detail::require(tau_ms > 0.0 && annual_ms > 0.0, "tau and annual_ms must be > 0");
    const double sd = std::sqrt(variance(window_returns));
    return sd / price_ref * std::sqrt(annual_ms / tau_ms) * 100.0;
}

/// Cubic least squares; coefficients c0..c3 of c0 + c1 x + c2 x^2 + c3 x^3.
struct Cubic {
    std::array<double, 4> coef{};

    [[nodiscard]] double operator()(double x) const noexcept {
        return coef[0] + x * (coef[1] + x * (coef[2] + x * coef[3]));
    }
};

inline Cubic fit_cubic(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("fit_cubic: x and y lengths differ");
    std::vector<double> distinct(x.begin(), x.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4) throw RankError("fit_cubic needs at least 4 distinct x values");

    // Center and scale x so the Vandermonde columns are well conditioned.
    const double center = 0.5 * (distinct.front() + distinct.back());
    const double scale = std::max(0.5 * (distinct.back() - distinct.front()), 1e-300);
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = (x[static_cast<std::size_t>(i)] - center) / scale;
        a(i, 0) = 1.0;
        a(i, 1) = u;
        a(i, 2) = u * u;
        a(i, 3) = u * u * u;
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 4) throw RankError("fit_cubic: design matrix is rank deficient");
    const Eigen::Vector4d u_coef = qr.solve(rhs);

    // Expand p(u) with u = (x - center) / scale back into powers of x.
    const double s1 = 1.0 / scale, s2 = s1 * s1, s3 = s2 * s1;
    const double c = center;
    Cubic out;
    out.coef[3] = u_coef[3] * s3;
    out.coef[2] = u_coef[2] * s2 - 3.0 * c * u_coef[3] * s3;
    out.coef[1] = u_coef[1] * s1 - 2.0 * c * u_coef[2] * s2 + 3.0 * c * c * u_coef[3] * s3;
    out.coef[0] = u_coef[0] - c * u_coef[1] * s1 + c * c * u_coef[2] * s2 - c * c * c * u_coef[3] * s3;
    return out;
}

/// Coefficient of determination of `model` on (x, y).
template <typename Model>
double r_squared(const Model& model, std::span<const double> x, std::span<const double> y) {
    const double m = mean(y);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - model(x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - m) * (y[i] - m);
    }
    return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("spearman needs two equal-length series");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace tmsmd::stats
