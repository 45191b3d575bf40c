#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tmsmd/random.hpp"
#include "tmsmd/stats.hpp"
#include "tmsmd/subordination.hpp"

using namespace tmsmd;
using namespace tmsmd::stats;

namespace {

std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed, Stream::tick_returns);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    return x;
}

DiscretePmf pmf(std::vector<double> values, std::vector<double> probs) { return {std::move(values), std::move(probs)}; }

}  // namespace

TEST(Acf, NullBand) {
    const auto x = gaussian_noise(10000, 1);
    const auto r = acf(x, 40);
    int inside = 0;
    for (std::size_t l = 1; l <= 40; ++l) inside += std::abs(r.at(l)) < 3.0 / std::sqrt(10000.0);
    EXPECT_GE(inside, 38);
}

TEST(Acf, Alternating) {
    std::vector<double> x(1000);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = t % 2 ? -1.0 : 1.0;
    const auto r = acf(x, 2);
    EXPECT_NEAR(r.at(1), -1.0, 1e-2);
    EXPECT_NEAR(r.at(2), 1.0, 1e-2);
    EXPECT_EQ(r.max_lag(), 2u);
}

TEST(Acf, Errors) {
    EXPECT_THROW(acf(std::vector<double>{1, 1, 1, 1}, 2), DataError);
    EXPECT_THROW(acf(std::vector<double>{1, 2}, 2), DataError);
}

TEST(LjungBox, MonotoneAndNonNegative) {
    const auto x = gaussian_noise(500, 3);
    double prev = 0.0;
    for (std::size_t l = 1; l <= 30; ++l) {
        const auto q = ljung_box(x, l);
        EXPECT_GE(q.q, prev);
        EXPECT_EQ(q.df, l);
        prev = q.q;
    }
    EXPECT_THROW(ljung_box(std::vector<double>(20, 0.0), 20), DataError);
}

TEST(LjungBox, ZeroCorrelationGivesZero) {
    AcfResult r;
    r.n = 100;
    r.rho.assign(20, 0.0);
    EXPECT_EQ(ljung_box(r, 20).q, 0.0);
}

TEST(LjungBox, MatchesDefinition) {
    const auto x = gaussian_noise(300, 4);
    const auto r = acf(x, 5);
    double q = 0.0;
    for (std::size_t i = 1; i <= 5; ++i) q += r.at(i) * r.at(i) / (300.0 - static_cast<double>(i));
    EXPECT_NEAR(ljung_box(r, 5).q, 300.0 * 302.0 * q, 1e-9);
}

TEST(ChiSquared, IdentityAndOrdering) {
    const auto a = pmf({-0.25, 0, 0.25}, {0.2, 0.5, 0.3});
    const auto same = chi_squared_gof(a, 1000, a, 1000);
    EXPECT_NEAR(same.statistic, 0.0, 1e-12);
    EXPECT_EQ(same.df, 2u);

    const auto b = pmf({-0.25, 0, 0.25}, {0.3, 0.4, 0.3});
    const auto r = chi_squared_gof(a, 1000, b, 3000);
    EXPECT_GT(r.statistic, 0.0);
    // Same sum taken over the bins in reverse order.
    const double k1 = std::sqrt(3000.0 / 1000.0), k2 = std::sqrt(1000.0 / 3000.0);
    double reversed = 0.0;
    for (std::size_t i = 3; i-- > 0;) {
        const double o = a.probs[i] * 1000, m = b.probs[i] * 3000;
        reversed += std::pow(k1 * o - k2 * m, 2) / (o + m);
    }
    EXPECT_NEAR(r.statistic, reversed, 1e-9);
}

TEST(ChiSquared, SevenBinsHaveSixDf) {
    std::vector<double> vals{-0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75};
    const auto p = pmf(vals, std::vector<double>(7, 1.0 / 7));
    EXPECT_EQ(chi_squared_gof(p, 700, p, 700).df, 6u);
    EXPECT_NEAR(chi2_critical(0.95, 6), 12.592, 0.01);
}

TEST(ChiSquared, SupportMismatch) {
    const auto a = pmf({0}, {1.0});
    const auto b = pmf({0, 0.25}, {0.5, 0.5});
    EXPECT_THROW(chi_squared_gof(a, 10, b, 10), DataError);
}

TEST(Kl, HandValue) {
    const auto f = pmf({0, 1}, {0.5, 0.5});
    const auto g = pmf({0, 1}, {0.25, 0.75});
    EXPECT_NEAR(kl_divergence(f, g).divergence, 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(kl_divergence(f, g).divergence, 0.1438, 1e-4);
    EXPECT_NEAR(kl_divergence(f, f).divergence, 0.0, 1e-15);
}

TEST(Kl, RandomPairsAreNonNegative) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int i = 0; i < 200; ++i) {
        const std::size_t k = 2 + gen() % 8;
        std::vector<double> vals(k), pf(k), pg(k);
        double sf = 0, sg = 0;
        for (std::size_t j = 0; j < k; ++j) {
            vals[j] = static_cast<double>(j);
            sf += pf[j] = u(gen);
            sg += pg[j] = u(gen);
        }
        for (std::size_t j = 0; j < k; ++j) {
            pf[j] /= sf;
            pg[j] /= sg;
        }
        const auto f = pmf(vals, pf), g = pmf(vals, pg);
        EXPECT_GE(kl_divergence(f, g).divergence, 0.0);
        EXPECT_NEAR(kl_divergence(f, f).divergence, 0.0, 1e-12);
    }
}

TEST(Kl, Floor) {
    const auto f = pmf({0, 1}, {0.5, 0.5});
    const auto g = pmf({0}, {1.0});
    EXPECT_THROW(kl_divergence(f, g), DomainError);
    const auto r = kl_divergence(f, g, 0.01);
    EXPECT_DOUBLE_EQ(r.floored_mass, 0.01);
    EXPECT_NEAR(r.divergence, 0.5 * std::log(0.5 * 1.01) + 0.5 * std::log(0.5 * 1.01 / 0.01), 1e-12);
}

TEST(Qq, SameDistributionHugsDiagonal) {
    auto normal_q = [](double p) {
        // Standard normal quantile by bisection on the CDF.
        double lo = -10, hi = 10;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    double prev_dev = 1e9;
    for (std::size_t n : {1000u, 100000u}) {
        const auto pts = qq_points(gaussian_noise(n, 5), normal_q, 19);
        double dev = 0.0;
        for (const auto& p : pts) dev = std::max(dev, std::abs(p.theoretical - p.sample));
        EXPECT_LT(dev, prev_dev);
        prev_dev = dev;
    }
    EXPECT_LT(prev_dev, 0.05);
}

TEST(Qq, ConstantAndSorted) {
    const auto pts = qq_points(std::vector<double>(50, 3.0), [](double p) { return p; }, 9);
    for (const auto& p : pts) EXPECT_EQ(p.sample, 3.0);
    const auto g = qq_points(gaussian_noise(999, 6), [](double p) { return p; }, 25);
    for (std::size_t i = 1; i < g.size(); ++i) {
        EXPECT_LE(g[i - 1].theoretical, g[i].theoretical);
        EXPECT_LE(g[i - 1].sample, g[i].sample);
    }
    EXPECT_THROW(qq_points(std::vector<double>{}, [](double p) { return p; }, 3), DataError);
}

TEST(Dispersion, Cases) {
    EXPECT_EQ(dispersion_ratio(std::vector<double>(10, 4.0)), 0.0);
    EXPECT_THROW(dispersion_ratio(std::vector<double>{}), DataError);
}

TEST(Chi2Critical, TableValues) {
    EXPECT_NEAR(chi2_critical(0.95, 20), 31.41, 0.01);
    EXPECT_NEAR(chi2_critical(0.95, 6), 12.592, 0.01);
    EXPECT_NEAR(chi2_critical(0.95, 10), 18.307, 0.01);
    EXPECT_THROW(chi2_critical(1.0, 3), DomainError);
    EXPECT_THROW(chi2_critical(0.5, 0), DomainError);
}

TEST(Chi2Critical, InvertsTheCdf) {
    for (int df : {1, 2, 5, 13, 40, 200})
        for (double p : {0.01, 0.5, 0.95, 0.999}) EXPECT_NEAR(chi2_cdf(chi2_critical(p, df), df), p, 1e-6);
}

TEST(AnnualizedVol, Arithmetic) {
    const std::vector<double> r{0.5, -0.5, 0.5, -0.5};
    EXPECT_NEAR(annualized_vol(r, 1e4, 1640, 252 * 6.5 * 3.6e6), 0.5 / 1640 * std::sqrt(589680.0) * 100, 1e-9);
    EXPECT_NEAR(annualized_vol(r, 1e4), 23.4, 0.05);
    std::vector<double> r2 = r;
    for (auto& v : r2) v *= 3;
    EXPECT_NEAR(annualized_vol(r2, 1e4), 3 * annualized_vol(r, 1e4), 1e-12);
    EXPECT_EQ(annualized_vol(std::vector<double>(5, 0.25), 1e4), 0.0);
    EXPECT_THROW(annualized_vol(r, 1e4, 0.0), DomainError);
}

TEST(FitCubic, RecoversPolynomial) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) {
        x.push_back(0.7 * i - 2);
        y.push_back(2 * std::pow(x.back(), 3) - x.back() + 5);
    }
    const auto c = fit_cubic(x, y);
    EXPECT_NEAR(c.coef[0], 5, 1e-8);
    EXPECT_NEAR(c.coef[1], -1, 1e-8);
    EXPECT_NEAR(c.coef[2], 0, 1e-8);
    EXPECT_NEAR(c.coef[3], 2, 1e-8);
}

TEST(FitCubic, ConstantAndNormalEquations) {
    const std::vector<double> x{1, 2, 3, 4, 5, 6}, flat(6, 4.5);
    const auto c = fit_cubic(x, flat);
    EXPECT_NEAR(c.coef[0], 4.5, 1e-10);
    for (int k = 1; k < 4; ++k) EXPECT_NEAR(c.coef[static_cast<std::size_t>(k)], 0.0, 1e-10);

    const std::vector<double> y{1, -2, 0.5, 7, 3, -1};
    const auto f = fit_cubic(x, y);
    for (int k = 0; k < 4; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dot += std::pow(x[i], k) * (y[i] - f(x[i]));
        EXPECT_NEAR(dot, 0.0, 1e-8);
    }
    EXPECT_THROW(fit_cubic(std::vector<double>{1, 2, 3, 3}, std::vector<double>{1, 2, 3, 4}), RankError);
}

TEST(Spearman, Ranks) {
    const std::vector<double> x{1, 2, 3, 4, 5};
    EXPECT_NEAR(spearman(x, std::vector<double>{10, 8, 6, 4, 2}), -1.0, 1e-12);
    EXPECT_NEAR(spearman(x, std::vector<double>{1, 4, 9, 16, 25}), 1.0, 1e-12);
}
