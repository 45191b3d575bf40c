#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "tmsmd/duration_models.hpp"
#include "tmsmd/msmd_inference.hpp"
#include "tmsmd/random.hpp"
#include "tmsmd/stats.hpp"

using namespace tmsmd;

namespace {

// Likelihood by summing over every latent path. Built from the model
// definition alone: joint transition = product of per-frequency switch
// rules, initial law uniform.
double brute_force_loglik(const MsmdParams& p, const std::vector<double>& d) {
    const int kbar = p.kbar;
    const std::size_t n_states = std::size_t{1} << kbar;
    std::vector<double> gam(static_cast<std::size_t>(kbar));
    for (int k = 1; k <= kbar; ++k)
        gam[static_cast<std::size_t>(k - 1)] = 1.0 - std::pow(1.0 - p.gamma_kbar, std::pow(p.b, k - kbar));

    auto mult = [&](std::size_t s, int k) { return (s >> k) & 1U ? 2.0 - p.m0 : p.m0; };
    auto rate = [&](std::size_t s) {
        double r = p.lambda;
        for (int k = 0; k < kbar; ++k) r *= mult(s, k);
        return r;
    };
    auto trans = [&](std::size_t from, std::size_t to) {
        double pr = 1.0;
        for (int k = 0; k < kbar; ++k) {
            const double g = gam[static_cast<std::size_t>(k)];
            const bool same = ((from >> k) & 1U) == ((to >> k) & 1U);
            pr *= same ? (1.0 - g) + g / 2.0 : g / 2.0;
        }
        return pr;
    };

    const std::size_t n = d.size();
    std::size_t paths = 1;
    for (std::size_t i = 0; i < n; ++i) paths *= n_states;
    double total = 0.0;
    std::vector<std::size_t> seq(n);
    for (std::size_t code = 0; code < paths; ++code) {
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i) {
            seq[i] = c % n_states;
            c /= n_states;
        }
        double pr = 1.0 / static_cast<double>(n_states);
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) pr *= trans(seq[i - 1], seq[i]);
            const double r = rate(seq[i]);
            pr *= r * std::exp(-r * d[i]);
        }
        total += pr;
    }
    return std::log(total);
}

const MsmdParams kEminiK3{3, 0.09155, 0.4656, 2.063, 0.1502};

}  // namespace

TEST(StateSpace, Sizes) {
    EXPECT_EQ(build_state_space({1, 1.0, 0.5, 2.0, 0.3}).size(), 2u);
    EXPECT_EQ(build_state_space({7, 1.0, 0.5, 2.0, 0.3}).size(), 128u);
    const auto one = build_state_space({1, 1.0, 0.5, 2.0, 0.3});
    EXPECT_DOUBLE_EQ(one.intensities[0], 0.3);
    EXPECT_DOUBLE_EQ(one.intensities[1], 1.7);
}

TEST(StateSpace, UnitMultiplierIsFlat) {
    const auto s = build_state_space({4, 0.7, 0.5, 2.0, 1.0});
    for (double l : s.intensities) EXPECT_EQ(l, 0.7);
}

TEST(StateSpace, TransitionRowsSumToOne) {
    const auto s = build_state_space({6, 0.7, 0.9, 3.0, 0.2});
    for (const auto& t : s.transitions)
        for (const auto& row : t) EXPECT_NEAR(row[0] + row[1], 1.0, 1e-12);
}

TEST(StateSpace, IntensityIsProductOfMultipliers) {
    const MsmdParams p{5, 0.4, 0.6, 2.5, 0.35};
    const auto s = build_state_space(p);
    for (std::size_t st = 0; st < s.size(); ++st) {
        double prod = p.lambda;
        for (double m : s.multipliers(st)) prod *= m;
        EXPECT_NEAR(s.intensities[st], prod, 1e-12 * prod);
    }
}

TEST(StateSpace, CapIsEnforced) {
    EXPECT_THROW(build_state_space({13, 1.0, 0.5, 2.0, 0.3}), ResourceError);
    EXPECT_THROW(build_state_space({5, 1.0, 0.5, 2.0, 0.3}, 4), ResourceError);
}

TEST(MsmdLoglik, MatchesPathEnumeration) {
    std::mt19937_64 gen(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int instance = 0; instance < 100; ++instance) {
        const int kbar = 1 + instance % 2;
        const std::size_t n = 1 + static_cast<std::size_t>(gen() % 8);
        const MsmdParams p{kbar, 0.1 + 2.0 * u(gen), 0.05 + 0.9 * u(gen), 1.2 + 4.0 * u(gen), 0.05 + 1.9 * u(gen)};
        std::vector<double> d(n);
        for (auto& x : d) x = -std::log(1.0 - u(gen)) / p.lambda + 1e-6;
        const double fast = msmd_loglik(p, d);
        const double slow = brute_force_loglik(p, d);
        ASSERT_NEAR(fast, slow, 1e-10 * std::abs(slow)) << "instance " << instance;
    }
}

TEST(MsmdLoglik, EightStepsAtTwoFrequencies) {
    // Largest case: (2^2)^8 = 65536 paths.
    const MsmdParams p{2, 0.8, 0.4, 3.0, 0.3};
    const std::vector<double> d{0.5, 2.0, 0.1, 1.3, 4.0, 0.7, 0.2, 1.1};
    EXPECT_NEAR(msmd_loglik(p, d), brute_force_loglik(p, d), 1e-10 * std::abs(brute_force_loglik(p, d)));
}

TEST(MsmdLoglik, UnitMultiplierEqualsExponential) {
    const auto d = simulate_exponential({50.0}, 2000, 3).values;
    const MsmdParams p{4, 0.02, 0.5, 2.0, 1.0};
    double expected = 0.0;
    for (double x : d) expected += std::log(0.02) - 0.02 * x;
    EXPECT_NEAR(msmd_loglik(p, d), expected, 1e-12 * std::abs(expected));
    EXPECT_NEAR(exponential_loglik(50.0, d), expected, 1e-12 * std::abs(expected));
}

TEST(MsmdLoglik, MultiplierRelabelingSymmetry) {
    const auto d = simulate_msmd(kEminiK3, 3000, 5).durations.values;
    for (double m0 : {0.1, 0.4, 0.77, 0.999}) {
        MsmdParams a = kEminiK3, b = kEminiK3;
        a.m0 = m0;
        b.m0 = 2.0 - m0;
        const double la = msmd_loglik(a, d);
        EXPECT_NEAR(la, msmd_loglik(b, d), 1e-10 * std::abs(la));
    }
}

TEST(MsmdLoglik, PosteriorStaysNormalized) {
    MsmdFilter f(kEminiK3);
    for (double d : simulate_msmd(kEminiK3, 500, 2).durations.values) {
        f.step(d);
        const auto post = f.posterior();
        ASSERT_NEAR(std::accumulate(post.begin(), post.end(), 0.0), 1.0, 1e-10);
    }
}

TEST(MsmdLoglik, RejectsNonPositiveDurations) {
    EXPECT_THROW(msmd_loglik(kEminiK3, std::vector<double>{1.0, 0.0}), DataError);
    EXPECT_THROW(msmd_loglik(kEminiK3, std::vector<double>{}), DataError);
}

TEST(FitExponential, SmallSample) {
    const auto fit = fit_exponential(std::vector<double>{1, 2, 3});
    const auto& p = std::get<ExpParams>(fit.params);
    EXPECT_DOUBLE_EQ(p.nu, 2.0);
    EXPECT_DOUBLE_EQ(p.gamma() * p.nu, 1.0);
    EXPECT_NEAR(fit.loglik, 3 * std::log(0.5) - 0.5 * 6, 1e-12);
    EXPECT_THROW(fit_exponential(std::vector<double>{}), DataError);
}

TEST(FitExponential, RecoversMean) {
    const auto fit = fit_exponential(simulate_exponential({300.7}, 1000000, 21));
    EXPECT_NEAR(std::get<ExpParams>(fit.params).nu, 300.7, 1.5);
}

TEST(FitGaussian, SmallCases) {
    const auto g = fit_gaussian(std::vector<double>{-1, 1});
    EXPECT_DOUBLE_EQ(g.mu, 0.0);
    EXPECT_DOUBLE_EQ(g.sigma, 1.0);
    EXPECT_THROW(fit_gaussian(std::vector<double>{2, 2, 2}), DataError);
    EXPECT_THROW(fit_gaussian(std::vector<double>{1}), DataError);
}

TEST(FitGaussian, RecoversParameters) {
    const double mu = -7.103e-05, sigma = 0.1196;
    const std::size_t n = 1000000;
    Rng rng(8, Stream::tick_returns);
    std::vector<double> x(n);
    for (auto& v : x) v = mu + sigma * rng.normal();
    const auto g = fit_gaussian(x);
    EXPECT_NEAR(g.mu, mu, 3 * sigma / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(g.sigma, sigma, 3 * sigma / std::sqrt(2.0 * static_cast<double>(n)));
}

TEST(FitMsmd, BeatsEveryStartAndIsDeterministic) {
    const auto d = simulate_msmd({2, 0.05, 0.5, 3.0, 0.3}, 3000, 12).durations.values;
    MsmdFitOptions opts;
    opts.threads = 1;
    const auto fit = fit_msmd(d, 2, opts);
    for (const auto& s : default_msmd_starts(d, 2)) EXPECT_GE(fit.loglik, msmd_loglik(s, d));
    const auto& p = std::get<MsmdParams>(fit.params);
    EXPECT_GT(p.m0, 0.0);
    EXPECT_LE(p.m0, 1.0);
    EXPECT_TRUE(fit.converged);
    EXPECT_FALSE(fit.trace.empty());

    opts.threads = 4;
    const auto again = fit_msmd(d, 2, opts);
    EXPECT_EQ(fit.loglik, again.loglik);
    EXPECT_EQ(std::get<MsmdParams>(again.params).lambda, p.lambda);
}

TEST(FitMsmd, NestsTheExponential) {
    const auto d = simulate_exponential({100.0}, 3000, 4).values;
    const auto fit = fit_msmd(d, 1);
    const double m0 = std::get<MsmdParams>(fit.params).m0;
    const double exp_ll = fit_exponential(d).loglik;
    EXPECT_TRUE(std::abs(m0 - 1.0) < 0.1 || std::abs(fit.loglik - exp_ll) < 2.0) << m0;
    EXPECT_GE(fit.loglik, exp_ll - 1e-6);
}

TEST(FitMsmd, SmallSampleWarns) {
    const auto d = simulate_exponential({10.0}, 50, 1).values;
    const auto fit = fit_msmd(d, 1);
    ASSERT_FALSE(fit.warnings.empty());
}

TEST(FitTmsmd, CalibratesTheCap) {
    const auto d = simulate_tmsmd({{2, 0.05, 0.5, 3.0, 0.3}, 500.0}, 2000, 3).values;
    const auto fit = fit_tmsmd(d, 2);
    const auto& t = std::get<TmsmdParams>(fit.params);
    const double d_max = *std::max_element(d.begin(), d.end());
    EXPECT_EQ(t.nu_max, calibrate_nu_max(d_max, std::accumulate(d.begin(), d.end(), 0.0)));
    EXPECT_EQ(fit.loglik, fit_msmd(d, 2).loglik);
}

TEST(SelectKbar, NestedOrdering) {
    const auto d = simulate_msmd(kEminiK3, 5000, 31).durations.values;
    const std::vector<int> range{1, 2, 3};
    const auto rows = select_kbar(d, range);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) ASSERT_TRUE(r.fit) << r.error;
    EXPECT_GE(rows[2].fit->loglik, rows[0].fit->loglik);
}

TEST(SelectKbar, FailingRowDoesNotAbort) {
    const auto d = simulate_exponential({10.0}, 200, 2).values;
    MsmdFitOptions opts;
    opts.max_kbar = 2;
    const std::vector<int> range{1, 3};
    const auto rows = select_kbar(d, range, opts);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(rows[0].fit);
    EXPECT_FALSE(rows[1].fit);
    EXPECT_FALSE(rows[1].error.empty());
}

TEST(Bootstrap, ExponentialMatchesAsymptotics) {
    FitResult fit;
    fit.params = ExpParams{300.7};
    fit.converged = true;
    const std::size_t n = 161630;
    const auto bs = bootstrap_se(fit, n, 200, 5);
    const double oracle = 300.7 / std::sqrt(static_cast<double>(n));
    EXPECT_GT(bs.se.at("nu"), oracle / 2);
    EXPECT_LT(bs.se.at("nu"), oracle * 2);
    EXPECT_FALSE(bs.degenerate);

    const auto again = bootstrap_se(fit, n, 200, 5);
    EXPECT_EQ(bs.se, again.se);
}

TEST(Bootstrap, SingleReplicateIsDegenerate) {
    FitResult fit;
    fit.params = ExpParams{300.7};
    fit.converged = true;
    const auto bs = bootstrap_se(fit, 100, 1, 5);
    EXPECT_TRUE(bs.degenerate);
    EXPECT_EQ(bs.se.at("nu"), 0.0);
}

TEST(Bootstrap, UndefinedForTheCap) {
    FitResult fit;
    fit.params = TmsmdParams{kEminiK3, 5866};
    fit.converged = true;
    EXPECT_THROW(bootstrap_se(fit, 100, 10, 1), DomainError);
}

TEST(Bootstrap, Msmd) {
    FitResult fit;
    fit.params = MsmdParams{1, 0.05, 0.5, 2.0, 0.4};
    fit.converged = true;
    MsmdFitOptions opts;
    opts.starts = {std::get<MsmdParams>(fit.params)};
    const auto bs = bootstrap_se(fit, 1500, 8, 2, opts);
    EXPECT_EQ(bs.successes, 8u);
    EXPECT_GT(bs.se.at("lambda"), 0.0);
    EXPECT_GT(bs.se.at("m0"), 0.0);
}

TEST(Bootstrap, Gaussian) {
    const auto bs = bootstrap_se(GaussianParams{0.0, 0.12}, 10000, 100, 3);
    EXPECT_NEAR(bs.se.at("mu"), 0.0012, 0.0004);
}

TEST(Profile, MultiplierProfileIsSymmetric) {
    const auto d = simulate_msmd(kEminiK3, 3000, 6).durations.values;
    FitResult fit;
    fit.params = kEminiK3;
    std::vector<double> grid;
    for (int i = 1; i <= 9; ++i) grid.push_back(0.1 * i);
    for (int i = 9; i >= 1; --i) grid.push_back(2.0 - 0.1 * i);
    const auto prof = profile_loglik(fit, d, "m0", grid);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(prof[i].loglik, prof[17 - i].loglik, 1e-9 * std::abs(prof[i].loglik));
}

TEST(Profile, PeaksAtTheEstimate) {
    const auto d = simulate_msmd(kEminiK3, 5000, 9).durations.values;
    const auto fit = fit_msmd(d, 3);
    const double lam = std::get<MsmdParams>(fit.params).lambda;
    std::vector<double> grid;
    for (int i = -5; i <= 5; ++i) grid.push_back(lam * (1.0 + 0.05 * i));
    const auto prof = profile_loglik(fit, d, "lambda", grid);
    const auto best = std::max_element(prof.begin(), prof.end(), [](auto& a, auto& b) { return a.loglik < b.loglik; });
    EXPECT_EQ(best - prof.begin(), 5);
    for (std::size_t i = 1; i <= 5; ++i) {
        EXPECT_LT(prof[i - 1].loglik, prof[i].loglik);
        EXPECT_GT(prof[5 + i - 1].loglik, prof[5 + i].loglik);
    }
}

TEST(Profile, OutOfDomainIsMarked) {
    FitResult fit;
    fit.params = kEminiK3;
    const std::vector<double> d{1.0, 2.0};
    const std::vector<double> grid{-0.5, 0.5, 2.5};
    const auto prof = profile_loglik(fit, d, "m0", grid);
    EXPECT_FALSE(prof[0].valid);
    EXPECT_TRUE(prof[1].valid);
    EXPECT_FALSE(prof[2].valid);
    EXPECT_THROW(profile_loglik(fit, d, "kappa", grid), DomainError);
}
