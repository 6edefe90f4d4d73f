#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mixlab/error.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/spectral.hpp"
#include "oracles.hpp"

using namespace mixlab;

namespace {

MarkovChain two_state() { return from_dense({{0.9, 0.1}, {0.2, 0.8}}); }

std::vector<MarkovChain> aperiodic_chains() {
    std::vector<MarkovChain> chains;
    for (std::size_t n = 3; n <= 8; ++n) chains.push_back(build_cycle(n, 0.5));
    chains.push_back(build_cycle(5, 0.0));
    chains.push_back(build_cycle(7, 0.0));
    for (std::size_t d = 1; d <= 4; ++d) chains.push_back(build_hypercube(d, 0.5));
    for (std::size_t n = 3; n <= 6; ++n) chains.push_back(build_complete(n, false));
    chains.push_back(build_complete(5, true));
    chains.push_back(build_torus2d(3, 0.25));
    chains.push_back(two_state());
    std::mt19937_64 engine(21);
    for (int i = 0; i < 8; ++i) chains.push_back(build_random_reversible(2 + engine() % 8, engine));
    return chains;
}

}  // namespace

TEST(Distances, PointMassAtTimeZero) {
    for (std::size_t n : {3u, 5u, 16u}) {
        auto p = distances_at(build_cycle(n, 0.5), 0, 0);
        const double N = static_cast<double>(n);
        EXPECT_NEAR(p.tv, 1.0 - 1.0 / N, 1e-14);
        EXPECT_NEAR(p.sep, 1.0, 1e-14);
        EXPECT_NEAR(p.entropy, std::log(N), 1e-13);
        EXPECT_NEAR(p.l2, std::sqrt(N - 1.0), 1e-12);
    }
}

TEST(Distances, StationaryStartIsZeroForever) {
    auto chain = build_hypercube(3, 0.5);
    for (std::size_t t : {0u, 1u, 7u}) {
        auto p = distances_at(chain, DistributionVector::stationary(chain), t);
        EXPECT_NEAR(p.tv, 0.0, 1e-15);
        EXPECT_NEAR(p.l2, 0.0, 1e-14);
        EXPECT_NEAR(p.sep, 0.0, 1e-14);
        EXPECT_NEAR(p.entropy, 0.0, 1e-15);
    }
}

TEST(Distances, CompleteWithLoopsIsExactAfterOneStep) {
    auto p = distances_at(build_complete(6, true), 2, 1);
    EXPECT_NEAR(p.tv, 0.0, 1e-15);
    EXPECT_NEAR(p.l2, 0.0, 1e-14);
    EXPECT_NEAR(p.sep, 0.0, 1e-14);
    EXPECT_NEAR(p.entropy, 0.0, 1e-15);
}

TEST(Distances, MatchTextbookFormulas) {
    std::mt19937_64 engine(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 7;
        std::vector<double> mu(n), pi(n);
        double smu = 0, spi = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] = trial % 3 == 0 && i == 0 ? 0.0 : u(engine);
            pi[i] = 0.05 + u(engine);
            smu += mu[i];
            spi += pi[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            mu[i] /= smu;
            pi[i] /= spi;
        }
        auto p = distances(mu, pi);
        auto o = oracle::textbook_distances(mu, pi);
        EXPECT_NEAR(p.tv, o.tv, 1e-14);
        EXPECT_NEAR(p.l2, o.l2, 1e-12);
        EXPECT_NEAR(p.sep, o.sep, 1e-14);
        EXPECT_NEAR(p.entropy, o.entropy, 1e-13);
    }
}

TEST(Distances, ZeroReferenceMassIsAnError) {
    std::vector<double> mu{0.5, 0.5}, pi{1.0, 0.0};
    try {
        distances(mu, pi);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AbsoluteContinuity);
    }
}

TEST(Distances, TwoStateClosedForm) {
    // P^t(x, .) - pi = (0.7)^t (delta_x - pi).
    auto chain = two_state();
    for (std::size_t t = 0; t < 30; ++t) {
        const double r = std::pow(0.7, static_cast<double>(t));
        auto from0 = distances_at(chain, 0, t);
        auto from1 = distances_at(chain, 1, t);
        EXPECT_NEAR(from0.tv, r / 3.0, 1e-13);
        EXPECT_NEAR(from1.tv, 2.0 * r / 3.0, 1e-13);
        EXPECT_NEAR(from1.sep, r, 1e-13);
        EXPECT_NEAR(from0.sep, r, 1e-13);
    }
}

TEST(WorstCase, MatchesBruteForceMatrixPowers) {
    for (const auto& chain : aperiodic_chains()) {
        if (chain.size() > 16) continue;
        auto series = worst_case_series(chain, 25);
        for (std::size_t t : {0u, 1u, 2u, 5u, 13u, 25u}) {
            auto o = oracle::worst_case_brute(chain.dense(), chain.stationary(), t);
            EXPECT_NEAR(series[t].tv, o.tv, 1e-12);
            // The oracle's sum mu^2/pi - 1 form cancels near zero, so compare squares.
            EXPECT_NEAR(series[t].l2 * series[t].l2, o.l2 * o.l2, 1e-12 * std::max(1.0, o.l2 * o.l2));
            EXPECT_NEAR(series[t].sep, o.sep, 1e-12);
            EXPECT_NEAR(series[t].entropy, o.entropy, 1e-12);
        }
    }
}

TEST(WorstCase, ProfileInvariantsHoldEverywhere) {
    for (const auto& chain : aperiodic_chains()) {
        WorstCaseMarcher marcher(chain);
        for (std::size_t t = 0; t <= 60; ++t) {
            for (const auto& p : marcher.per_start()) {
                auto v = profile_violations(p, chain.pi_min());
                EXPECT_TRUE(v.empty()) << v.front();
            }
            marcher.advance();
        }
    }
}

TEST(WorstCase, ThreadCountDoesNotChangeSeries) {
    auto chain = build_torus2d(5, 0.3);
    StartSet one, four;
    one.threads = 1;
    four.threads = 4;
    auto a = worst_case_series(chain, 20, one);
    auto b = worst_case_series(chain, 20, four);
    for (std::size_t t = 0; t <= 20; ++t) {
        EXPECT_EQ(a[t].tv, b[t].tv);
        EXPECT_EQ(a[t].entropy, b[t].entropy);
        EXPECT_EQ(a[t].worst_start_state, b[t].worst_start_state);
    }
}

TEST(WorstCase, CapRequiresExplicitStarts) {
    StartSet starts;
    starts.all_states_cap = 10;
    EXPECT_THROW(WorstCaseMarcher(build_cycle(11, 0.5), starts), Error);
    starts.states = {0, 3};
    WorstCaseMarcher ok(build_cycle(11, 0.5), starts);
    EXPECT_EQ(ok.starts().size(), 2u);
}

TEST(MixingTimes, CompleteWithLoopsIsOne) {
    auto m = mixing_times(build_complete(7, true));
    EXPECT_EQ(m.tau_tv, 1u);
    EXPECT_EQ(m.tau_2, 1u);
    EXPECT_EQ(m.tau_sep, 1u);
    EXPECT_EQ(m.tau_ent, 1u);
}

TEST(MixingTimes, TwoStateTotalVariation) {
    // Worst start is state 1: d(t) = (2/3) 0.7^t; t = 2 gives 0.327, t = 3 gives 0.229.
    EXPECT_EQ(mixing_time(two_state(), Metric::Tv, 0.25), 3u);
    std::size_t t = 0;
    while (2.0 / 3.0 * std::pow(0.7, static_cast<double>(t)) > 0.25) ++t;
    EXPECT_EQ(t, 3u);
}

TEST(MixingTimes, PeriodicCycleExceedsHorizon) {
    try {
        mixing_times(build_cycle(4, 0.0));
        FAIL() << "expected horizon error";
    } catch (const HorizonExceededError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::HorizonExceeded);
        EXPECT_GE(e.last_profile().tv, 0.5 - 1e-12);
    }
}

TEST(MixingTimes, PeriodicChainConvergesAboveItsFloor) {
    // Period 2 leaves tv at 1/2 at best; a threshold above that is met.
    auto tau = mixing_time(build_cycle(4, 0.0), Metric::Tv, 0.6);
    auto series = worst_case_series(build_cycle(4, 0.0), tau + 10);
    EXPECT_GT(series[tau - 1].tv, 0.6);
    for (std::size_t t = tau; t < series.size(); ++t) EXPECT_LE(series[t].tv, 0.6);
}

TEST(MixingTimes, ShortHorizonThrows) {
    MixingOptions options;
    options.max_horizon = 4;
    EXPECT_THROW(mixing_time(build_cycle(31, 0.5), Metric::Tv, 0.25, options), HorizonExceededError);
}

TEST(MixingTimes, MinimalAgainstBruteForce) {
    for (const auto& chain : aperiodic_chains()) {
        if (chain.size() > 16) continue;
        MixingEpsilons eps;
        auto m = mixing_times(chain, eps);
        for (Metric metric : kAllMetrics) {
            const std::size_t tau = m.get(metric);
            auto value = [&](std::size_t t) {
                auto o = oracle::worst_case_brute(chain.dense(), chain.stationary(), t);
                switch (metric) {
                    case Metric::Tv: return o.tv;
                    case Metric::L2: return o.l2;
                    case Metric::Sep: return o.sep;
                    case Metric::Entropy: return o.entropy;
                }
                return 0.0;
            };
            if (tau > 0) EXPECT_GT(value(tau - 1), eps.get(metric)) << to_string(metric);
            for (std::size_t t = tau; t < tau + 20; ++t) EXPECT_LE(value(t), eps.get(metric) + 1e-12);
        }
    }
}

TEST(MixingTimes, MonotoneInEpsilon) {
    for (const auto& chain : aperiodic_chains()) {
        std::size_t prev = 0;
        for (double eps : {0.4, 0.25, 0.1, 0.01, 0.001}) {
            auto tau = mixing_time(chain, Metric::Tv, eps);
            EXPECT_GE(tau, prev);
            prev = tau;
        }
    }
}

TEST(MixingTimes, LongerChainUsesBisection) {
    // Lazy cycle of 40: tv mixing is a few hundred steps, well past the
    // three-decrease guard.
    auto chain = build_cycle(40, 0.5);
    auto tau = mixing_time(chain, Metric::Tv, 0.25);
    auto series = worst_case_series(chain, tau + 5, StartSet{{0}});
    EXPECT_GT(series[tau - 1].tv, 0.25);
    EXPECT_LE(series[tau].tv, 0.25);
}

TEST(ThresholdTime, HandlesNonMonotoneSeries) {
    std::vector<double> s{1.0, 0.2, 0.5, 0.1, 0.05};
    EXPECT_EQ(threshold_time(s, 0.3), 3u);
    EXPECT_EQ(threshold_time(s, 0.01), 5u);
    EXPECT_EQ(threshold_time(s, 2.0), 0u);
}

TEST(CovarianceLemma, ConstantFunction) {
    std::vector<double> f(6, 3.0);
    auto r = check_covariance_lemma(build_cycle(6, 0.5), f, 10);
    for (double c : r.covariance) EXPECT_NEAR(c, 0.0, 1e-15);
    EXPECT_TRUE(r.passed);
}

TEST(CovarianceLemma, CompleteFourDecorrelatesInOneStep) {
    std::vector<double> f{1.0, -2.0, 0.5, 4.0};
    auto r = check_covariance_lemma(build_complete(4, true), f, 5);
    EXPECT_NEAR(r.sigma1, 0.0, 1e-12);
    for (std::size_t t = 1; t <= 5; ++t) EXPECT_NEAR(r.covariance[t], 0.0, 1e-14);
    EXPECT_TRUE(r.passed);
}

TEST(CovarianceLemma, LazyCycleIndicatorAgainstJointLaw) {
    auto chain = build_cycle(6, 0.5);
    std::vector<double> f(6, 0.0);
    f[0] = 1.0;
    auto r = check_covariance_lemma(chain, f, 20);
    EXPECT_TRUE(r.passed);
    EXPECT_GT(r.min_slack, 0.0);
    const auto& pi = chain.stationary();
    for (std::size_t t = 0; t <= 20; ++t) {
        auto pt = oracle::matrix_power(chain.dense(), 6, t);
        double joint = 0.0, mean = 0.0;
        for (std::size_t x = 0; x < 6; ++x) {
            mean += pi[x] * f[x];
            for (std::size_t y = 0; y < 6; ++y) joint += pi[x] * pt[x * 6 + y] * f[x] * f[y];
        }
        EXPECT_NEAR(r.covariance[t], joint - mean * mean, 1e-14);
        if (t >= 1) EXPECT_LT(r.covariance[t], r.bound[t]);
    }
}

TEST(CovarianceLemma, HoldsOnRandomFunctions) {
    std::mt19937_64 engine(8);
    std::normal_distribution<double> gauss;
    for (const auto& chain : aperiodic_chains()) {
        std::vector<double> f(chain.size());
        for (auto& v : f) v = gauss(engine);
        auto r = check_covariance_lemma(chain, f, 30);
        EXPECT_TRUE(r.passed) << "violation " << r.max_violation;
    }
}

TEST(SepEntropy, CompleteGraphIsTrivial) {
    auto r = check_sep_entropy_bounds(build_complete(6, true));
    EXPECT_EQ(r.tau_sep, 1u);
    EXPECT_EQ(r.tau_ent, 1u);
    EXPECT_TRUE(r.proposition_passed);
    EXPECT_TRUE(r.passed);
}

TEST(SepEntropy, LazyCycleEightHasPositiveSlack) {
    SepEntropyOptions options;
    options.t_max = 200;
    auto r = check_sep_entropy_bounds(build_cycle(8, 0.5), options);
    EXPECT_TRUE(r.proposition_passed);
    EXPECT_GT(r.proposition_min_slack, 0.0);
    EXPECT_TRUE(r.sep_monotone);
    EXPECT_TRUE(r.sep_submultiplicative);
    EXPECT_TRUE(r.passed);
}

TEST(SepEntropy, AtTimeZeroEntropyIsLogInversePi) {
    auto chain = build_cycle(5, 0.5);
    auto p = distances_at(chain, 0, 0);
    EXPECT_NEAR(p.entropy, std::log(1.0 / chain.stationary()[0]), 1e-13);
    EXPECT_LE(p.entropy, p.sep * std::log(1.0 / chain.pi_min()) + 1e-12);
}

TEST(SepEntropy, CorollariesOnReversibleChains) {
    for (const auto& chain : aperiodic_chains()) {
        if (!chain.reversible()) continue;
        for (double eps : {0.3, 0.1, 0.01}) {
            SepEntropyOptions options;
            options.epsilon = eps;
            options.t_max = 60;
            auto r = check_sep_entropy_bounds(chain, options);
            EXPECT_TRUE(r.proposition_passed);
            EXPECT_TRUE(r.sep_monotone);
            EXPECT_TRUE(r.sep_submultiplicative);
            EXPECT_TRUE(r.sep_bound_passed) << r.tau_ent << " vs " << r.sep_bound_ceiling;
            EXPECT_TRUE(r.tv_lower_pinsker_passed)
                << "n=" << chain.size() << " eps=" << eps << " tau_tv(sqrt(eps/2))=" << r.tau_tv_pinsker
                << " tau_ent=" << r.tau_ent;
            EXPECT_EQ(r.tv_lower_literal_holds, r.tau_tv_half_eps <= r.tau_ent);
            EXPECT_TRUE(r.profile_failures.empty());
        }
    }
}

TEST(SepEntropy, HalfEpsilonTotalVariationIsNotImpliedByEntropy) {
    // Two-state chain, brute force: the worst-start entropy drops below 0.1
    // at t = 4 while worst-start tv needs t = 8 to reach 0.05.
    auto chain = two_state();
    auto first_below = [&](auto pick, double eps) {
        std::size_t t = 0;
        while (pick(oracle::worst_case_brute(chain.dense(), chain.stationary(), t)) > eps) ++t;
        return t;
    };
    const auto ent = first_below([](const oracle::Distances& d) { return d.entropy; }, 0.1);
    const auto tv = first_below([](const oracle::Distances& d) { return d.tv; }, 0.05);
    const auto tv_pinsker = first_below([](const oracle::Distances& d) { return d.tv; }, std::sqrt(0.05));
    EXPECT_EQ(ent, 4u);
    EXPECT_EQ(tv, 8u);
    EXPECT_LE(tv_pinsker, ent);

    SepEntropyOptions options;
    options.epsilon = 0.1;
    auto r = check_sep_entropy_bounds(chain, options);
    EXPECT_EQ(r.tau_ent, ent);
    EXPECT_EQ(r.tau_tv_half_eps, tv);
    EXPECT_EQ(r.tau_tv_pinsker, tv_pinsker);
    EXPECT_FALSE(r.tv_lower_literal_holds);
    EXPECT_TRUE(r.tv_lower_pinsker_passed);
}
