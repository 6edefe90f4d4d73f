#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mixlab/error.hpp"
#include "mixlab/spectral.hpp"

using namespace mixlab;

namespace {

std::vector<double> lazy_cycle_spectrum(std::size_t n, double lazy) {
    std::vector<double> ev;
    for (std::size_t k = 0; k < n; ++k)
        ev.push_back(lazy + (1.0 - lazy) * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / n));
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

std::vector<MarkovChain> reversible_test_chains() {
    std::vector<MarkovChain> chains;
    for (std::size_t n = 3; n <= 9; ++n) chains.push_back(build_cycle(n, 0.5));
    for (std::size_t n = 3; n <= 9; ++n) chains.push_back(build_cycle(n, 0.0));
    for (std::size_t d = 1; d <= 5; ++d) chains.push_back(build_hypercube(d, 0.3));
    for (std::size_t n = 2; n <= 6; ++n) chains.push_back(build_complete(n, n % 2 == 0));
    chains.push_back(build_torus2d(4, 0.2));
    std::mt19937_64 engine(99);
    for (int i = 0; i < 10; ++i) chains.push_back(build_random_reversible(2 + engine() % 11, engine));
    return chains;
}

}  // namespace

TEST(Analyze, CompleteWithoutLoops) {
    auto s = analyze(build_complete(4, false));
    ASSERT_EQ(s.eigenvalues.size(), 4u);
    EXPECT_NEAR(s.eigenvalues[0], 1.0, 1e-12);
    for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(s.eigenvalues[k], -1.0 / 3.0, 1e-12);
    EXPECT_NEAR(s.t_rel, 1.5, 1e-12);
}

TEST(Analyze, BipartiteCycleHasInfiniteRelaxation) {
    auto s = analyze(build_cycle(4, 0.0));
    auto expected = lazy_cycle_spectrum(4, 0.0);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.eigenvalues[k], expected[k], 1e-12);
    EXPECT_NEAR(s.eigenvalues[3], -1.0, 1e-12);
    EXPECT_TRUE(std::isinf(s.t_rel));
}

TEST(Analyze, LazyCycle) {
    auto s = analyze(build_cycle(4, 0.5));
    EXPECT_NEAR(s.eigenvalues[1], 0.5, 1e-12);
    EXPECT_NEAR(s.eigenvalues[2], 0.5, 1e-12);
    EXPECT_NEAR(s.eigenvalues[3], 0.0, 1e-12);
    EXPECT_NEAR(s.t_rel, 2.0, 1e-12);
}

TEST(Analyze, CycleClosedForm) {
    for (std::size_t n : {5u, 8u, 13u}) {
        for (double lazy : {0.0, 0.25, 0.5}) {
            auto s = analyze(build_cycle(n, lazy));
            auto expected = lazy_cycle_spectrum(n, lazy);
            for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(s.eigenvalues[k], expected[k], 1e-12);
        }
    }
}

TEST(Analyze, LazyHypercubeGap) {
    for (std::size_t d = 1; d <= 7; ++d) {
        auto s = analyze(build_hypercube(d, 0.5));
        EXPECT_NEAR(s.gap, 1.0 / d, 1e-12);
        EXPECT_NEAR(s.t_rel, static_cast<double>(d), 1e-9);
    }
}

TEST(Analyze, SummaryInvariants) {
    for (const auto& chain : reversible_test_chains()) {
        auto s = analyze(chain);
        EXPECT_NEAR(s.eigenvalues.front(), 1.0, 1e-9);
        for (double ev : s.eigenvalues) EXPECT_LE(std::abs(ev), 1.0 + 1e-9);
        if (std::isfinite(s.t_rel)) EXPECT_GE(s.t_rel, 1.0 / s.gap - 1e-9);
        EXPECT_NEAR(second_singular_value(chain), s.lambda_star, 1e-9);
    }
}

TEST(Analyze, EigendecompositionReconstructsKernel) {
    for (const auto& chain : reversible_test_chains()) {
        const std::size_t n = chain.size();
        DenseMatrix s = symmetrized_kernel(chain);
        auto eig = symmetric_eigen(s, true);
        const auto& pi = chain.stationary();
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t y = 0; y < n; ++y) {
                double r = 0.0;
                for (std::size_t k = 0; k < n; ++k) r += eig.vectors(x, k) * eig.values[k] * eig.vectors(y, k);
                EXPECT_NEAR(r * std::sqrt(pi[y] / pi[x]), chain.prob(x, y), 1e-8);
            }
        }
    }
}

TEST(Analyze, Deterministic) {
    std::mt19937_64 engine(3);
    auto chain = build_random_reversible(12, engine);
    auto a = analyze(chain);
    auto b = analyze(chain);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.t_rel, b.t_rel);
}

TEST(Analyze, PowerIterationMatchesDense) {
    SpectralOptions sparse;
    sparse.dense_cap = 4;
    for (const auto& chain : {build_hypercube(6, 0.5), build_cycle(30, 0.5), build_torus2d(5, 0.3)}) {
        auto dense = analyze(chain);
        auto power = analyze(chain, SpectrumMode::Auto, sparse);
        EXPECT_FALSE(power.full_spectrum);
        EXPECT_NEAR(power.lambda1, dense.lambda1, 1e-8);
        EXPECT_NEAR(power.lambda_min, dense.lambda_min, 1e-8);
        EXPECT_NEAR(power.t_rel, dense.t_rel, 1e-6 * dense.t_rel);
    }
}

TEST(Analyze, NonReversibleFullSpectrumUnsupported) {
    auto chain = from_dense({{0.1, 0.6, 0.3}, {0.3, 0.1, 0.6}, {0.6, 0.3, 0.1}});
    try {
        analyze(chain, SpectrumMode::Full);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedMode);
    }
    // Circulant: non-trivial eigenvalues 0.1 + 0.6 w + 0.3 w^2, |.|^2 = a^2+b^2+c^2-ab-bc-ca = 0.19.
    auto s = analyze(chain);
    EXPECT_TRUE(s.eigenvalues.empty());
    EXPECT_NEAR(s.lambda_star, std::sqrt(0.19), 1e-4);
    // Circulant kernels are normal, so singular values equal |eigenvalues|.
    EXPECT_NEAR(s.sigma1, std::sqrt(0.19), 1e-12);
}

TEST(SecondSingularValue, Examples) {
    EXPECT_NEAR(second_singular_value(build_complete(4, true)), 0.0, 1e-12);
    EXPECT_NEAR(second_singular_value(build_cycle(4, 0.0)), 1.0, 1e-12);
    EXPECT_NEAR(second_singular_value(from_dense({{0.9, 0.1}, {0.2, 0.8}})), 0.7, 1e-12);
}

TEST(SecondSingularValue, PowerIterationRouteAgrees) {
    SpectralOptions small;
    small.dense_cap = 2;
    for (const auto& chain : {build_cycle(9, 0.5), build_hypercube(4, 0.2)}) {
        EXPECT_NEAR(second_singular_value(chain, small), second_singular_value(chain), 1e-6);
    }
}
