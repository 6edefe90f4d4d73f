#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mixlab/chain.hpp"
#include "mixlab/linalg.hpp"

namespace mixlab {

struct PassageOptions {
    std::size_t dense_cap = 4096;
};

struct HittingSummary {
    DenseMatrix expected_hitting;      // (x, y) -> E_x T_y, zero diagonal
    double max_hitting = 0.0;          // H
    std::size_t argmax_from = 0;
    std::size_t argmax_to = 0;
    std::size_t tail_threshold = 0;    // ceil(|X| / 2)
    std::vector<double> return_tail;   // Pr_x(T_x^+ >= tail_threshold)
};

/// Exact hitting times from the fundamental matrix Z = (I - P + 1 pi^T)^{-1},
/// E_x T_y = (Z_yy - Z_xy) / pi_y. Throws Capacity above the dense cap.
HittingSummary hitting_times(const MarkovChain& chain, const PassageOptions& options = {});

/// h(x) = E_x T_target from the absorbing system h = 1 + P h off the target.
std::vector<double> hitting_times_to(const MarkovChain& chain, std::size_t target);

/// Pr_x(T_x^+ >= threshold) for every x, by pushing the walk through the
/// kernel with x made absorbing.
std::vector<double> return_tail(const MarkovChain& chain, std::size_t threshold);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
};

/// Sample mean of first-passage times from `from` to `to`. Replicate r uses
/// the stream replicate_engine(seed, r), so the result is independent of the
/// thread count.
McEstimate mc_hitting_estimate(const MarkovChain& chain, std::size_t from, std::size_t to,
                               std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

struct ExcursionOptions {
    std::size_t subset_samples = 8;   // random subsets Y beyond {all, singletons}
    std::size_t trials = 100'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    double z_tolerance = 3.0;         // standard errors allowed below the 1/2 floor
};

struct SubsetCoverageCheck {
    std::vector<std::size_t> subset;
    std::size_t start = 0;
    std::size_t horizon = 0;          // ceil(4 H)
    double probability = 0.0;         // Pr(visit >= ceil(|Y|/2) elements of Y by horizon)
    double std_error = 0.0;
    bool passed = false;
};

struct ExcursionReport {
    bool uniform_stationary = true;
    std::vector<std::string> warnings;
    double max_hitting = 0.0;
    std::size_t tail_threshold = 0;
    std::vector<double> return_tail;
    double tail_bound = 0.0;          // |X| / (2H)
    double min_tail = 0.0;
    bool tail_passed = false;
    std::vector<SubsetCoverageCheck> subsets;
    bool passed = false;
};

/// Return-time tail bound min_x Pr_x(T_x^+ >= ceil(|X|/2)) >= |X|/(2H), checked
/// exactly, and the half-coverage-by-4H property, checked by simulation.
ExcursionReport check_excursion_lemma(const MarkovChain& chain, const ExcursionOptions& options = {});

}  // namespace mixlab
