#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mixlab {

struct ChainLimits {
    std::size_t max_states = std::size_t{1} << 22;
};

struct Transition {
    std::size_t to;
    double prob;
};

/// One entry per state; each row lists its outgoing transitions.
using SparseRows = std::vector<std::vector<Transition>>;

/// Finite, irreducible, row-stochastic Markov kernel together with its
/// stationary distribution. Immutable after construction.
///
/// Rows are stored in CSR form. Chains below kDenseThreshold states also keep
/// a dense copy so that prob(x, y) is a direct lookup.
class MarkovChain {
public:
    static constexpr std::size_t kDenseThreshold = 64;

    /// Validates every construction invariant: rows stochastic within 1e-12,
    /// entries non-negative, stationary * P = stationary within 1e-10 and, if
    /// reversible is set, detailed balance within 1e-12.
    MarkovChain(const SparseRows& rows, std::vector<double> stationary, bool reversible,
                double laziness, std::vector<std::string> labels = {});

    std::size_t size() const noexcept { return stationary_.size(); }
    std::span<const std::size_t> row_targets(std::size_t x) const;
    std::span<const double> row_probs(std::size_t x) const;
    double prob(std::size_t x, std::size_t y) const;

    const std::vector<double>& stationary() const noexcept { return stationary_; }
    double pi_min() const noexcept { return pi_min_; }
    bool reversible() const noexcept { return reversible_; }
    double laziness() const noexcept { return laziness_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    bool has_uniform_stationary(double tol = 1e-12) const;

    SparseRows rows() const;
    /// Row-major n*n copy of the kernel.
    std::vector<double> dense() const;

    /// out = in * P  (distribution push-forward).
    void push_forward(std::span<const double> in, std::span<double> out) const;
    /// out = P * f  (expectation of a function one step ahead).
    void apply(std::span<const double> f, std::span<double> out) const;

private:
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
    std::vector<double> dense_;
    std::vector<double> stationary_;
    std::vector<std::string> labels_;
    double pi_min_ = 0.0;
    bool reversible_ = false;
    double laziness_ = 0.0;
};

struct DistributionVector {
    std::vector<double> probs;
    std::size_t time = 0;

    static DistributionVector point_mass(std::size_t n, std::size_t state);
    static DistributionVector stationary(const MarkovChain& chain);
    /// Validates non-negativity and unit mass (within 1e-12).
    static DistributionVector from_probs(std::vector<double> probs, std::size_t time = 0);
};

/// dist * P^steps; the result carries time dist.time + steps.
DistributionVector evolve(const MarkovChain& chain, const DistributionVector& dist,
                          std::size_t steps);

// Builders. Laziness is the holding probability mixed into every row.

MarkovChain build_cycle(std::size_t n, double laziness, const ChainLimits& limits = {});
MarkovChain build_torus2d(std::size_t side, double laziness, const ChainLimits& limits = {});
MarkovChain build_hypercube(std::size_t dim, double laziness, const ChainLimits& limits = {});
MarkovChain build_complete(std::size_t n, bool self_loops, const ChainLimits& limits = {});

/// General kernel. Rows must sum to 1 within 1e-9 (they are renormalised);
/// the stationary distribution is solved for and reversibility is detected.
MarkovChain from_kernel(const SparseRows& rows, std::vector<std::string> labels = {},
                        const ChainLimits& limits = {});
MarkovChain from_dense(const std::vector<std::vector<double>>& rows,
                       const ChainLimits& limits = {});

/// Random walk on a weighted undirected graph: P(x,y) = w(x,y) / w(x).
/// `weights` is a symmetric row-major n*n matrix. Reversible by construction,
/// with stationary distribution proportional to w(x).
MarkovChain from_symmetric_weights(std::size_t n, const std::vector<double>& weights,
                                   const ChainLimits& limits = {});

/// Connected weighted graph on n states with a positive holding weight on every
/// state (so the chain is aperiodic) and random extra edges.
MarkovChain build_random_reversible(std::size_t n, std::mt19937_64& engine);

/// Strongly-connected check on the support graph of the rows.
bool is_irreducible(const SparseRows& rows);

}  // namespace mixlab
