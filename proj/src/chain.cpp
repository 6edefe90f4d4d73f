#include "mixlab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "mixlab/error.hpp"
#include "mixlab/rng.hpp"

namespace mixlab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidSize: return "invalid-size";
        case ErrorKind::Capacity: return "capacity";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Reducible: return "reducible";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::UnsupportedMode: return "unsupported-mode";
        case ErrorKind::HorizonExceeded: return "horizon-exceeded";
        case ErrorKind::AbsoluteContinuity: return "absolute-continuity";
        case ErrorKind::NoConvergence: return "no-convergence";
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-10;
constexpr double kDetailedBalanceTol = 1e-12;

void check_capacity(std::size_t states, const ChainLimits& limits) {
    if (states > limits.max_states) {
        throw Error(ErrorKind::Capacity, "chain would have " + std::to_string(states) +
                                             " states, above the cap of " +
                                             std::to_string(limits.max_states));
    }
}

std::vector<double> uniform(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

bool detailed_balance_holds(const MarkovChain& chain) {
    const auto& pi = chain.stationary();
    for (std::size_t x = 0; x < chain.size(); ++x) {
        auto targets = chain.row_targets(x);
        auto probs = chain.row_probs(x);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const std::size_t y = targets[k];
            const double lhs = pi[x] * probs[k];
            const double rhs = pi[y] * chain.prob(y, x);
            if (std::abs(lhs - rhs) > kDetailedBalanceTol) return false;
        }
    }
    return true;
}

void push_rows(const SparseRows& rows, std::span<const double> in, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t x = 0; x < rows.size(); ++x) {
        if (in[x] == 0.0) continue;
        for (const auto& [to, p] : rows[x]) out[to] += in[x] * p;
    }
}

// Power iteration on (P + I) / 2, which has the same stationary law as P
// but no periodicity.
std::vector<double> solve_stationary(const SparseRows& rows) {
    const std::size_t n = rows.size();
    std::vector<double> v = uniform(n);
    std::vector<double> next(n);
    constexpr std::size_t kMaxIterations = 1'000'000;
    for (std::size_t it = 1; it <= kMaxIterations; ++it) {
        push_rows(rows, v, next);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double lazy = 0.5 * (v[i] + next[i]);
            change += std::abs(lazy - v[i]);
            v[i] = lazy;
        }
        if (change <= 1e-15 * static_cast<double>(n)) break;
    }
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& p : v) p /= total;
    push_rows(rows, v, next);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(next[i] - v[i]) > kStationaryTol) {
            throw Error(ErrorKind::NoConvergence,
                        "stationary solve did not reach residual 1e-10 at state " +
                            std::to_string(i));
        }
    }
    return v;
}

}  // namespace

MarkovChain::MarkovChain(const SparseRows& rows, std::vector<double> stationary,
                         bool reversible, double laziness, std::vector<std::string> labels)
    : stationary_(std::move(stationary)),
      labels_(std::move(labels)),
      reversible_(reversible),
      laziness_(laziness) {
    const std::size_t n = rows.size();
    if (n == 0) throw Error(ErrorKind::InvalidSize, "chain needs at least one state");
    if (stationary_.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "stationary vector length differs from kernel");
    }
    if (!labels_.empty() && labels_.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "label count differs from state count");
    }
    if (!(laziness_ >= 0.0 && laziness_ < 1.0)) {
        throw Error(ErrorKind::Validation, "laziness must lie in [0, 1)");
    }

    row_ptr_.reserve(n + 1);
    row_ptr_.push_back(0);
    for (std::size_t x = 0; x < n; ++x) {
        std::vector<Transition> row = rows[x];
        std::sort(row.begin(), row.end(),
                  [](const Transition& a, const Transition& b) { return a.to < b.to; });
        double sum = 0.0;
        std::size_t last = n;
        for (const auto& [to, p] : row) {
            if (to >= n) {
                throw Error(ErrorKind::Validation,
                            "row " + std::to_string(x) + " points outside the state space");
            }
            if (!(p >= 0.0) || p > 1.0) {
                throw Error(ErrorKind::Validation,
                            "row " + std::to_string(x) + " has an entry outside [0, 1]");
            }
            sum += p;
            if (p == 0.0) continue;
            if (to == last) {
                values_.back() += p;
            } else {
                cols_.push_back(to);
                values_.push_back(p);
                last = to;
            }
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
            throw Error(ErrorKind::Validation, "row " + std::to_string(x) + " sums to " +
                                                   std::to_string(sum) + ", not 1");
        }
        row_ptr_.push_back(cols_.size());
    }

    if (n < kDenseThreshold) {
        dense_.assign(n * n, 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
                dense_[x * n + cols_[k]] = values_[k];
            }
        }
    }

    double mass = 0.0;
    pi_min_ = 1.0;
    for (double p : stationary_) {
        if (!(p >= 0.0)) throw Error(ErrorKind::Validation, "negative stationary entry");
        mass += p;
        pi_min_ = std::min(pi_min_, p);
    }
    if (std::abs(mass - 1.0) > kRowSumTol * static_cast<double>(n)) {
        throw Error(ErrorKind::Validation, "stationary vector does not sum to 1");
    }
    std::vector<double> pushed(n);
    push_forward(stationary_, pushed);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(pushed[i] - stationary_[i]) > kStationaryTol) {
            throw Error(ErrorKind::Validation,
                        "stationary vector is not invariant at state " + std::to_string(i));
        }
    }
    if (reversible_ && !detailed_balance_holds(*this)) {
        throw Error(ErrorKind::Validation, "chain flagged reversible violates detailed balance");
    }
}

std::span<const std::size_t> MarkovChain::row_targets(std::size_t x) const {
    return {cols_.data() + row_ptr_[x], row_ptr_[x + 1] - row_ptr_[x]};
}

std::span<const double> MarkovChain::row_probs(std::size_t x) const {
    return {values_.data() + row_ptr_[x], row_ptr_[x + 1] - row_ptr_[x]};
}

double MarkovChain::prob(std::size_t x, std::size_t y) const {
    const std::size_t n = size();
    if (!dense_.empty()) return dense_[x * n + y];
    auto targets = row_targets(x);
    auto it = std::lower_bound(targets.begin(), targets.end(), y);
    if (it == targets.end() || *it != y) return 0.0;
    return values_[row_ptr_[x] + static_cast<std::size_t>(it - targets.begin())];
}

bool MarkovChain::has_uniform_stationary(double tol) const {
    const double u = 1.0 / static_cast<double>(size());
    return std::all_of(stationary_.begin(), stationary_.end(),
                       [&](double p) { return std::abs(p - u) <= tol; });
}

SparseRows MarkovChain::rows() const {
    SparseRows out(size());
    for (std::size_t x = 0; x < size(); ++x) {
        for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
            out[x].push_back({cols_[k], values_[k]});
        }
    }
    return out;
}

std::vector<double> MarkovChain::dense() const {
    const std::size_t n = size();
    if (!dense_.empty()) return dense_;
    std::vector<double> out(n * n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
            out[x * n + cols_[k]] = values_[k];
        }
    }
    return out;
}

void MarkovChain::push_forward(std::span<const double> in, std::span<double> out) const {
    if (in.size() != size() || out.size() != size()) {
        throw Error(ErrorKind::DimensionMismatch, "distribution length differs from chain size");
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t x = 0; x < size(); ++x) {
        const double mass = in[x];
        if (mass == 0.0) continue;
        for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
            out[cols_[k]] += mass * values_[k];
        }
    }
}

void MarkovChain::apply(std::span<const double> f, std::span<double> out) const {
    if (f.size() != size() || out.size() != size()) {
        throw Error(ErrorKind::DimensionMismatch, "function length differs from chain size");
    }
    for (std::size_t x = 0; x < size(); ++x) {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[x]; k < row_ptr_[x + 1]; ++k) {
            acc += values_[k] * f[cols_[k]];
        }
        out[x] = acc;
    }
}

DistributionVector DistributionVector::point_mass(std::size_t n, std::size_t state) {
    if (state >= n) throw Error(ErrorKind::DimensionMismatch, "start state out of range");
    DistributionVector d;
    d.probs.assign(n, 0.0);
    d.probs[state] = 1.0;
    return d;
}

DistributionVector DistributionVector::stationary(const MarkovChain& chain) {
    return {chain.stationary(), 0};
}

DistributionVector DistributionVector::from_probs(std::vector<double> probs, std::size_t time) {
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw Error(ErrorKind::Validation, "distribution has a negative entry");
        total += p;
    }
    if (probs.empty() || std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorKind::Validation, "distribution does not sum to 1");
    }
    return {std::move(probs), time};
}

DistributionVector evolve(const MarkovChain& chain, const DistributionVector& dist,
                          std::size_t steps) {
    if (dist.probs.size() != chain.size()) {
        throw Error(ErrorKind::DimensionMismatch, "distribution length differs from chain size");
    }
    std::vector<double> cur = dist.probs;
    std::vector<double> next(cur.size());
    for (std::size_t s = 0; s < steps; ++s) {
        chain.push_forward(cur, next);
        cur.swap(next);
    }
    return {std::move(cur), dist.time + steps};
}

MarkovChain build_cycle(std::size_t n, double laziness, const ChainLimits& limits) {
    if (n < 3) throw Error(ErrorKind::InvalidSize, "cycle needs n >= 3");
    check_capacity(n, limits);
    const double move = (1.0 - laziness) / 2.0;
    SparseRows rows(n);
    for (std::size_t x = 0; x < n; ++x) {
        if (laziness > 0.0) rows[x].push_back({x, laziness});
        rows[x].push_back({(x + 1) % n, move});
        rows[x].push_back({(x + n - 1) % n, move});
    }
    return MarkovChain(rows, uniform(n), true, laziness);
}

MarkovChain build_torus2d(std::size_t side, double laziness, const ChainLimits& limits) {
    if (side < 3) throw Error(ErrorKind::InvalidSize, "torus needs side >= 3");
    check_capacity(side * side, limits);
    const std::size_t n = side * side;
    const double move = (1.0 - laziness) / 4.0;
    SparseRows rows(n);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            const std::size_t x = r * side + c;
            if (laziness > 0.0) rows[x].push_back({x, laziness});
            rows[x].push_back({((r + 1) % side) * side + c, move});
            rows[x].push_back({((r + side - 1) % side) * side + c, move});
            rows[x].push_back({r * side + (c + 1) % side, move});
            rows[x].push_back({r * side + (c + side - 1) % side, move});
        }
    }
    return MarkovChain(rows, uniform(n), true, laziness);
}

MarkovChain build_hypercube(std::size_t dim, double laziness, const ChainLimits& limits) {
    if (dim < 1) throw Error(ErrorKind::InvalidSize, "hypercube needs dim >= 1");
    if (dim >= 63 || (std::size_t{1} << dim) > limits.max_states) {
        throw Error(ErrorKind::Capacity,
                    "hypercube of dimension " + std::to_string(dim) + " exceeds the state cap");
    }
    const std::size_t n = std::size_t{1} << dim;
    const double move = (1.0 - laziness) / static_cast<double>(dim);
    SparseRows rows(n);
    for (std::size_t x = 0; x < n; ++x) {
        if (laziness > 0.0) rows[x].push_back({x, laziness});
        for (std::size_t b = 0; b < dim; ++b) rows[x].push_back({x ^ (std::size_t{1} << b), move});
    }
    return MarkovChain(rows, uniform(n), true, laziness);
}

MarkovChain build_complete(std::size_t n, bool self_loops, const ChainLimits& limits) {
    if (n < 2) throw Error(ErrorKind::InvalidSize, "complete graph needs n >= 2");
    check_capacity(n, limits);
    SparseRows rows(n);
    const double p = 1.0 / static_cast<double>(self_loops ? n : n - 1);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            if (y != x || self_loops) rows[x].push_back({y, p});
        }
    }
    return MarkovChain(rows, uniform(n), true, 0.0);
}

bool is_irreducible(const SparseRows& rows) {
    const std::size_t n = rows.size();
    if (n == 0) return false;
    std::vector<std::vector<std::size_t>> reverse(n);
    for (std::size_t x = 0; x < n; ++x) {
        for (const auto& [to, p] : rows[x]) {
            if (p > 0.0 && to < n) reverse[to].push_back(x);
        }
    }
    auto reaches_all = [n](auto&& neighbours) {
        std::vector<char> seen(n, 0);
        std::queue<std::size_t> frontier;
        frontier.push(0);
        seen[0] = 1;
        std::size_t count = 1;
        while (!frontier.empty()) {
            const std::size_t x = frontier.front();
            frontier.pop();
            neighbours(x, [&](std::size_t y) {
                if (!seen[y]) {
                    seen[y] = 1;
                    ++count;
                    frontier.push(y);
                }
            });
        }
        return count == n;
    };
    const bool forward = reaches_all([&](std::size_t x, auto&& visit) {
        for (const auto& [to, p] : rows[x]) {
            if (p > 0.0 && to < n) visit(to);
        }
    });
    const bool backward = reaches_all([&](std::size_t x, auto&& visit) {
        for (std::size_t y : reverse[x]) visit(y);
    });
    return forward && backward;
}

MarkovChain from_kernel(const SparseRows& rows, std::vector<std::string> labels,
                        const ChainLimits& limits) {
    const std::size_t n = rows.size();
    if (n == 0) throw Error(ErrorKind::InvalidSize, "kernel has no rows");
    check_capacity(n, limits);
    SparseRows normalised = rows;
    for (std::size_t x = 0; x < n; ++x) {
        double sum = 0.0;
        for (const auto& [to, p] : normalised[x]) {
            if (to >= n) {
                throw Error(ErrorKind::Validation,
                            "row " + std::to_string(x) + " has column outside the square kernel");
            }
            if (!(p >= 0.0)) {
                throw Error(ErrorKind::Validation, "row " + std::to_string(x) + " has a negative entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw Error(ErrorKind::Validation, "row " + std::to_string(x) + " is not stochastic (sum " +
                                                   std::to_string(sum) + ")");
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
            for (auto& t : normalised[x]) t.prob /= sum;
        }
    }
    if (!is_irreducible(normalised)) {
        throw Error(ErrorKind::Reducible,
                    "kernel is reducible; the stationary distribution is not unique");
    }
    std::vector<double> pi = solve_stationary(normalised);
    MarkovChain chain(normalised, pi, false, 0.0, labels);
    if (!detailed_balance_holds(chain)) return chain;
    return MarkovChain(normalised, std::move(pi), true, 0.0, std::move(labels));
}

MarkovChain from_dense(const std::vector<std::vector<double>>& rows, const ChainLimits& limits) {
    SparseRows sparse(rows.size());
    for (std::size_t x = 0; x < rows.size(); ++x) {
        if (rows[x].size() != rows.size()) {
            throw Error(ErrorKind::Validation, "kernel row " + std::to_string(x) + " is not square");
        }
        for (std::size_t y = 0; y < rows[x].size(); ++y) {
            if (rows[x][y] != 0.0) sparse[x].push_back({y, rows[x][y]});
        }
    }
    return from_kernel(sparse, {}, limits);
}

MarkovChain from_symmetric_weights(std::size_t n, const std::vector<double>& weights,
                                   const ChainLimits& limits) {
    if (n == 0) throw Error(ErrorKind::InvalidSize, "weighted graph needs at least one state");
    check_capacity(n, limits);
    if (weights.size() != n * n) {
        throw Error(ErrorKind::DimensionMismatch, "weight matrix must be n*n");
    }
    std::vector<double> degree(n, 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            const double w = weights[x * n + y];
            if (!(w >= 0.0) || w != weights[y * n + x]) {
                throw Error(ErrorKind::Validation, "weights must be symmetric and non-negative");
            }
            degree[x] += w;
        }
        total += degree[x];
    }
    SparseRows rows(n);
    for (std::size_t x = 0; x < n; ++x) {
        if (degree[x] == 0.0) throw Error(ErrorKind::Reducible, "isolated state in weighted graph");
        for (std::size_t y = 0; y < n; ++y) {
            const double w = weights[x * n + y];
            if (w > 0.0) rows[x].push_back({y, w / degree[x]});
        }
    }
    if (!is_irreducible(rows)) throw Error(ErrorKind::Reducible, "weighted graph is disconnected");
    std::vector<double> pi(n);
    for (std::size_t x = 0; x < n; ++x) pi[x] = degree[x] / total;
    return MarkovChain(rows, std::move(pi), true, 0.0);
}

MarkovChain build_random_reversible(std::size_t n, std::mt19937_64& engine) {
    std::vector<double> w(n * n, 0.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(engine); };
    for (std::size_t x = 0; x < n; ++x) w[x * n + x] = draw(0.5, 1.5);
    for (std::size_t x = 0; x + 1 < n; ++x) {
        const double v = draw(0.1, 1.0);
        w[x * n + x + 1] = v;
        w[(x + 1) * n + x] = v;
    }
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 2; y < n; ++y) {
            if (uniform01(engine) < 0.3) {
                const double v = draw(0.1, 1.0);
                w[x * n + y] = v;
                w[y * n + x] = v;
            }
        }
    }
    return from_symmetric_weights(n, w);
}

}  // namespace mixlab
