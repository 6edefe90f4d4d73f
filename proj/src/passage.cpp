#include "mixlab/passage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mixlab/error.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

namespace {

std::size_t half_rounded_up(std::size_t n) { return (n + 1) / 2; }

std::size_t walk_until_hit(const MarkovChain& chain, std::size_t from, std::size_t to,
                           std::mt19937_64& engine) {
    constexpr std::size_t kStepCap = std::size_t{1} << 40;
    std::size_t x = from;
    std::size_t steps = 0;
    while (x != to) {
        x = sample_next(chain, x, engine);
        if (++steps >= kStepCap) throw Error(ErrorKind::HorizonExceeded, "walk never hit target");
    }
    return steps;
}

}  // namespace

HittingSummary hitting_times(const MarkovChain& chain, const PassageOptions& options) {
    const std::size_t n = chain.size();
    if (n > options.dense_cap) {
        throw Error(ErrorKind::Capacity, "chain has " + std::to_string(n) +
                                             " states, above the dense hitting-time cap; use "
                                             "mc_hitting_estimate instead");
    }
    const auto& pi = chain.stationary();
    DenseMatrix a(n);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) a(x, y) = (x == y ? 1.0 : 0.0) + pi[y];
        auto targets = chain.row_targets(x);
        auto probs = chain.row_probs(x);
        for (std::size_t k = 0; k < targets.size(); ++k) a(x, targets[k]) -= probs[k];
    }
    LuDecomposition lu(std::move(a));
    if (lu.singular()) throw Error(ErrorKind::Validation, "fundamental matrix is singular");

    // Column y of Z solves (I - P + 1 pi^T) z = e_y.
    DenseMatrix z(n);
    std::vector<double> unit(n, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
        unit[y] = 1.0;
        auto col = lu.solve(unit);
        unit[y] = 0.0;
        for (std::size_t x = 0; x < n; ++x) z(x, y) = col[x];
    }

    HittingSummary out;
    out.expected_hitting = DenseMatrix(n);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            if (x == y) continue;
            const double h = (z(y, y) - z(x, y)) / pi[y];
            out.expected_hitting(x, y) = h;
            if (h > out.max_hitting) {
                out.max_hitting = h;
                out.argmax_from = x;
                out.argmax_to = y;
            }
        }
    }
    out.tail_threshold = half_rounded_up(n);
    out.return_tail = return_tail(chain, out.tail_threshold);
    return out;
}

std::vector<double> hitting_times_to(const MarkovChain& chain, std::size_t target) {
    const std::size_t n = chain.size();
    if (target >= n) throw Error(ErrorKind::DimensionMismatch, "target out of range");
    std::vector<double> h(n, 0.0);
    if (n == 1) return h;
    // Index map that deletes the absorbing target.
    auto reduced = [target](std::size_t x) { return x < target ? x : x - 1; };
    DenseMatrix a(n - 1);
    for (std::size_t x = 0; x < n; ++x) {
        if (x == target) continue;
        a(reduced(x), reduced(x)) += 1.0;
        auto targets = chain.row_targets(x);
        auto probs = chain.row_probs(x);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            if (targets[k] != target) a(reduced(x), reduced(targets[k])) -= probs[k];
        }
    }
    LuDecomposition lu(std::move(a));
    if (lu.singular()) throw Error(ErrorKind::Reducible, "target is not reachable from every state");
    auto sol = lu.solve(std::vector<double>(n - 1, 1.0));
    for (std::size_t x = 0; x < n; ++x) {
        if (x != target) h[x] = sol[reduced(x)];
    }
    return h;
}

std::vector<double> return_tail(const MarkovChain& chain, std::size_t threshold) {
    const std::size_t n = chain.size();
    std::vector<double> tail(n, 1.0);
    if (threshold <= 1) return tail;
    std::vector<double> v(n), next(n);
    for (std::size_t x = 0; x < n; ++x) {
        std::fill(v.begin(), v.end(), 0.0);
        v[x] = 1.0;
        chain.push_forward(v, next);
        next[x] = 0.0;
        for (std::size_t step = 2; step < threshold; ++step) {
            chain.push_forward(next, v);
            v[x] = 0.0;
            next.swap(v);
        }
        tail[x] = std::accumulate(next.begin(), next.end(), 0.0);
    }
    return tail;
}

McEstimate mc_hitting_estimate(const MarkovChain& chain, std::size_t from, std::size_t to,
                               std::size_t replicates, std::uint64_t seed, unsigned threads) {
    if (from >= chain.size() || to >= chain.size()) {
        throw Error(ErrorKind::DimensionMismatch, "state out of range");
    }
    if (replicates == 0) throw Error(ErrorKind::Validation, "replicates must be at least 1");
    McEstimate out;
    out.replicates = replicates;
    out.seed = seed;
    if (from == to) return out;

    std::vector<std::size_t> samples(replicates);
    parallel_for(replicates, threads, [&](std::size_t r) {
        auto engine = replicate_engine(seed, r);
        samples[r] = walk_until_hit(chain, from, to, engine);
    });
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t s : samples) {
        const double v = static_cast<double>(s);
        sum += v;
        sum_sq += v * v;
    }
    const double r = static_cast<double>(replicates);
    out.mean = sum / r;
    if (replicates > 1) {
        const double var = std::max(0.0, (sum_sq - r * out.mean * out.mean) / (r - 1.0));
        out.std_error = std::sqrt(var / r);
    }
    return out;
}

ExcursionReport check_excursion_lemma(const MarkovChain& chain, const ExcursionOptions& options) {
    const std::size_t n = chain.size();
    ExcursionReport report;
    report.uniform_stationary = chain.has_uniform_stationary(1e-10);
    if (!report.uniform_stationary) {
        report.warnings.push_back("stationary distribution is not uniform; the bound assumes it is");
    }
    auto hits = hitting_times(chain);
    report.max_hitting = hits.max_hitting;
    report.tail_threshold = hits.tail_threshold;
    report.return_tail = hits.return_tail;
    report.min_tail = *std::min_element(hits.return_tail.begin(), hits.return_tail.end());
    report.tail_bound = hits.max_hitting > 0.0 ? static_cast<double>(n) / (2.0 * hits.max_hitting) : 0.0;
    report.tail_passed = report.min_tail >= report.tail_bound - 1e-12;

    // Subsets: everything, a few singletons, and random subsets.
    std::vector<std::vector<std::size_t>> subsets;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    subsets.push_back(all);
    auto pick = replicate_engine(options.seed, 0xabcdef);
    for (std::size_t k = 0; k < std::min<std::size_t>(3, n); ++k) subsets.push_back({pick() % n});
    for (std::size_t k = 0; k < options.subset_samples && n > 1; ++k) {
        std::vector<std::size_t> y;
        for (std::size_t s = 0; s < n; ++s) {
            if (uniform01(pick) < 0.5) y.push_back(s);
        }
        if (y.empty()) y.push_back(pick() % n);
        subsets.push_back(std::move(y));
    }

    // Tolerance keeps an integral 4H from rounding up on solver noise.
    const auto horizon = static_cast<std::size_t>(std::ceil(4.0 * hits.max_hitting - 1e-9));
    bool all_passed = true;
    for (std::size_t idx = 0; idx < subsets.size(); ++idx) {
        SubsetCoverageCheck check;
        check.subset = subsets[idx];
        check.horizon = horizon;
        // Start from the state with the largest total expected hitting time to Y.
        double worst = -1.0;
        for (std::size_t x = 0; x < n; ++x) {
            double total = 0.0;
            for (std::size_t y : check.subset) total += hits.expected_hitting(x, y);
            if (total > worst) {
                worst = total;
                check.start = x;
            }
        }
        std::vector<char> in_subset(n, 0);
        for (std::size_t y : check.subset) in_subset[y] = 1;
        const std::size_t need = half_rounded_up(check.subset.size());
        const std::uint64_t stream = options.seed ^ splitmix64(idx + 1);

        std::vector<char> success(options.trials, 0);
        parallel_for(options.trials, options.threads, [&](std::size_t r) {
            auto engine = replicate_engine(stream, r);
            std::vector<char> seen(n, 0);
            std::size_t x = check.start;
            std::size_t count = 0;
            auto visit = [&](std::size_t s) {
                if (in_subset[s] && !seen[s]) {
                    seen[s] = 1;
                    ++count;
                }
            };
            visit(x);
            for (std::size_t t = 0; t < check.horizon && count < need; ++t) {
                x = sample_next(chain, x, engine);
                visit(x);
            }
            success[r] = count >= need ? 1 : 0;
        });
        const double hitsum = static_cast<double>(std::count(success.begin(), success.end(), 1));
        const double trials = static_cast<double>(options.trials);
        check.probability = hitsum / trials;
        check.std_error = std::sqrt(check.probability * (1.0 - check.probability) / trials);
        check.passed = check.probability + options.z_tolerance * check.std_error >= 0.5;
        all_passed = all_passed && check.passed;
        report.subsets.push_back(std::move(check));
    }
    report.passed = report.tail_passed && all_passed;
    return report;
}

}  // namespace mixlab
