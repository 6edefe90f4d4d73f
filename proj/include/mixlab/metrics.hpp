#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mixlab/chain.hpp"
#include "mixlab/error.hpp"

namespace mixlab {

enum class Metric { Tv, L2, Sep, Entropy };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Tv, Metric::L2, Metric::Sep, Metric::Entropy};
std::string_view to_string(Metric m);

struct DistanceProfile {
    std::size_t time = 0;
    double tv = 0.0;        // sum (pi - mu)_+
    double l2 = 0.0;        // || mu/pi - 1 ||_{2,pi}
    double sep = 0.0;       // max_y (1 - mu/pi)
    double entropy = 0.0;   // D(mu || pi) in nats
    // Start state attaining each value, indexed by Metric. Zero for a single start.
    std::array<std::size_t, 4> worst_start_state{};

    double get(Metric m) const;
};

/// All four distances of mu from pi. Throws AbsoluteContinuity if pi has a
/// zero entry.
DistanceProfile distances(std::span<const double> mu, std::span<const double> pi, std::size_t time = 0);

DistanceProfile distances_at(const MarkovChain& chain, std::size_t start, std::size_t t);
DistanceProfile distances_at(const MarkovChain& chain, const DistributionVector& start, std::size_t t);

/// Violations of tv <= sep, 2 tv^2 <= D, D <= sep log(1/pi_min), tv <= l2/2
/// beyond `tol`. Empty when all hold.
std::vector<std::string> profile_violations(const DistanceProfile& p, double pi_min, double tol = 1e-12);

struct StartSet {
    std::vector<std::size_t> states;   // empty = every state
    std::size_t all_states_cap = 1024;
    unsigned threads = 0;
};

/// Evolves P^t(x, .) for every start in the set, one step at a time, and
/// reports the worst case over starts of every metric.
class WorstCaseMarcher {
public:
    WorstCaseMarcher(const MarkovChain& chain, const StartSet& starts = {});

    std::size_t time() const noexcept { return time_; }
    void advance();
    DistanceProfile profile() const;
    /// Per-start profiles at the current time, in start order.
    std::vector<DistanceProfile> per_start() const;
    const std::vector<std::size_t>& starts() const noexcept { return starts_; }

private:
    const MarkovChain* chain_;
    std::vector<std::size_t> starts_;
    std::vector<double> rows_;      // starts_.size() x n
    std::vector<double> scratch_;
    std::size_t time_ = 0;
    unsigned threads_ = 0;
};

/// Worst-case profile at every t in [0, t_max].
std::vector<DistanceProfile> worst_case_series(const MarkovChain& chain, std::size_t t_max,
                                               const StartSet& starts = {});
/// Profile series from one start distribution.
std::vector<DistanceProfile> distance_series(const MarkovChain& chain, const DistributionVector& start,
                                             std::size_t t_max);

struct MixingEpsilons {
    double tv = 0.25;
    double l2 = 0.25;
    double sep = 1.0 / std::numbers::e;
    double entropy = 1.0 / std::numbers::e;

    double get(Metric m) const;
};

struct MixingOptions {
    std::size_t max_horizon = std::size_t{1} << 17;
    StartSet starts;
};

struct MixingTimes {
    std::size_t tau_tv = 0;
    std::size_t tau_2 = 0;
    std::size_t tau_sep = 0;
    std::size_t tau_ent = 0;
    MixingEpsilons epsilons;

    std::size_t get(Metric m) const;
};

/// Thrown when a distance stops decreasing (periodicity) or the horizon is
/// reached before it falls below its threshold.
class HorizonExceededError : public Error {
public:
    HorizonExceededError(const std::string& what, DistanceProfile last)
        : Error(ErrorKind::HorizonExceeded, what), last_(last) {}
    const DistanceProfile& last_profile() const noexcept { return last_; }

private:
    DistanceProfile last_;
};

/// Minimal t such that the worst-start distance is <= eps at every time >= t.
/// Doubling search, then bisection over the memoized series once three
/// consecutive doubling samples decrease; otherwise a linear scan.
MixingTimes mixing_times(const MarkovChain& chain, const MixingEpsilons& eps = {},
                         const MixingOptions& options = {});
std::size_t mixing_time(const MarkovChain& chain, Metric metric, double eps,
                        const MixingOptions& options = {});

/// Mixing-time search over a precomputed, non-increasing-in-the-limit series.
/// Returns series.size() if no entry qualifies.
std::size_t threshold_time(std::span<const double> series, double eps);

struct CovarianceReport {
    double sigma1 = 0.0;
    double variance = 0.0;
    std::vector<double> covariance;   // Cov_pi(f(X_1), f(X_{1+t})), t = 0..t_max
    std::vector<double> bound;        // sigma1^t Var_pi(f)
    double max_violation = 0.0;       // max(covariance - bound), clamped at 0
    double min_slack = 0.0;           // min(bound - covariance) over t >= 1
    std::vector<std::string> warnings;
    bool passed = false;
};

/// Exact stationary autocovariance of f compared with sigma1^t Var(f).
CovarianceReport check_covariance_lemma(const MarkovChain& chain, std::span<const double> f,
                                        std::size_t t_max, double tolerance = 1e-10);

struct SepEntropyOptions {
    std::size_t t_max = 200;
    double epsilon = 0.1;           // entropy threshold used in the corollary checks
    double constant_c = 4.0;        // order-of-magnitude ceiling for the entropy/tv ratio
    MixingOptions mixing;
};

struct SepEntropyReport {
    double log_inv_pi_min = 0.0;
    // D(P^t(x,.)||pi) <= sep(x,t) log(1/pi_min), pointwise over x and t <= t_max.
    double proposition_max_violation = 0.0;
    double proposition_min_slack = 0.0;     // over t >= 1 with sep > 0
    bool proposition_passed = false;
    bool sep_monotone = false;
    bool sep_submultiplicative = false;
    double submultiplicative_max_violation = 0.0;

    // Entropy decay bounded by separation time.
    std::size_t tau_sep = 0;                // worst-start sep <= 1/e
    std::size_t tau_ent = 0;                // worst-start D <= epsilon
    double log_factor = 0.0;                // log log(1/pi_min) + log(1/epsilon)
    double sep_bound_literal = 0.0;         // tau_sep * log_factor
    std::size_t sep_bound_ceiling = 0;      // tau_sep * ceil(log_factor)
    bool sep_bound_literal_holds = false;
    bool sep_bound_passed = false;

    // Entropy versus total variation.
    std::size_t tau_tv_half_eps = 0;        // tau_tv(epsilon/2)
    std::size_t tau_tv_pinsker = 0;         // tau_tv(sqrt(epsilon/2))
    std::size_t tau_tv_half_e = 0;          // tau_tv(1/(2e))
    bool tv_lower_literal_holds = false;    // tau_tv(epsilon/2) <= tau_ent
    bool tv_lower_pinsker_passed = false;   // tau_tv(sqrt(epsilon/2)) <= tau_ent
    double ent_tv_ratio = 0.0;              // tau_ent / (tau_tv(1/2e) * log_factor)
    bool ent_tv_within_constant = false;

    std::vector<std::string> profile_failures;
    bool passed = false;
};

SepEntropyReport check_sep_entropy_bounds(const MarkovChain& chain, const SepEntropyOptions& options = {});

}  // namespace mixlab
