#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mixlab/chain.hpp"

namespace mixlab {

struct SubsetDpOptions {
    std::size_t max_states = 20;   // base chain size cap; memory is n * 2^n doubles per buffer
    unsigned threads = 0;          // used by the Target rule, which updates cells independently
};

/// Which endpoint of a step gets added to the marked set.
enum class MarkRule {
    Target,   // R + {y}
    Source,   // R + {x}
    Both,     // R + {x, y}
};

/// Exact forward law of (marked set, position) for the walk on a base chain.
/// Probabilities are stored at joint()[mask * n + pos].
class SubsetProcess {
public:
    /// `initial` is the law of X_0. With mark_initial the starting position is
    /// marked at time zero.
    SubsetProcess(const MarkovChain& chain, std::span<const double> initial, MarkRule rule,
                  bool mark_initial, const SubsetDpOptions& options = {});

    std::size_t size() const noexcept { return n_; }
    std::size_t time() const noexcept { return time_; }
    void advance();

    const std::vector<double>& joint() const noexcept { return joint_; }
    double prob(std::uint64_t mask, std::size_t pos) const { return joint_[mask * n_ + pos]; }
    double total_mass() const;
    /// Law of the number of unmarked states, indexed 0..n.
    std::vector<double> unmarked_count_law() const;

private:
    const MarkovChain* chain_;
    std::size_t n_;
    MarkRule rule_;
    unsigned threads_;
    std::size_t time_ = 0;
    std::vector<double> joint_;
    std::vector<double> next_;
    // Incoming edges per target state, for the pull update.
    std::vector<std::size_t> in_ptr_;
    std::vector<std::size_t> in_src_;
    std::vector<double> in_prob_;
};

/// Law of (X_t, visited set) with the start counted as visited at time zero.
struct ExactCoverage {
    std::size_t t = 0;
    std::size_t n = 0;
    std::vector<double> joint;            // [mask * n + pos]
    std::vector<double> unvisited_law;    // law of |S_t|, indexed 0..n
};

ExactCoverage exact_coverage(const MarkovChain& chain, const DistributionVector& start, std::size_t t,
                             const SubsetDpOptions& options = {});
ExactCoverage exact_coverage(const MarkovChain& chain, std::size_t start, std::size_t t,
                             const SubsetDpOptions& options = {});

struct OccupancyDpOptions {
    std::size_t max_states = 10;                     // base chain size cap
    std::size_t max_joint_states = std::size_t{1} << 24;
};

/// Exact law of visit counts capped at gamma, jointly with the position. The
/// start counts as one visit. Z_t = number of states visited fewer than gamma times.
class OccupancyProcess {
public:
    OccupancyProcess(const MarkovChain& chain, std::span<const double> initial, std::size_t gamma,
                     const OccupancyDpOptions& options = {});

    std::size_t time() const noexcept { return time_; }
    void advance();
    /// Law of Z_t^gamma, indexed 0..n.
    std::vector<double> undervisited_law() const;

private:
    const MarkovChain* chain_;
    std::size_t n_;
    std::size_t gamma_;
    std::size_t configs_;
    std::vector<std::size_t> power_;    // (gamma+1)^i
    std::size_t time_ = 0;
    std::vector<double> joint_;         // [config * n + pos]
    std::vector<double> next_;
};

/// E[theta^K] for a law of K on 0..n, summed in log-sum-exp form.
double theta_mgf(std::span<const double> law, double theta);
double log_theta_mgf(std::span<const double> law, double theta);
/// E[theta^K] - 1 computed directly, accurate when the value is close to 1.
double theta_mgf_excess(std::span<const double> law, double theta);

struct BootstrapOptions {
    std::size_t resamples = 2000;
    double level = 0.95;
    std::uint64_t seed = 0x5eedb007;
};

struct MgfEstimate {
    double value = 0.0;         // plug-in mean of theta^K
    double log_value = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0;         // percentile bootstrap
    double ci_hi = 0.0;
    std::size_t replicates = 0;
};

/// Plug-in E[theta^K] from samples of K with a bootstrap interval. Resampling
/// is multinomial over the histogram of K, which is equivalent to resampling
/// replicates.
MgfEstimate theta_mgf(std::span<const std::uint32_t> samples, double theta,
                      const BootstrapOptions& bootstrap = {});

struct McCoverageOptions {
    std::size_t replicates = 100'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::size_t gamma = 1;
};

/// Per replicate, the time each state was first visited and the time of its
/// gamma-th visit (kNever if that did not happen within the horizon). The
/// start is visit number one at time zero.
class CoverageTrajectories {
public:
    static constexpr std::uint32_t kNever = std::numeric_limits<std::uint32_t>::max();

    CoverageTrajectories(std::size_t n, std::size_t replicates, std::size_t gamma, std::size_t horizon);

    std::size_t states() const noexcept { return n_; }
    std::size_t replicates() const noexcept { return replicates_; }
    std::size_t gamma() const noexcept { return gamma_; }
    std::size_t horizon() const noexcept { return horizon_; }

    /// |S_t| for replicate r.
    std::uint32_t unvisited(std::size_t r, std::size_t t) const;
    /// Z_t^gamma for replicate r.
    std::uint32_t undervisited(std::size_t r, std::size_t t) const;
    std::vector<std::uint32_t> unvisited_at(std::size_t t) const;
    std::vector<std::uint32_t> undervisited_at(std::size_t t) const;
    /// Time replicate r first had every state visited, or kNever.
    std::uint32_t cover_time(std::size_t r) const { return first_[r * n_ + n_ - 1]; }
    /// Largest recorded gamma-th visit time; the process is frozen after it.
    std::size_t last_event() const;

private:
    std::size_t n_;
    std::size_t replicates_;
    std::size_t gamma_;
    std::size_t horizon_;
    std::vector<std::uint32_t> first_;   // sorted per replicate after simulation
    std::vector<std::uint32_t> gamma_times_;   // empty when gamma <= 1
    friend CoverageTrajectories simulate_coverage(const MarkovChain&, const DistributionVector&,
                                                  std::size_t, const McCoverageOptions&);
};

/// Simulates every replicate until all states have gamma visits or the
/// horizon is reached. Replicate r uses replicate_engine(seed, r).
CoverageTrajectories simulate_coverage(const MarkovChain& chain, const DistributionVector& start,
                                       std::size_t horizon, const McCoverageOptions& options);

struct McCoverage {
    std::vector<std::size_t> t_grid;
    std::size_t gamma = 1;
    std::vector<std::vector<std::uint32_t>> unvisited;     // [grid index][replicate]
    std::vector<std::vector<std::uint32_t>> undervisited;  // Z_t^gamma
};

McCoverage mc_coverage(const MarkovChain& chain, const DistributionVector& start,
                       const std::vector<std::size_t>& t_grid, const McCoverageOptions& options = {});

enum class EstimateMode { Auto, Exact, MonteCarlo };
std::string_view to_string(EstimateMode mode);

struct TStarOptions {
    EstimateMode mode = EstimateMode::Auto;
    std::size_t gamma = 1;
    std::size_t max_horizon = std::size_t{1} << 22;
    SubsetDpOptions subset;
    OccupancyDpOptions occupancy;
    McCoverageOptions mc;
    BootstrapOptions bootstrap;
};

struct TStarResult {
    std::size_t t_star = 0;
    bool exact = false;
    double value = 0.0;           // E[theta^Z] at t_star
    // Monte Carlo only: first t whose lower / upper bootstrap bound is <= 1 + delta.
    std::size_t t_lower = 0;
    std::size_t t_upper = 0;
    double confidence = 0.0;
};

/// Smallest t with E[theta^{Z_t^gamma}] <= 1 + delta (Z^1 = |S_t|). Exact mode
/// marches the subset DP (gamma = 1) or the capped-count DP (gamma >= 2).
TStarResult find_t_star(const MarkovChain& chain, const DistributionVector& start, double theta,
                        double delta, const TStarOptions& options = {});
TStarResult find_t_star(const MarkovChain& chain, double theta, double delta,
                        const TStarOptions& options = {});

struct KeyTheoremParams {
    double theta = 2.0;
    double a = 1.0;
    double b = 1.0;
    double c = 96.0;          // universal constant; 6 * 16 in the proof
    double c1 = 0.0;          // hitting-time constant; 0 derives max(1, H / n)
    std::size_t burn_in_horizon = std::size_t{1} << 16;
    EstimateMode mode = EstimateMode::Auto;
    SubsetDpOptions subset;
    McCoverageOptions mc;
    BootstrapOptions bootstrap;
};

struct KeyTheoremReport {
    bool preconditions_met = false;
    std::vector<std::string> precondition_failures;

    std::size_t n = 0;
    double t_rel = 0.0;
    double max_hitting = 0.0;
    double c1 = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    std::size_t t_prime = 0;

    std::size_t tau_tv = 0;
    std::size_t burn_in = 0;         // steps actually run before time zero
    bool burn_in_extended = false;   // 4 tau_tv was not enough for mu >= pi/2
    std::size_t burn_in_start = 0;
    double min_mu_over_pi = 0.0;

    bool exact = false;
    // Time at which the MGF below was evaluated. The exact path stops at t_min:
    // |S_t| never grows, so the value at t' is at most the value reported here.
    std::size_t evaluated_at = 0;
    double mgf = 0.0;                // E[theta^|S_t|] at evaluated_at
    double mgf_excess = 0.0;         // E[theta^|S_t|] - 1
    double mgf_ci_lo = 0.0;
    double mgf_ci_hi = 0.0;
    double bound = 0.0;              // 1 + delta + delta^2 + delta^9
    bool within_bound = false;
    bool below_1_21 = false;
    std::size_t t_min = 0;           // first t with E[theta^|S_t|] <= bound
    double c_min = 0.0;              // constant c that would make t' equal t_min
    bool passed = false;
};

/// Instance check of the cover-time MGF bound at t' = C1 n T_rel log theta +
/// C2 n log n, started from a burnt-in law mu >= pi/2.
KeyTheoremReport verify_key_theorem(const MarkovChain& chain, const KeyTheoremParams& params = {});

/// 1 + d + d^2 + d^9.
double key_theorem_bound(double delta);

struct ChainFamily {
    std::string builder;            // cycle, torus2d, hypercube, complete, complete-noloops
    std::vector<std::size_t> sizes; // builder parameter per rung
    double laziness = 0.0;
};

MarkovChain build_family_member(const ChainFamily& family, std::size_t size);

struct ExplorerRow {
    std::size_t size_param = 0;
    std::size_t n = 0;
    double t_rel = 0.0;
    double max_hitting = 0.0;
    std::size_t tau_tv = 0;
    std::size_t f_measured = 0;
    bool exact = false;
    double ratio = 0.0;              // F / [n (gamma + T_rel + log n)]
    double regime_large_gamma = 0.0; // gamma n, meaningful when gamma >= n log theta
    double regime_one_step = 0.0;    // (gamma + log n) n
    double regime_generic = 0.0;     // (gamma + log n) n T_tv
};

struct ExplorerTable {
    std::vector<ExplorerRow> rows;
    double ratio_spread = 0.0;       // max ratio / min ratio
    bool growth_flag = false;        // ratios strictly increase along the ladder and double
};

ExplorerTable conjecture_explorer(const ChainFamily& family, double theta, std::size_t gamma, double delta,
                                  const TStarOptions& options = {});

/// Smallest t such that n (theta - 1) Pr[Bin(t, 1/n) < gamma] <= log(1 + delta).
/// For the walk on the complete graph with self-loops the visit counts are
/// negatively associated, so this t bounds F from above.
std::size_t coupon_collector_bound(std::size_t n, double theta, std::size_t gamma, double delta);

}  // namespace mixlab
