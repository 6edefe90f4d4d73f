#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixlab/chain.hpp"
#include "mixlab/coverage.hpp"
#include "mixlab/lamplighter.hpp"
#include "mixlab/passage.hpp"

namespace mixlab {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

struct Assertion {
    std::string name;
    std::string claim;     // the mathematical statement being checked, in words
    bool passed = false;
    std::string detail;    // measured values behind the verdict
};

/// Result of one experiment. Everything except wall_seconds is a function of
/// (id, config, seeds), so two runs serialize to identical JSON when the wall
/// time is left out.
struct ExperimentReport {
    std::string id;
    std::string family;
    std::vector<std::size_t> sizes;
    Json config = Json::object();
    Json seeds = Json::object();
    Json rows = Json::array();        // one object per size / parameter value
    Json summary = Json::object();    // fitted ratios, spreads, constants
    std::vector<Assertion> assertions;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;

    bool passed() const;
    void check(std::string name, std::string claim, bool ok, std::string detail = {});
    Json to_json(bool include_wall_time = true) const;
    /// Rows as CSV, columns in the order of the first row's keys.
    std::string rows_csv() const;
};

ExperimentReport report_from_json(const Json& j);

// ---------------------------------------------------------------------------

struct L2ScalingOptions {
    std::string builder = "hypercube";
    std::vector<std::size_t> sizes{3, 4, 5, 6, 7, 8};
    double laziness = 0.5;
    std::size_t m = 2;
    double band = 8.0;                 // allowed max/min ratio across the ladder
    double kappa_max = 4.0;            // H <= kappa |G| admissibility threshold
    std::size_t exact_cap = 16;        // largest base handled by the exact reduction
    std::size_t replicates = 100'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// Ratio tau_2(wreath) / [|G| (T_rel + log |G|)] across a size ladder. The
/// exact reduction is used up to exact_cap states; above it tau_2(wreath) is
/// replaced by tau_2(G) + t*, with t* = min{t : E[2^{|S_t|}] <= 2} by seeded
/// Monte Carlo. Every builder family is vertex-transitive, so one start vertex
/// suffices for the worst case.
ExperimentReport run_l2_scaling(const L2ScalingOptions& options = {});

struct ExampleOptions {
    std::size_t n = 6;
    double laziness = 0.5;
    std::vector<std::size_t> m_list{2, 4, 16, 256};
    LampConvention convention = LampConvention::BothEndpoints;
    double ent_constant = 2.0;         // ceiling for tau_ent / (tau_tv log log N)
};

/// m-lamp cycle: tau_tv, tau_ent, tau_2 of the wreath chain per m, exact.
ExperimentReport run_example_separation(const ExampleOptions& options = {});

struct TorusRemarkOptions {
    std::vector<std::size_t> sides{3, 4, 5, 6};
    double laziness = 0.5;
    std::size_t m = 2;
    std::size_t replicates = 20'000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::size_t exact_cap = 16;
};

/// Trend-level growth of H, the cover time and tau_ent on 2D tori. Only the
/// exact-vs-Monte-Carlo cover-time agreement is asserted.
ExperimentReport run_torus_entropy_remark(const TorusRemarkOptions& options = {});

struct NamedChain {
    std::string name;
    MarkovChain chain;
};

/// Lazy cycles 3..10, lazy hypercubes 2..6, complete graphs 3..8 and 20
/// seeded random reversible chains with at most 12 states.
std::vector<NamedChain> default_inequality_chains(std::uint64_t seed = 7);

struct InequalityOptions {
    std::size_t t_max = 200;
    std::size_t functions = 50;
    std::size_t covariance_t_max = 50;
    double covariance_tolerance = 1e-10;
    double profile_tolerance = 1e-12;
    bool run_excursion = true;
    ExcursionOptions excursion;
    std::uint64_t seed = 7;
    unsigned threads = 0;
};

/// Exact inequality checks over a chain set: the distance-profile chain from
/// every start up to t_max, separation monotonicity and submultiplicativity,
/// the stationary covariance decay for random functions, and the return-tail
/// and half-coverage statements on uniform-stationary chains.
ExperimentReport run_inequality_suite(const std::vector<NamedChain>& chains, const InequalityOptions& options = {});

struct KeyTheoremSuiteOptions {
    KeyTheoremParams params;
};

/// verify_key_theorem over a chain set; asserts E[theta^|S_t'|] < 1.21 when
/// a = b = 1.
ExperimentReport run_key_theorem_instances(const std::vector<NamedChain>& chains,
                                           const KeyTheoremSuiteOptions& options = {});

struct CouponOptions {
    std::vector<std::size_t> complete_sizes{3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::size_t> gammas{1, 2, 3};
    std::size_t gamma_cap_n = 7;        // occupancy DP sizes used for gamma >= 2
    std::vector<ChainFamily> generic_families{{"cycle", {4, 6, 8, 10, 12}, 0.5},
                                              {"hypercube", {2, 3, 4, 5}, 0.5},
                                              {"torus2d", {3, 4}, 0.5}};
    double regime_constant = 2.0;       // checked constant for the large-gamma and generic columns
    TStarOptions tstar;
};

/// Smallest t with sum_k C(n-1,k) (theta-1)^k (n-k)^t <= (1+delta) n^t for
/// integer theta and integer 1+delta, in exact 128-bit arithmetic. This is
/// t* for the complete graph with self-loops. Throws Capacity on overflow.
std::size_t complete_graph_tstar_exact(std::size_t n, std::uint64_t theta, std::uint64_t one_plus_delta);

/// t* against the exact inclusion-exclusion value on complete graphs, the
/// negative-association coupon bound, and the large-gamma and generic regime
/// columns as bounds on the measured F.
ExperimentReport run_coupon_explorer(const CouponOptions& options = {});

// ---------------------------------------------------------------------------
// Goldens

struct GoldenComparison {
    bool found = false;
    bool matches = false;
    std::vector<std::string> differences;
};

/// Golden files hold to_json(false) of a report. Numbers compare within a
/// relative tolerance; everything else compares exactly.
GoldenComparison compare_golden(const ExperimentReport& report, const std::filesystem::path& file,
                                double rel_tol = 1e-9);
void freeze_golden(const ExperimentReport& report, const std::filesystem::path& file);
/// MIXLAB_CACHE_DIR if set, else `fallback`.
std::filesystem::path golden_dir(const std::filesystem::path& fallback);

/// Runs independent experiment jobs over a small worker pool. Results are
/// returned in job order.
std::vector<ExperimentReport> run_jobs(const std::vector<std::function<ExperimentReport()>>& jobs,
                                       unsigned threads = 0);

}  // namespace mixlab
