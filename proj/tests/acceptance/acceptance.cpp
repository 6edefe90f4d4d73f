// Checks every acceptance criterion and prints one PASS/FAIL line per
// criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/chain.hpp"
#include "mixlab/coverage.hpp"
#include "mixlab/lamplighter.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/verify.hpp"

using namespace mixlab;

namespace {

struct Verdict {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void record(int id, std::string title, bool pass, std::string detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << id << ". " << title << "\n       " << detail << std::endl;
    verdicts.push_back({id, std::move(title), pass, std::move(detail)});
}

const Assertion* find_assertion(const ExperimentReport& r, const std::string& name) {
    for (const auto& a : r.assertions) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

bool assertion_ok(const ExperimentReport& r, const std::string& name, std::ostringstream& detail) {
    const auto* a = find_assertion(r, name);
    if (a == nullptr) {
        detail << name << "=missing; ";
        return false;
    }
    detail << name << '=' << (a->passed ? "ok" : "FAILED");
    if (!a->detail.empty()) detail << " (" << a->detail << ')';
    detail << "; ";
    return a->passed;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

// Exact subset DP vs Monte Carlo for E[2^|S_t|]. Returns the MC means so the
// determinism check can compare them bit for bit.
struct DpMcResult {
    bool within = true;
    double worst_z = 0.0;
    std::vector<double> mc_means;
};

DpMcResult dp_vs_mc(const MarkovChain& chain, const std::vector<std::size_t>& grid, unsigned threads) {
    DpMcResult out;
    const auto start = DistributionVector::point_mass(chain.size(), 0);
    SubsetProcess dp(chain, start.probs, MarkRule::Target, true);
    McCoverageOptions mc;
    mc.replicates = 100'000;
    mc.seed = 1;
    mc.threads = threads;
    const auto cov = mc_coverage(chain, start, grid, mc);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        while (dp.time() < grid[g]) dp.advance();
        const double exact = theta_mgf(dp.unmarked_count_law(), 2.0);
        double sum = 0.0, sum_sq = 0.0;
        for (auto z : cov.unvisited[g]) {
            const double v = std::ldexp(1.0, static_cast<int>(z));
            sum += v;
            sum_sq += v * v;
        }
        const double r = static_cast<double>(cov.unvisited[g].size());
        const double mean = sum / r;
        const double var = std::max(0.0, (sum_sq - r * mean * mean) / (r - 1.0));
        const double se = std::sqrt(var / r);
        const double z = se > 0.0 ? std::abs(mean - exact) / se : (mean == exact ? 0.0 : INFINITY);
        out.worst_z = std::max(out.worst_z, z);
        if (z > 4.0) out.within = false;
        out.mc_means.push_back(mean);
    }
    return out;
}

std::vector<NamedChain> key_theorem_chains() {
    std::vector<NamedChain> chains;
    for (std::size_t n = 4; n <= 10; ++n) chains.push_back({"complete:" + std::to_string(n), build_complete(n, true)});
    for (std::size_t d = 3; d <= 6; ++d) {
        chains.push_back({"hypercube:" + std::to_string(d) + "/lazy", build_hypercube(d, 0.5)});
    }
    return chains;
}

KeyTheoremSuiteOptions key_theorem_options(unsigned threads) {
    KeyTheoremSuiteOptions o;
    o.params.theta = 2.0;
    o.params.a = 1.0;
    o.params.b = 1.0;
    o.params.c = 96.0;
    o.params.mc.replicates = 100'000;
    o.params.mc.seed = 1;
    o.params.mc.threads = threads;
    o.params.subset.threads = threads;
    return o;
}

InequalityOptions excursion_only(unsigned threads) {
    InequalityOptions o;
    o.t_max = 1;
    o.functions = 1;
    o.covariance_t_max = 1;
    o.threads = threads;
    o.excursion.trials = 100'000;
    return o;
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    const auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };

    // 1 and 3: the full exact suite on the default chain set.
    const auto chains = default_inequality_chains(7);
    InequalityOptions full;
    full.t_max = 200;
    full.functions = 50;
    full.covariance_t_max = 50;
    full.profile_tolerance = 1e-12;
    full.covariance_tolerance = 1e-10;
    full.excursion.trials = 100'000;
    auto t0 = clock::now();
    const auto suite = run_inequality_suite(chains, full);
    const double suite_seconds = seconds_since(t0);
    {
        std::ostringstream d;
        bool ok = assertion_ok(suite, "distance_inequalities", d);
        ok = assertion_ok(suite, "separation_monotone", d) && ok;
        ok = assertion_ok(suite, "separation_submultiplicative", d) && ok;
        d << chains.size() << " chains, " << fmt(suite_seconds, 3) << " s (limit 120)";
        record(1, "exact distance inequality suite", ok && suite_seconds < 120.0, d.str());
    }

    // 2: covariance decay, timed on its own.
    {
        InequalityOptions cov = full;
        cov.t_max = 1;
        cov.run_excursion = false;
        t0 = clock::now();
        const auto r = run_inequality_suite(chains, cov);
        const double secs = seconds_since(t0);
        std::ostringstream d;
        const bool ok = assertion_ok(r, "covariance_decay", d);
        d << fmt(secs, 3) << " s (limit 60)";
        record(2, "stationary covariance decay for 50 random functions", ok && secs < 60.0, d.str());
    }

    {
        std::ostringstream d;
        bool ok = assertion_ok(suite, "return_tail", d);
        ok = assertion_ok(suite, "half_coverage", d) && ok;
        record(3, "return-time tail and half-coverage by 4H", ok, d.str());
    }

    // 4: reduction against the explicitly built wreath chain.
    {
        struct Case {
            std::size_t n, m;
        };
        const std::vector<Case> cases{{3, 2}, {4, 2}, {4, 3}, {3, 4}};
        double worst = 0.0;
        for (const auto& c : cases) {
            for (auto conv : {LampConvention::BothEndpoints, LampConvention::RandomizeThenMove,
                              LampConvention::MoveThenRandomize}) {
                const auto base = build_cycle(c.n, 0.0);
                const LampSpec spec{c.m, conv};
                const auto wreath = build_wreath(base, spec);
                const auto& big = wreath.explicit_chain();
                const auto explicit_series =
                    distance_series(big, DistributionVector::point_mass(big.size(), wreath.zero_lamps_index(0)), 40);
                const auto reduced = reduced_distance_series(base, spec, 0, 40);
                for (std::size_t t = 0; t <= 40; ++t) {
                    const auto& a = explicit_series[t];
                    const auto& b = reduced[t];
                    for (double diff : {a.tv - b.tv, a.l2 - b.l2, a.sep - b.sep, a.entropy - b.entropy}) {
                        worst = std::max(worst, std::abs(diff));
                    }
                }
            }
        }
        record(4, "reduced wreath-chain metrics equal the explicit chain", worst <= 1e-10,
               "max |difference| " + fmt(worst, 3) + " over 4 cases x 3 conventions, t = 0..40 (limit 1e-10)");
    }

    // 5: DP vs MC on C_6 and the 3-dim lazy hypercube.
    const std::vector<std::size_t> grid{2, 5, 10, 20, 40};
    const auto c6 = build_cycle(6, 0.0);
    const auto q3 = build_hypercube(3, 0.5);
    const auto dpmc_c6 = dp_vs_mc(c6, grid, 1);
    const auto dpmc_q3 = dp_vs_mc(q3, grid, 1);
    record(5, "Monte Carlo E[2^|S_t|] within 4 s.e. of the subset DP", dpmc_c6.within && dpmc_q3.within,
           "worst |z|: C_6 " + fmt(dpmc_c6.worst_z, 3) + ", Q_3 lazy " + fmt(dpmc_q3.worst_z, 3));

    // 6: key theorem instances.
    const auto key = run_key_theorem_instances(key_theorem_chains(), key_theorem_options(1));
    {
        std::ostringstream d;
        bool ok = assertion_ok(key, "below_1_21", d);
        double worst = 0.0;
        for (const auto& row : key.rows) {
            const auto& v = row.contains("mgf_ci_hi") ? row["mgf_ci_hi"] : row["mgf"];
            if (v.is_number()) worst = std::max(worst, v.get<double>());
        }
        d << "largest E[2^|S_t'|] (upper CI in MC mode) " << fmt(worst, 5);
        record(6, "key theorem instances below 1.21", ok, d.str());
    }

    // 7: scaling band on lazy hypercubes 3..8.
    L2ScalingOptions t1;
    t1.threads = 1;
    const auto scaling = run_l2_scaling(t1);
    {
        std::ostringstream d;
        const bool ok = assertion_ok(scaling, "ratio_band", d);
        d << fmt(scaling.wall_seconds, 3) << " s (limit 1200)";
        record(7, "lamplighter L2 mixing ratio stays within a factor 8", ok && scaling.wall_seconds < 1200.0, d.str());
    }

    // 8: m-lamp cycle separation.
    {
        const auto ex = run_example_separation();
        std::ostringstream d;
        bool ok = assertion_ok(ex, "tv_constant_in_m", d);
        ok = assertion_ok(ex, "l2_increasing_in_m", d) && ok;
        ok = assertion_ok(ex, "ent_tv_ratio_nondecreasing", d) && ok;
        ok = assertion_ok(ex, "ent_tv_loglog_bound", d) && ok;
        if (ex.summary.contains("c_prime")) d << "C' = " << ex.summary["c_prime"].dump();
        record(8, "m-lamp cycle separation of tv, entropy and L2 mixing", ok, d.str());
    }

    // 9: coupon-collector cross-check.
    CouponOptions coupon;
    coupon.tstar.mc.threads = 1;
    const auto cc = run_coupon_explorer(coupon);
    {
        std::ostringstream d;
        bool ok = assertion_ok(cc, "complete_graph_oracle", d);
        ok = assertion_ok(cc, "one_step_regime", d) && ok;
        ok = assertion_ok(cc, "large_gamma_regime", d) && ok;
        ok = assertion_ok(cc, "generic_regime", d) && ok;
        record(9, "t* on complete graphs matches inclusion-exclusion; regime bounds hold", ok, d.str());
    }

    // 10: rerun every Monte Carlo bearing check with another thread count.
    {
        const unsigned other = 3;
        std::vector<std::string> mismatched;
        if (dp_vs_mc(c6, grid, other).mc_means != dpmc_c6.mc_means) mismatched.push_back("dp-vs-mc C_6");
        if (dp_vs_mc(q3, grid, other).mc_means != dpmc_q3.mc_means) mismatched.push_back("dp-vs-mc Q_3");
        if (run_key_theorem_instances(key_theorem_chains(), key_theorem_options(other)).to_json(false).dump() !=
            key.to_json(false).dump()) {
            mismatched.push_back("key-theorem");
        }
        L2ScalingOptions t1b = t1;
        t1b.threads = other;
        if (run_l2_scaling(t1b).to_json(false).dump() != scaling.to_json(false).dump()) {
            mismatched.push_back("wreath-l2-scaling");
        }
        CouponOptions coupon_b = coupon;
        coupon_b.tstar.mc.threads = other;
        if (run_coupon_explorer(coupon_b).to_json(false).dump() != cc.to_json(false).dump()) {
            mismatched.push_back("coupon-explorer");
        }
        if (run_inequality_suite(chains, excursion_only(1)).to_json(false).dump() !=
            run_inequality_suite(chains, excursion_only(other)).to_json(false).dump()) {
            mismatched.push_back("half-coverage excursions");
        }
        std::string detail = "threads 1 vs " + std::to_string(other) + ": ";
        if (mismatched.empty()) {
            detail += "all outputs identical";
        } else {
            detail += "differences in";
            for (const auto& m : mismatched) detail += " " + m;
        }
        record(10, "Monte Carlo outputs independent of thread count", mismatched.empty(), detail);
    }

    int failed = 0;
    for (const auto& v : verdicts) failed += v.pass ? 0 : 1;
    std::cout << "\n" << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
