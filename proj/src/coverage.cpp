#include "mixlab/coverage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "mixlab/error.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/passage.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/spectral.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

namespace {

// Relative slack on 1 + delta so that exact ties (e.g. E = 2 at delta = 1)
// are not lost to rounding in the DP.
constexpr double kThresholdSlack = 1e-12;

bool meets(double excess, double delta) { return excess <= delta + kThresholdSlack * (1.0 + delta); }

void check_start(const MarkovChain& chain, std::span<const double> initial) {
    if (initial.size() != chain.size()) {
        throw Error(ErrorKind::DimensionMismatch, "start distribution has the wrong size");
    }
}

// Smallest t in [0, limit] with pred(t), assuming pred is monotone (false then
// true). Doubling then bisection. Returns limit + 1 if pred(limit) is false.
template <class Pred>
std::size_t first_true(Pred&& pred, std::size_t limit) {
    if (pred(0)) return 0;
    std::size_t lo = 0;
    std::size_t hi = 1;
    while (true) {
        if (hi >= limit) {
            hi = limit;
            if (!pred(hi)) return limit + 1;
            break;
        }
        if (pred(hi)) break;
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (pred(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double binomial_cdf_below(std::size_t t, double p, std::size_t gamma) {
    // Pr[Bin(t, p) < gamma], summed in log space.
    if (gamma == 0) return 0.0;
    if (gamma > t) return 1.0;
    if (p >= 1.0) return 0.0;
    double total = 0.0;
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    for (std::size_t j = 0; j < gamma; ++j) {
        const double lchoose = std::lgamma(static_cast<double>(t) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
                               std::lgamma(static_cast<double>(t - j) + 1.0);
        total += std::exp(lchoose + static_cast<double>(j) * lp + static_cast<double>(t - j) * lq);
    }
    return std::min(total, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Subset DP

SubsetProcess::SubsetProcess(const MarkovChain& chain, std::span<const double> initial, MarkRule rule,
                             bool mark_initial, const SubsetDpOptions& options)
    : chain_(&chain), n_(chain.size()), rule_(rule), threads_(options.threads) {
    check_start(chain, initial);
    if (n_ > options.max_states || n_ >= 63) {
        throw Error(ErrorKind::Capacity, "subset DP needs 2^" + std::to_string(n_) +
                                             " masks; the cap is " + std::to_string(options.max_states) +
                                             " states, use mc_coverage instead");
    }
    const std::size_t masks = std::size_t{1} << n_;
    joint_.assign(masks * n_, 0.0);
    next_.assign(joint_.size(), 0.0);
    for (std::size_t x = 0; x < n_; ++x) {
        const std::size_t mask = mark_initial ? (std::size_t{1} << x) : 0;
        joint_[mask * n_ + x] += initial[x];
    }
    if (rule_ == MarkRule::Target) {
        std::vector<std::vector<std::pair<std::size_t, double>>> incoming(n_);
        for (std::size_t x = 0; x < n_; ++x) {
            auto targets = chain.row_targets(x);
            auto probs = chain.row_probs(x);
            for (std::size_t k = 0; k < targets.size(); ++k) incoming[targets[k]].push_back({x, probs[k]});
        }
        in_ptr_.push_back(0);
        for (const auto& edges : incoming) {
            for (auto [x, p] : edges) {
                in_src_.push_back(x);
                in_prob_.push_back(p);
            }
            in_ptr_.push_back(in_src_.size());
        }
    }
}

void SubsetProcess::advance() {
    const std::size_t masks = std::size_t{1} << n_;
    if (rule_ == MarkRule::Target) {
        // The only masks that lead to (nm, y) are nm and nm without y, so every
        // cell is a sum over the in-edges of y and can be filled independently.
        constexpr std::size_t kBlock = 1024;
        const std::size_t blocks = (masks + kBlock - 1) / kBlock;
        parallel_for(blocks, threads_, [&](std::size_t b) {
            const std::size_t end = std::min(masks, (b + 1) * kBlock);
            for (std::size_t nm = b * kBlock; nm < end; ++nm) {
                double* out = next_.data() + nm * n_;
                for (std::size_t y = 0; y < n_; ++y) {
                    const std::size_t bit = std::size_t{1} << y;
                    if (!(nm & bit)) {
                        out[y] = 0.0;
                        continue;
                    }
                    const double* same = joint_.data() + nm * n_;
                    const double* fewer = joint_.data() + (nm ^ bit) * n_;
                    double acc = 0.0;
                    for (std::size_t e = in_ptr_[y]; e < in_ptr_[y + 1]; ++e) {
                        const std::size_t x = in_src_[e];
                        acc += in_prob_[e] * (same[x] + fewer[x]);
                    }
                    out[y] = acc;
                }
            }
        });
        joint_.swap(next_);
        ++time_;
        return;
    }
    std::fill(next_.begin(), next_.end(), 0.0);
    const bool mark_source = rule_ == MarkRule::Source || rule_ == MarkRule::Both;
    const bool mark_target = rule_ == MarkRule::Target || rule_ == MarkRule::Both;
    for (std::size_t mask = 0; mask < masks; ++mask) {
        const double* row = joint_.data() + mask * n_;
        for (std::size_t x = 0; x < n_; ++x) {
            const double p = row[x];
            if (p == 0.0) continue;
            const std::size_t base = mark_source ? (mask | (std::size_t{1} << x)) : mask;
            auto targets = chain_->row_targets(x);
            auto probs = chain_->row_probs(x);
            for (std::size_t k = 0; k < targets.size(); ++k) {
                const std::size_t y = targets[k];
                const std::size_t nm = mark_target ? (base | (std::size_t{1} << y)) : base;
                next_[nm * n_ + y] += p * probs[k];
            }
        }
    }
    joint_.swap(next_);
    ++time_;
}

double SubsetProcess::total_mass() const {
    double s = 0.0;
    for (double p : joint_) s += p;
    return s;
}

std::vector<double> SubsetProcess::unmarked_count_law() const {
    std::vector<double> law(n_ + 1, 0.0);
    const std::size_t masks = std::size_t{1} << n_;
    for (std::size_t mask = 0; mask < masks; ++mask) {
        double s = 0.0;
        for (std::size_t x = 0; x < n_; ++x) s += joint_[mask * n_ + x];
        law[n_ - static_cast<std::size_t>(std::popcount(mask))] += s;
    }
    return law;
}

ExactCoverage exact_coverage(const MarkovChain& chain, const DistributionVector& start, std::size_t t,
                             const SubsetDpOptions& options) {
    SubsetProcess dp(chain, start.probs, MarkRule::Target, true, options);
    for (std::size_t s = 0; s < t; ++s) dp.advance();
    ExactCoverage out;
    out.t = t;
    out.n = chain.size();
    out.unvisited_law = dp.unmarked_count_law();
    out.joint = dp.joint();
    return out;
}

ExactCoverage exact_coverage(const MarkovChain& chain, std::size_t start, std::size_t t,
                             const SubsetDpOptions& options) {
    if (start >= chain.size()) throw Error(ErrorKind::DimensionMismatch, "start state out of range");
    return exact_coverage(chain, DistributionVector::point_mass(chain.size(), start), t, options);
}

// ---------------------------------------------------------------------------
// Capped visit counts

OccupancyProcess::OccupancyProcess(const MarkovChain& chain, std::span<const double> initial, std::size_t gamma,
                                   const OccupancyDpOptions& options)
    : chain_(&chain), n_(chain.size()), gamma_(gamma) {
    check_start(chain, initial);
    if (n_ > options.max_states) {
        throw Error(ErrorKind::Capacity, "capped-count DP is limited to " + std::to_string(options.max_states) +
                                             " states; use mc_coverage instead");
    }
    power_.resize(n_ + 1);
    power_[0] = 1;
    for (std::size_t i = 0; i < n_; ++i) {
        if (power_[i] > options.max_joint_states) {
            throw Error(ErrorKind::Capacity, "capped-count DP state space too large");
        }
        power_[i + 1] = power_[i] * (gamma_ + 1);
    }
    configs_ = power_[n_];
    if (configs_ * n_ > options.max_joint_states) {
        throw Error(ErrorKind::Capacity, "capped-count DP needs " + std::to_string(configs_ * n_) +
                                             " cells, above the configured cap");
    }
    joint_.assign(configs_ * n_, 0.0);
    next_.assign(joint_.size(), 0.0);
    for (std::size_t x = 0; x < n_; ++x) {
        const std::size_t config = gamma_ >= 1 ? power_[x] : 0;
        joint_[config * n_ + x] += initial[x];
    }
}

void OccupancyProcess::advance() {
    std::fill(next_.begin(), next_.end(), 0.0);
    const std::size_t base = gamma_ + 1;
    for (std::size_t config = 0; config < configs_; ++config) {
        const double* row = joint_.data() + config * n_;
        for (std::size_t x = 0; x < n_; ++x) {
            const double p = row[x];
            if (p == 0.0) continue;
            auto targets = chain_->row_targets(x);
            auto probs = chain_->row_probs(x);
            for (std::size_t k = 0; k < targets.size(); ++k) {
                const std::size_t y = targets[k];
                const std::size_t count = (config / power_[y]) % base;
                const std::size_t nc = count < gamma_ ? config + power_[y] : config;
                next_[nc * n_ + y] += p * probs[k];
            }
        }
    }
    joint_.swap(next_);
    ++time_;
}

std::vector<double> OccupancyProcess::undervisited_law() const {
    std::vector<double> law(n_ + 1, 0.0);
    const std::size_t base = gamma_ + 1;
    for (std::size_t config = 0; config < configs_; ++config) {
        double s = 0.0;
        for (std::size_t x = 0; x < n_; ++x) s += joint_[config * n_ + x];
        if (s == 0.0) continue;
        std::size_t z = 0;
        std::size_t c = config;
        for (std::size_t i = 0; i < n_; ++i) {
            if (c % base < gamma_) ++z;
            c /= base;
        }
        law[z] += s;
    }
    return law;
}

// ---------------------------------------------------------------------------
// Moment generating functions

double log_theta_mgf(std::span<const double> law, double theta) {
    const double lt = std::log(theta);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < law.size(); ++k) {
        if (law[k] > 0.0) top = std::max(top, std::log(law[k]) + static_cast<double>(k) * lt);
    }
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (std::size_t k = 0; k < law.size(); ++k) {
        if (law[k] > 0.0) s += std::exp(std::log(law[k]) + static_cast<double>(k) * lt - top);
    }
    return top + std::log(s);
}

double theta_mgf(std::span<const double> law, double theta) {
    if (theta < 1.0) throw Error(ErrorKind::Validation, "theta must be at least 1");
    if (theta == 1.0) return 1.0;
    return std::exp(log_theta_mgf(law, theta));
}

double theta_mgf_excess(std::span<const double> law, double theta) {
    if (theta == 1.0) return 0.0;
    const double lt = std::log(theta);
    double s = 0.0;
    for (std::size_t k = 1; k < law.size(); ++k) {
        if (law[k] > 0.0) s += law[k] * std::expm1(static_cast<double>(k) * lt);
    }
    return s;
}

MgfEstimate theta_mgf(std::span<const std::uint32_t> samples, double theta, const BootstrapOptions& bootstrap) {
    if (theta < 1.0) throw Error(ErrorKind::Validation, "theta must be at least 1");
    MgfEstimate est;
    est.replicates = samples.size();
    if (samples.empty()) throw Error(ErrorKind::Validation, "no samples");
    std::uint32_t top = *std::max_element(samples.begin(), samples.end());
    std::vector<std::uint64_t> hist(static_cast<std::size_t>(top) + 1, 0);
    for (auto s : samples) ++hist[s];
    const double r = static_cast<double>(samples.size());
    const double lt = std::log(theta);

    auto log_mean = [&](const std::vector<std::uint64_t>& counts) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] > 0) m = std::max(m, std::log(static_cast<double>(counts[k])) + static_cast<double>(k) * lt);
        }
        double s = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] > 0) s += std::exp(std::log(static_cast<double>(counts[k])) + static_cast<double>(k) * lt - m);
        }
        return m + std::log(s) - std::log(r);
    };

    est.log_value = log_mean(hist);
    est.value = std::exp(est.log_value);
    if (samples.size() > 1) {
        double var = 0.0;
        for (std::size_t k = 0; k < hist.size(); ++k) {
            const double d = std::exp(static_cast<double>(k) * lt) - est.value;
            var += static_cast<double>(hist[k]) * d * d;
        }
        est.std_error = std::sqrt(var / (r - 1.0) / r);
    }

    // Multinomial resampling of the histogram via sequential binomials.
    std::mt19937_64 engine(splitmix64(bootstrap.seed));
    std::vector<double> stats;
    stats.reserve(bootstrap.resamples);
    std::vector<std::uint64_t> counts(hist.size());
    for (std::size_t b = 0; b < bootstrap.resamples; ++b) {
        std::uint64_t left = samples.size();
        double left_mass = 1.0;
        for (std::size_t k = 0; k < hist.size(); ++k) {
            if (left == 0 || hist[k] == 0) {
                counts[k] = 0;
                continue;
            }
            const double pk = static_cast<double>(hist[k]) / r;
            const double q = std::clamp(pk / left_mass, 0.0, 1.0);
            std::binomial_distribution<std::uint64_t> draw(left, q);
            counts[k] = k + 1 == hist.size() ? left : draw(engine);
            left -= counts[k];
            left_mass -= pk;
        }
        stats.push_back(std::exp(log_mean(counts)));
    }
    if (!stats.empty()) {
        std::sort(stats.begin(), stats.end());
        const double tail = (1.0 - bootstrap.level) / 2.0;
        auto at = [&](double q) {
            const double pos = q * static_cast<double>(stats.size() - 1);
            return stats[static_cast<std::size_t>(std::llround(pos))];
        };
        est.ci_lo = at(tail);
        est.ci_hi = at(1.0 - tail);
    } else {
        est.ci_lo = est.ci_hi = est.value;
    }
    return est;
}

// ---------------------------------------------------------------------------
// Monte Carlo

CoverageTrajectories::CoverageTrajectories(std::size_t n, std::size_t replicates, std::size_t gamma,
                                           std::size_t horizon)
    : n_(n), replicates_(replicates), gamma_(gamma), horizon_(horizon),
      first_(n * replicates, kNever) {
    if (gamma > 1) gamma_times_.assign(n * replicates, kNever);
}

std::uint32_t CoverageTrajectories::unvisited(std::size_t r, std::size_t t) const {
    const auto* row = first_.data() + r * n_;
    const auto seen = std::upper_bound(row, row + n_, static_cast<std::uint32_t>(std::min<std::size_t>(t, kNever - 1))) - row;
    return static_cast<std::uint32_t>(n_ - static_cast<std::size_t>(seen));
}

std::uint32_t CoverageTrajectories::undervisited(std::size_t r, std::size_t t) const {
    if (gamma_ == 0) return 0;
    if (gamma_ == 1) return unvisited(r, t);
    const auto* row = gamma_times_.data() + r * n_;
    const auto done = std::upper_bound(row, row + n_, static_cast<std::uint32_t>(std::min<std::size_t>(t, kNever - 1))) - row;
    return static_cast<std::uint32_t>(n_ - static_cast<std::size_t>(done));
}

std::vector<std::uint32_t> CoverageTrajectories::unvisited_at(std::size_t t) const {
    std::vector<std::uint32_t> out(replicates_);
    for (std::size_t r = 0; r < replicates_; ++r) out[r] = unvisited(r, t);
    return out;
}

std::vector<std::uint32_t> CoverageTrajectories::undervisited_at(std::size_t t) const {
    std::vector<std::uint32_t> out(replicates_);
    for (std::size_t r = 0; r < replicates_; ++r) out[r] = undervisited(r, t);
    return out;
}

std::size_t CoverageTrajectories::last_event() const {
    const auto& times = gamma_ <= 1 ? first_ : gamma_times_;
    std::size_t last = 0;
    for (auto v : times) {
        if (v != kNever) last = std::max<std::size_t>(last, v);
    }
    return last;
}

CoverageTrajectories simulate_coverage(const MarkovChain& chain, const DistributionVector& start,
                                       std::size_t horizon, const McCoverageOptions& options) {
    check_start(chain, start.probs);
    if (options.replicates == 0) throw Error(ErrorKind::Validation, "replicates must be at least 1");
    if (horizon >= CoverageTrajectories::kNever) throw Error(ErrorKind::Capacity, "horizon too large");
    const std::size_t n = chain.size();
    const std::size_t gamma = options.gamma;
    CoverageTrajectories out(n, options.replicates, gamma, horizon);
    parallel_for(options.replicates, options.threads, [&](std::size_t r) {
        auto engine = replicate_engine(options.seed, r);
        std::uint32_t* first = out.first_.data() + r * n;
        std::uint32_t* nth = gamma > 1 ? out.gamma_times_.data() + r * n : nullptr;
        std::vector<std::uint32_t> count(n, 0);
        std::size_t done = 0;   // states with at least gamma visits
        auto visit = [&](std::size_t x, std::uint32_t t) {
            if (count[x] == 0) first[x] = t;
            ++count[x];
            if (count[x] == gamma) {
                if (nth) nth[x] = t;
                ++done;
            }
        };
        if (gamma == 0) done = n;
        std::size_t x = sample_state(start.probs, engine);
        visit(x, 0);
        for (std::size_t t = 1; t <= horizon && done < n; ++t) {
            x = sample_next(chain, x, engine);
            visit(x, static_cast<std::uint32_t>(t));
        }
        std::sort(first, first + n);
        if (nth) std::sort(nth, nth + n);
    });
    return out;
}

McCoverage mc_coverage(const MarkovChain& chain, const DistributionVector& start,
                       const std::vector<std::size_t>& t_grid, const McCoverageOptions& options) {
    if (!std::is_sorted(t_grid.begin(), t_grid.end())) {
        throw Error(ErrorKind::Validation, "t_grid must be sorted");
    }
    const std::size_t horizon = t_grid.empty() ? 0 : t_grid.back();
    auto traj = simulate_coverage(chain, start, horizon, options);
    McCoverage out;
    out.t_grid = t_grid;
    out.gamma = options.gamma;
    for (std::size_t t : t_grid) {
        out.unvisited.push_back(traj.unvisited_at(t));
        out.undervisited.push_back(traj.undervisited_at(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// t* search

std::string_view to_string(EstimateMode mode) {
    switch (mode) {
        case EstimateMode::Auto: return "auto";
        case EstimateMode::Exact: return "exact";
        case EstimateMode::MonteCarlo: return "mc";
    }
    return "?";
}

namespace {

bool exact_feasible(const MarkovChain& chain, std::size_t gamma, const TStarOptions& options) {
    const std::size_t n = chain.size();
    if (gamma <= 1) return n <= options.subset.max_states;
    if (n > options.occupancy.max_states) return false;
    double cells = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) cells *= static_cast<double>(gamma + 1);
    return cells <= static_cast<double>(options.occupancy.max_joint_states);
}

// Marches an exact DP and remembers E[theta^Z_t] - 1 for every t reached.
class ExactMgfSeries {
public:
    ExactMgfSeries(const MarkovChain& chain, std::span<const double> start, double theta, std::size_t gamma,
                   const TStarOptions& options)
        : theta_(theta) {
        if (gamma <= 1) {
            subset_.emplace(chain, start, MarkRule::Target, true, options.subset);
        } else {
            occupancy_.emplace(chain, start, gamma, options.occupancy);
        }
        excess_.push_back(current());
    }

    double excess(std::size_t t) {
        while (excess_.size() <= t) {
            if (subset_) subset_->advance();
            if (occupancy_) occupancy_->advance();
            excess_.push_back(current());
        }
        return excess_[t];
    }

private:
    double current() const {
        auto law = subset_ ? subset_->unmarked_count_law() : occupancy_->undervisited_law();
        return theta_mgf_excess(law, theta_);
    }

    double theta_;
    std::optional<SubsetProcess> subset_;
    std::optional<OccupancyProcess> occupancy_;
    std::vector<double> excess_;
};

}  // namespace

TStarResult find_t_star(const MarkovChain& chain, const DistributionVector& start, double theta, double delta,
                        const TStarOptions& options) {
    if (theta < 1.0) throw Error(ErrorKind::Validation, "theta must be at least 1");
    if (!(delta > 0.0)) throw Error(ErrorKind::Validation, "delta must be positive");
    check_start(chain, start.probs);
    TStarResult out;
    const std::size_t gamma = options.gamma;
    bool exact = options.mode == EstimateMode::Exact ||
                 (options.mode == EstimateMode::Auto && exact_feasible(chain, gamma, options));
    if (theta == 1.0 || gamma == 0) {
        out.exact = true;
        out.value = 1.0;
        return out;
    }
    if (exact) {
        ExactMgfSeries series(chain, start.probs, theta, gamma, options);
        const std::size_t t = first_true([&](std::size_t s) { return meets(series.excess(s), delta); },
                                         options.max_horizon);
        if (t > options.max_horizon) {
            throw Error(ErrorKind::HorizonExceeded, "E[theta^Z] still above 1 + delta at the horizon");
        }
        out.t_star = t;
        out.exact = true;
        out.value = 1.0 + series.excess(t);
        out.t_lower = out.t_upper = t;
        out.confidence = 1.0;
        return out;
    }

    McCoverageOptions mc = options.mc;
    mc.gamma = gamma;
    auto traj = simulate_coverage(chain, start, options.max_horizon, mc);
    const std::size_t limit = std::min(options.max_horizon, traj.last_event() + 1);
    auto samples_at = [&](std::size_t t) { return traj.undervisited_at(t); };
    auto point = [&](std::size_t t) {
        auto s = samples_at(t);
        BootstrapOptions none = options.bootstrap;
        none.resamples = 0;
        return theta_mgf(s, theta, none).value;
    };
    const double target = 1.0 + delta;
    const std::size_t t = first_true([&](std::size_t s) { return point(s) <= target * (1.0 + kThresholdSlack); },
                                     limit);
    if (t > limit) throw Error(ErrorKind::HorizonExceeded, "E[theta^Z] estimate still above 1 + delta at the horizon");
    out.t_star = t;
    out.value = point(t);
    auto bounds_at = [&](std::size_t s) { return theta_mgf(samples_at(s), theta, options.bootstrap); };
    out.t_lower = first_true([&](std::size_t s) { return bounds_at(s).ci_lo <= target; }, t);
    out.t_upper = first_true([&](std::size_t s) { return bounds_at(s).ci_hi <= target; }, limit);
    out.confidence = options.bootstrap.level;
    return out;
}

TStarResult find_t_star(const MarkovChain& chain, double theta, double delta, const TStarOptions& options) {
    return find_t_star(chain, DistributionVector::point_mass(chain.size(), 0), theta, delta, options);
}

// ---------------------------------------------------------------------------
// Key theorem instance check

double key_theorem_bound(double delta) {
    return 1.0 + delta + delta * delta + std::pow(delta, 9.0);
}

KeyTheoremReport verify_key_theorem(const MarkovChain& chain, const KeyTheoremParams& params) {
    KeyTheoremReport r;
    const std::size_t n = chain.size();
    r.n = n;
    const double nd = static_cast<double>(n);
    auto fail = [&](std::string why) { r.precondition_failures.push_back(std::move(why)); };

    if (params.theta < 2.0) fail("theta must be at least 2");
    if (!(params.a > 0.0) || !(params.b > 0.0)) fail("a and b must be positive");
    if (!chain.has_uniform_stationary(1e-10)) fail("stationary distribution is not uniform");
    if (!chain.reversible()) fail("chain is not reversible");

    const auto spec = analyze(chain);
    r.t_rel = spec.t_rel;
    if (!std::isfinite(r.t_rel)) fail("relaxation time is infinite");

    try {
        r.max_hitting = hitting_times(chain).max_hitting;
    } catch (const Error& e) {
        fail(std::string("maximal hitting time unavailable: ") + e.what());
    }
    r.c1 = params.c1 > 0.0 ? params.c1 : std::max(1.0, r.max_hitting / nd);
    if (r.c1 < 1.0) fail("c1 must be at least 1");
    if (r.max_hitting > r.c1 * nd * (1.0 + 1e-12)) fail("maximal hitting time exceeds c1 * n");

    const double log_theta = std::log(params.theta);
    r.C1 = 2.0 * params.c * r.c1 * r.c1 * (1.0 + params.a);
    r.C2 = params.c * r.c1 * r.c1 * (1.0 + params.b);
    r.eta = std::pow(params.theta, -(1.0 + 2.0 * params.a) * r.t_rel);
    r.delta = r.eta * std::pow(nd, -params.b);
    r.bound = key_theorem_bound(r.delta);
    const double t_prime_real = r.C1 * nd * r.t_rel * log_theta + r.C2 * nd * std::log(nd);
    if (std::isfinite(t_prime_real)) r.t_prime = static_cast<std::size_t>(std::ceil(t_prime_real));

    if (!r.precondition_failures.empty()) return r;

    // Burn-in from the start with the largest separation after 4 tau_tv steps.
    try {
        r.tau_tv = mixing_time(chain, Metric::Tv, 0.25);
    } catch (const Error& e) {
        fail(std::string("total variation mixing time unavailable: ") + e.what());
        return r;
    }
    r.burn_in = 4 * r.tau_tv;
    auto series = worst_case_series(chain, r.burn_in);
    r.burn_in_start = series.back().worst_start_state[static_cast<std::size_t>(Metric::Sep)];
    auto mu = evolve(chain, DistributionVector::point_mass(n, r.burn_in_start), r.burn_in);
    const auto& pi = chain.stationary();
    auto min_ratio = [&] {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t x = 0; x < n; ++x) m = std::min(m, mu.probs[x] / pi[x]);
        return m;
    };
    r.min_mu_over_pi = min_ratio();
    while (r.min_mu_over_pi < 0.5 && r.burn_in < params.burn_in_horizon) {
        mu = evolve(chain, mu, 1);
        ++r.burn_in;
        r.burn_in_extended = true;
        r.min_mu_over_pi = min_ratio();
    }
    if (r.min_mu_over_pi < 0.5) {
        fail("mu >= pi/2 not reached within the burn-in horizon");
        return r;
    }
    r.preconditions_met = true;

    const double allowed = r.bound - 1.0;   // delta + delta^2 + delta^9
    const double per_c = t_prime_real / params.c;
    TStarOptions feasibility;
    feasibility.subset = params.subset;
    const bool exact = params.mode == EstimateMode::Exact ||
                       (params.mode == EstimateMode::Auto && exact_feasible(chain, 1, feasibility));
    r.exact = exact;
    if (exact) {
        SubsetProcess dp(chain, mu.probs, MarkRule::Target, true, params.subset);
        double excess = theta_mgf_excess(dp.unmarked_count_law(), params.theta);
        while (excess > allowed && dp.time() < r.t_prime) {
            dp.advance();
            excess = theta_mgf_excess(dp.unmarked_count_law(), params.theta);
        }
        const bool found = excess <= allowed;
        r.t_min = dp.time();
        r.evaluated_at = dp.time();
        r.mgf_excess = excess;
        r.mgf = 1.0 + excess;
        r.mgf_ci_lo = r.mgf_ci_hi = r.mgf;
        r.within_bound = found;
        r.below_1_21 = excess < 0.21;
        if (!found) r.t_min = std::numeric_limits<std::size_t>::max();
    } else {
        McCoverageOptions mc = params.mc;
        mc.gamma = 1;
        auto traj = simulate_coverage(chain, mu, r.t_prime, mc);
        r.evaluated_at = r.t_prime;
        auto est = theta_mgf(traj.unvisited_at(r.t_prime), params.theta, params.bootstrap);
        r.mgf = est.value;
        r.mgf_excess = est.value - 1.0;
        r.mgf_ci_lo = est.ci_lo;
        r.mgf_ci_hi = est.ci_hi;
        r.within_bound = est.ci_hi <= r.bound;
        r.below_1_21 = est.ci_hi < 1.21;
        BootstrapOptions none = params.bootstrap;
        none.resamples = 0;
        const std::size_t t = first_true(
            [&](std::size_t s) { return theta_mgf(traj.unvisited_at(s), params.theta, none).value <= r.bound; },
            r.t_prime);
        r.t_min = t > r.t_prime ? std::numeric_limits<std::size_t>::max() : t;
    }
    r.c_min = r.t_min == std::numeric_limits<std::size_t>::max()
                  ? std::numeric_limits<double>::infinity()
                  : static_cast<double>(r.t_min) / per_c;
    const bool unit_ab = params.a == 1.0 && params.b == 1.0;
    r.passed = r.within_bound && (!unit_ab || r.below_1_21);
    return r;
}

// ---------------------------------------------------------------------------
// Explorer

MarkovChain build_family_member(const ChainFamily& family, std::size_t size) {
    if (family.builder == "cycle") return build_cycle(size, family.laziness);
    if (family.builder == "torus2d") return build_torus2d(size, family.laziness);
    if (family.builder == "hypercube") return build_hypercube(size, family.laziness);
    if (family.builder == "complete") return build_complete(size, true);
    if (family.builder == "complete-noloops") return build_complete(size, false);
    throw Error(ErrorKind::Validation, "unknown chain family '" + family.builder + "'");
}

std::size_t coupon_collector_bound(std::size_t n, double theta, std::size_t gamma, double delta) {
    if (theta <= 1.0 || gamma == 0 || n == 0) return 0;
    const double nd = static_cast<double>(n);
    const double target = std::log1p(delta);
    for (std::size_t t = 0;; ++t) {
        const double p = binomial_cdf_below(t, 1.0 / nd, gamma);
        if (nd * (theta - 1.0) * p <= target) return t;
        if (t > (std::size_t{1} << 32)) throw Error(ErrorKind::HorizonExceeded, "coupon bound did not converge");
    }
}

ExplorerTable conjecture_explorer(const ChainFamily& family, double theta, std::size_t gamma, double delta,
                                  const TStarOptions& options) {
    ExplorerTable table;
    for (std::size_t size : family.sizes) {
        auto chain = build_family_member(family, size);
        ExplorerRow row;
        row.size_param = size;
        row.n = chain.size();
        const double nd = static_cast<double>(row.n);
        const double gd = static_cast<double>(gamma);
        row.t_rel = analyze(chain).t_rel;
        try {
            row.max_hitting = hitting_times(chain).max_hitting;
        } catch (const Error&) {
            row.max_hitting = std::numeric_limits<double>::quiet_NaN();
        }
        try {
            row.tau_tv = mixing_time(chain, Metric::Tv, 0.25);
        } catch (const Error&) {
            row.tau_tv = 0;
        }
        TStarOptions opts = options;
        opts.gamma = gamma;
        auto f = find_t_star(chain, theta, delta, opts);
        row.f_measured = f.t_star;
        row.exact = f.exact;
        const double log_n = std::log(nd);
        const double denom = nd * (gd + row.t_rel + log_n);
        row.ratio = denom > 0.0 ? static_cast<double>(row.f_measured) / denom : 0.0;
        row.regime_large_gamma = gd * nd;
        row.regime_one_step = (gd + log_n) * nd;
        row.regime_generic = (gd + log_n) * nd * static_cast<double>(row.tau_tv);
        table.rows.push_back(row);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& row : table.rows) {
        if (row.ratio > 0.0) {
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
    }
    table.ratio_spread = hi > 0.0 ? hi / lo : 1.0;
    if (table.rows.size() >= 3) {
        bool increasing = true;
        for (std::size_t i = 1; i < table.rows.size(); ++i) {
            if (!(table.rows[i].ratio > table.rows[i - 1].ratio)) increasing = false;
        }
        table.growth_flag = increasing && table.rows.back().ratio >= 2.0 * table.rows.front().ratio;
    }
    return table;
}

}  // namespace mixlab
