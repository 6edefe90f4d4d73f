#include "mixlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "mixlab/parallel.hpp"
#include "mixlab/spectral.hpp"

namespace mixlab {

namespace {

constexpr std::size_t index_of(Metric m) { return static_cast<std::size_t>(m); }

// Period of an irreducible chain: gcd over edges of level(u) + 1 - level(v).
std::size_t chain_period(const MarkovChain& chain) {
    const std::size_t n = chain.size();
    std::vector<long long> level(n, -1);
    std::queue<std::size_t> queue;
    level[0] = 0;
    queue.push(0);
    std::size_t g = 0;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop();
        auto targets = chain.row_targets(u);
        auto probs = chain.row_probs(u);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            if (probs[k] <= 0.0) continue;
            const std::size_t v = targets[k];
            if (level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push(v);
            } else {
                g = std::gcd(g, static_cast<std::size_t>(std::llabs(level[u] + 1 - level[v])));
            }
        }
    }
    return g == 0 ? 1 : g;
}

// Lower bound, valid at every time, on the worst-start distance of a chain with
// the given period: the walk sits in one cyclic class of mass 1/period.
double periodic_floor(Metric m, std::size_t period) {
    if (period <= 1) return 0.0;
    const double p = static_cast<double>(period);
    switch (m) {
        case Metric::Tv: return 1.0 - 1.0 / p;
        case Metric::L2: return std::sqrt(p - 1.0);
        case Metric::Sep: return 1.0;
        case Metric::Entropy: return std::log(p);
    }
    return 0.0;
}

// Worst-start series evaluated lazily and kept for reuse across searches.
class SeriesCache {
public:
    SeriesCache(const MarkovChain& chain, const MixingOptions& options)
        : marcher_(chain, options.starts), horizon_(options.max_horizon) {
        series_.push_back(marcher_.profile());
    }

    const DistanceProfile& at(std::size_t t) {
        while (series_.size() <= t) {
            marcher_.advance();
            series_.push_back(marcher_.profile());
        }
        return series_[t];
    }
    double value(std::size_t t, Metric m) { return at(t).get(m); }
    std::size_t horizon() const noexcept { return horizon_; }
    std::size_t cached() const noexcept { return series_.size(); }

private:
    WorstCaseMarcher marcher_;
    std::size_t horizon_;
    std::vector<DistanceProfile> series_;
};

std::size_t search_threshold(SeriesCache& cache, Metric m, double eps, std::size_t n,
                             std::size_t period) {
    if (cache.value(0, m) <= eps) return 0;
    if (period > 1 && periodic_floor(m, period) > eps) {
        std::ostringstream msg;
        msg << to_string(m) << " distance is bounded below by " << periodic_floor(m, period)
            << " > " << eps << " (chain has period " << period << ")";
        throw HorizonExceededError(msg.str(), cache.at(std::min<std::size_t>(2 * period, cache.horizon())));
    }
    // Past the primitivity exponent every metric strictly contracts, so a flat
    // stretch there means the distance has stalled.
    const std::size_t plateau_after = period > 1 ? n : n * n;

    std::size_t t = 1;
    std::size_t lower = 0;
    std::size_t run = 0;
    double prev = cache.value(0, m);
    std::size_t upper = 0;
    while (true) {
        const double v = cache.value(t, m);
        run = v < prev ? run + 1 : 0;
        prev = v;
        if (v <= eps) {
            upper = t;
            break;
        }
        if (t / 2 >= plateau_after && t >= 16 && v > cache.value(t / 2, m) - 1e-12) {
            std::ostringstream msg;
            msg << to_string(m) << " distance stalled at " << v << " between t=" << t / 2 << " and t=" << t;
            throw HorizonExceededError(msg.str(), cache.at(t));
        }
        if (t >= cache.horizon()) {
            std::ostringstream msg;
            msg << to_string(m) << " distance still " << v << " > " << eps << " at horizon " << t;
            throw HorizonExceededError(msg.str(), cache.at(t));
        }
        lower = t;
        t = std::min(2 * t, cache.horizon());
    }

    std::size_t tau = upper;
    if (run >= 3) {
        std::size_t lo = lower;
        std::size_t hi = upper;
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (cache.value(mid, m) <= eps) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        tau = hi;
    } else {
        for (std::size_t s = lower + 1; s <= upper; ++s) {
            if (cache.value(s, m) <= eps) {
                tau = s;
                break;
            }
        }
    }
    // Minimality and "for all later times" over every time already evaluated.
    std::size_t last_above = 0;
    bool any_above = false;
    for (std::size_t s = 0; s < cache.cached(); ++s) {
        if (cache.value(s, m) > eps) {
            last_above = s;
            any_above = true;
        }
    }
    if (any_above && last_above + 1 > tau) tau = last_above + 1;
    return tau;
}

}  // namespace

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Tv: return "tv";
        case Metric::L2: return "l2";
        case Metric::Sep: return "sep";
        case Metric::Entropy: return "entropy";
    }
    return "?";
}

double DistanceProfile::get(Metric m) const {
    switch (m) {
        case Metric::Tv: return tv;
        case Metric::L2: return l2;
        case Metric::Sep: return sep;
        case Metric::Entropy: return entropy;
    }
    return 0.0;
}

double MixingEpsilons::get(Metric m) const {
    switch (m) {
        case Metric::Tv: return tv;
        case Metric::L2: return l2;
        case Metric::Sep: return sep;
        case Metric::Entropy: return entropy;
    }
    return 0.0;
}

std::size_t MixingTimes::get(Metric m) const {
    switch (m) {
        case Metric::Tv: return tau_tv;
        case Metric::L2: return tau_2;
        case Metric::Sep: return tau_sep;
        case Metric::Entropy: return tau_ent;
    }
    return 0;
}

DistanceProfile distances(std::span<const double> mu, std::span<const double> pi, std::size_t time) {
    if (mu.size() != pi.size()) throw Error(ErrorKind::DimensionMismatch, "distribution sizes differ");
    DistanceProfile p;
    p.time = time;
    double l2sq = 0.0;
    double min_ratio = 1.0;
    for (std::size_t y = 0; y < mu.size(); ++y) {
        if (!(pi[y] > 0.0)) {
            throw Error(ErrorKind::AbsoluteContinuity,
                        "reference distribution vanishes at state " + std::to_string(y) +
                            "; separation and entropy are undefined");
        }
        const double diff = mu[y] - pi[y];
        if (diff < 0.0) p.tv -= diff;
        l2sq += diff * diff / pi[y];
        const double r = mu[y] / pi[y];
        min_ratio = std::min(min_ratio, r);
        // pi * (r log r - r + 1): each term is non-negative and the extra
        // -r + 1 parts sum to zero.
        double term = r > 0.0 ? r * std::log1p(r - 1.0) - (r - 1.0) : 1.0;
        p.entropy += pi[y] * std::max(term, 0.0);
    }
    p.l2 = std::sqrt(l2sq);
    p.sep = std::max(0.0, 1.0 - min_ratio);
    return p;
}

DistanceProfile distances_at(const MarkovChain& chain, std::size_t start, std::size_t t) {
    if (start >= chain.size()) throw Error(ErrorKind::DimensionMismatch, "start state out of range");
    return distances_at(chain, DistributionVector::point_mass(chain.size(), start), t);
}

DistanceProfile distances_at(const MarkovChain& chain, const DistributionVector& start, std::size_t t) {
    if (start.probs.size() != chain.size()) {
        throw Error(ErrorKind::DimensionMismatch, "start distribution has the wrong size");
    }
    auto mu = evolve(chain, start, t);
    return distances(mu.probs, chain.stationary(), t);
}

std::vector<std::string> profile_violations(const DistanceProfile& p, double pi_min, double tol) {
    std::vector<std::string> out;
    auto note = [&](const char* what, double lhs, double rhs) {
        if (lhs > rhs + tol) {
            std::ostringstream msg;
            msg << "t=" << p.time << ": " << what << " (" << lhs << " > " << rhs << ")";
            out.push_back(msg.str());
        }
    };
    note("tv <= sep", p.tv, p.sep);
    note("2 tv^2 <= entropy", 2.0 * p.tv * p.tv, p.entropy);
    note("entropy <= sep log(1/pi_min)", p.entropy, p.sep * std::log(1.0 / pi_min));
    note("tv <= l2 / 2", p.tv, p.l2 / 2.0);
    return out;
}

WorstCaseMarcher::WorstCaseMarcher(const MarkovChain& chain, const StartSet& starts)
    : chain_(&chain), starts_(starts.states), threads_(starts.threads) {
    const std::size_t n = chain.size();
    if (starts_.empty()) {
        if (n > starts.all_states_cap) {
            throw Error(ErrorKind::Capacity,
                        "chain has " + std::to_string(n) +
                            " states; worst-case over all starts is limited to " +
                            std::to_string(starts.all_states_cap) + ", pass an explicit start set");
        }
        starts_.resize(n);
        std::iota(starts_.begin(), starts_.end(), std::size_t{0});
    }
    rows_.assign(starts_.size() * n, 0.0);
    scratch_.assign(rows_.size(), 0.0);
    for (std::size_t s = 0; s < starts_.size(); ++s) {
        if (starts_[s] >= n) throw Error(ErrorKind::DimensionMismatch, "start state out of range");
        rows_[s * n + starts_[s]] = 1.0;
    }
}

void WorstCaseMarcher::advance() {
    const std::size_t n = chain_->size();
    parallel_for(starts_.size(), threads_, [&](std::size_t s) {
        chain_->push_forward(std::span<const double>(rows_.data() + s * n, n),
                             std::span<double>(scratch_.data() + s * n, n));
    });
    rows_.swap(scratch_);
    ++time_;
}

std::vector<DistanceProfile> WorstCaseMarcher::per_start() const {
    const std::size_t n = chain_->size();
    std::vector<DistanceProfile> out(starts_.size());
    parallel_for(starts_.size(), threads_, [&](std::size_t s) {
        out[s] = distances(std::span<const double>(rows_.data() + s * n, n), chain_->stationary(), time_);
        out[s].worst_start_state.fill(starts_[s]);
    });
    return out;
}

DistanceProfile WorstCaseMarcher::profile() const {
    auto each = per_start();
    DistanceProfile worst;
    worst.time = time_;
    for (Metric m : kAllMetrics) {
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t s = 0; s < each.size(); ++s) {
            const double v = each[s].get(m);
            if (v > best) {
                best = v;
                arg = starts_[s];
            }
        }
        switch (m) {
            case Metric::Tv: worst.tv = best; break;
            case Metric::L2: worst.l2 = best; break;
            case Metric::Sep: worst.sep = best; break;
            case Metric::Entropy: worst.entropy = best; break;
        }
        worst.worst_start_state[index_of(m)] = arg;
    }
    return worst;
}

std::vector<DistanceProfile> worst_case_series(const MarkovChain& chain, std::size_t t_max,
                                               const StartSet& starts) {
    WorstCaseMarcher marcher(chain, starts);
    std::vector<DistanceProfile> out;
    out.reserve(t_max + 1);
    out.push_back(marcher.profile());
    for (std::size_t t = 1; t <= t_max; ++t) {
        marcher.advance();
        out.push_back(marcher.profile());
    }
    return out;
}

std::vector<DistanceProfile> distance_series(const MarkovChain& chain, const DistributionVector& start,
                                             std::size_t t_max) {
    if (start.probs.size() != chain.size()) {
        throw Error(ErrorKind::DimensionMismatch, "start distribution has the wrong size");
    }
    std::vector<double> mu = start.probs;
    std::vector<double> next(mu.size());
    std::vector<DistanceProfile> out;
    out.reserve(t_max + 1);
    out.push_back(distances(mu, chain.stationary(), 0));
    for (std::size_t t = 1; t <= t_max; ++t) {
        chain.push_forward(mu, next);
        mu.swap(next);
        out.push_back(distances(mu, chain.stationary(), t));
    }
    return out;
}

std::size_t threshold_time(std::span<const double> series, double eps) {
    std::size_t tau = 0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series[t] > eps) tau = t + 1;
    }
    return tau;
}

MixingTimes mixing_times(const MarkovChain& chain, const MixingEpsilons& eps, const MixingOptions& options) {
    SeriesCache cache(chain, options);
    const std::size_t period = chain_period(chain);
    MixingTimes out;
    out.epsilons = eps;
    out.tau_tv = search_threshold(cache, Metric::Tv, eps.tv, chain.size(), period);
    out.tau_2 = search_threshold(cache, Metric::L2, eps.l2, chain.size(), period);
    out.tau_sep = search_threshold(cache, Metric::Sep, eps.sep, chain.size(), period);
    out.tau_ent = search_threshold(cache, Metric::Entropy, eps.entropy, chain.size(), period);
    return out;
}

std::size_t mixing_time(const MarkovChain& chain, Metric metric, double eps, const MixingOptions& options) {
    SeriesCache cache(chain, options);
    return search_threshold(cache, metric, eps, chain.size(), chain_period(chain));
}

CovarianceReport check_covariance_lemma(const MarkovChain& chain, std::span<const double> f,
                                        std::size_t t_max, double tolerance) {
    const std::size_t n = chain.size();
    if (f.size() != n) throw Error(ErrorKind::DimensionMismatch, "f must have one value per state");
    const auto& pi = chain.stationary();
    CovarianceReport report;
    if (!chain.reversible()) report.warnings.push_back("chain is not reversible");
    report.sigma1 = analyze(chain).sigma1;

    double mean = 0.0;
    for (std::size_t x = 0; x < n; ++x) mean += pi[x] * f[x];
    std::vector<double> g(n), h(n), next(n);
    for (std::size_t x = 0; x < n; ++x) g[x] = f[x] - mean;
    h = g;
    for (std::size_t x = 0; x < n; ++x) report.variance += pi[x] * g[x] * g[x];

    report.min_slack = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t <= t_max; ++t) {
        // Cov(f(X_1), f(X_{1+t})) = sum_x pi(x) g(x) (P^t g)(x).
        double cov = 0.0;
        for (std::size_t x = 0; x < n; ++x) cov += pi[x] * g[x] * h[x];
        const double bound = std::pow(report.sigma1, static_cast<double>(t)) * report.variance;
        report.covariance.push_back(cov);
        report.bound.push_back(bound);
        report.max_violation = std::max(report.max_violation, cov - bound);
        if (t >= 1) report.min_slack = std::min(report.min_slack, bound - cov);
        chain.apply(h, next);
        h.swap(next);
    }
    if (t_max == 0) report.min_slack = 0.0;
    report.passed = report.max_violation <= tolerance * std::max(1.0, report.variance);
    return report;
}

SepEntropyReport check_sep_entropy_bounds(const MarkovChain& chain, const SepEntropyOptions& options) {
    const std::size_t n = chain.size();
    SepEntropyReport r;
    r.log_inv_pi_min = std::log(1.0 / chain.pi_min());

    WorstCaseMarcher marcher(chain, options.mixing.starts);
    std::vector<double> worst_sep;
    r.proposition_min_slack = std::numeric_limits<double>::infinity();
    constexpr std::size_t kMaxReported = 20;
    for (std::size_t t = 0; t <= options.t_max; ++t) {
        if (t > 0) marcher.advance();
        double sep_t = 0.0;
        for (const auto& p : marcher.per_start()) {
            const double slack = p.sep * r.log_inv_pi_min - p.entropy;
            r.proposition_max_violation = std::max(r.proposition_max_violation, -slack);
            if (t >= 1 && p.sep > 0.0) r.proposition_min_slack = std::min(r.proposition_min_slack, slack);
            sep_t = std::max(sep_t, p.sep);
            for (auto& v : profile_violations(p, chain.pi_min())) {
                if (r.profile_failures.size() < kMaxReported) r.profile_failures.push_back(std::move(v));
            }
        }
        worst_sep.push_back(sep_t);
    }
    if (!std::isfinite(r.proposition_min_slack)) r.proposition_min_slack = 0.0;
    r.proposition_passed = r.proposition_max_violation <= 1e-12;

    r.sep_monotone = true;
    for (std::size_t t = 1; t < worst_sep.size(); ++t) {
        if (worst_sep[t] > worst_sep[t - 1] + 1e-12) r.sep_monotone = false;
    }
    for (std::size_t a = 1; a < worst_sep.size(); ++a) {
        for (std::size_t b = a; a + b < worst_sep.size(); ++b) {
            r.submultiplicative_max_violation =
                std::max(r.submultiplicative_max_violation, worst_sep[a + b] - worst_sep[a] * worst_sep[b]);
        }
    }
    r.sep_submultiplicative = r.submultiplicative_max_violation <= 1e-12;

    const double eps = options.epsilon;
    SeriesCache cache(chain, options.mixing);
    const std::size_t period = chain_period(chain);
    r.tau_sep = search_threshold(cache, Metric::Sep, 1.0 / std::numbers::e, n, period);
    r.tau_ent = search_threshold(cache, Metric::Entropy, eps, n, period);
    r.tau_tv_half_eps = search_threshold(cache, Metric::Tv, eps / 2.0, n, period);
    r.tau_tv_pinsker = search_threshold(cache, Metric::Tv, std::sqrt(eps / 2.0), n, period);
    r.tau_tv_half_e = search_threshold(cache, Metric::Tv, 1.0 / (2.0 * std::numbers::e), n, period);

    if (n > 1) {
        r.log_factor = std::log(r.log_inv_pi_min) + std::log(1.0 / eps);
        r.sep_bound_literal = static_cast<double>(r.tau_sep) * r.log_factor;
        const double k = std::max(0.0, std::ceil(r.log_factor));
        r.sep_bound_ceiling = r.tau_sep * static_cast<std::size_t>(k);
        const double denom = static_cast<double>(r.tau_tv_half_e) * r.log_factor;
        r.ent_tv_ratio = denom > 0.0 ? static_cast<double>(r.tau_ent) / denom : 0.0;
    }
    r.sep_bound_literal_holds = static_cast<double>(r.tau_ent) <= r.sep_bound_literal + 1e-12;
    r.sep_bound_passed = r.tau_ent <= r.sep_bound_ceiling || r.tau_ent == 0;
    r.tv_lower_literal_holds = r.tau_tv_half_eps <= r.tau_ent;
    r.tv_lower_pinsker_passed = r.tau_tv_pinsker <= r.tau_ent;
    r.ent_tv_within_constant = r.ent_tv_ratio <= options.constant_c;

    r.passed = r.proposition_passed && r.sep_monotone && r.sep_submultiplicative && r.sep_bound_passed &&
               r.tv_lower_pinsker_passed && r.ent_tv_within_constant && r.profile_failures.empty();
    return r;
}

}  // namespace mixlab
