#include "mixlab/lamplighter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mixlab/error.hpp"

namespace mixlab {

std::string_view to_string(LampConvention c) {
    switch (c) {
        case LampConvention::BothEndpoints: return "both-endpoints";
        case LampConvention::RandomizeThenMove: return "randomize-then-move";
        case LampConvention::MoveThenRandomize: return "move-then-randomize";
    }
    return "?";
}

LampConvention parse_lamp_convention(std::string_view name) {
    if (name == "both-endpoints" || name == "both") return LampConvention::BothEndpoints;
    if (name == "randomize-then-move") return LampConvention::RandomizeThenMove;
    if (name == "move-then-randomize") return LampConvention::MoveThenRandomize;
    throw Error(ErrorKind::UnsupportedMode, "unknown lamp convention '" + std::string(name) + "'");
}

MarkRule lamp_mark_rule(LampConvention c) {
    switch (c) {
        case LampConvention::BothEndpoints: return MarkRule::Both;
        case LampConvention::RandomizeThenMove: return MarkRule::Source;
        case LampConvention::MoveThenRandomize: return MarkRule::Target;
    }
    return MarkRule::Both;
}

namespace {

void check_spec(const MarkovChain& base, const LampSpec& spec) {
    if (spec.m == 0 || spec.m > kMaxLampAlphabet) {
        throw Error(ErrorKind::Validation, "lamp alphabet must be between 1 and 65536");
    }
    if (base.size() == 0) throw Error(ErrorKind::InvalidSize, "empty base chain");
}

void check_start_vertex(const MarkovChain& base, std::size_t start) {
    if (start >= base.size()) throw Error(ErrorKind::DimensionMismatch, "start vertex out of range");
}

SubsetProcess lamp_process(const MarkovChain& base, const LampSpec& spec, std::size_t start,
                           const SubsetDpOptions& options) {
    check_spec(base, spec);
    check_start_vertex(base, start);
    return SubsetProcess(base, DistributionVector::point_mass(base.size(), start).probs,
                         lamp_mark_rule(spec.convention), false, options);
}

// Distances of the wreath chain given the joint law q(M, x) of (randomized set, position).
DistanceProfile wreath_profile(const MarkovChain& base, const LampSpec& spec, std::vector<double> h,
                               std::size_t time) {
    const std::size_t n = base.size();
    const std::size_t masks = std::size_t{1} << n;
    const double m = static_cast<double>(spec.m);
    const double log_m = std::log(m);

    // Weighted superset transform: h(A, x) = sum_{M >= A} q(M, x) m^{|A| - |M|}.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t a = 0; a < masks; ++a) {
            if (a & bit) continue;
            double* lo = h.data() + a * n;
            const double* hi = h.data() + (a | bit) * n;
            for (std::size_t x = 0; x < n; ++x) lo[x] += hi[x] / m;
        }
    }

    // A class is (support A of the lamps, position x). It holds (m-1)^|A|
    // configurations, all with density ratio r = m^{n-|A|} h(A, x) / pi(x).
    const auto& pi = base.stationary();
    const double log_m1 = spec.m > 1 ? std::log(m - 1.0) : -std::numeric_limits<double>::infinity();
    const double log_keep = spec.m > 1 ? std::log1p(-1.0 / m) : 0.0;   // log((m-1)/m)
    DistanceProfile p;
    p.time = time;
    double l2_sq = 0.0;
    double min_log_r = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < masks; ++a) {
        const int k = std::popcount(a);
        if (k > 0 && spec.m == 1) continue;
        const double kd = static_cast<double>(k);
        const double log_class_weight = k > 0 ? kd * log_m1 : 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            const double class_pi = std::exp(std::log(pi[x]) + log_class_weight - static_cast<double>(n) * log_m);
            const double hv = h[a * n + x];
            if (hv <= 0.0) {
                // mu vanishes on this class: r = 0.
                p.tv += class_pi;
                l2_sq += class_pi;
                p.entropy += class_pi;
                min_log_r = -std::numeric_limits<double>::infinity();
                continue;
            }
            const double log_h = std::log(hv);
            const double log_r = static_cast<double>(n - static_cast<std::size_t>(k)) * log_m + log_h - std::log(pi[x]);
            const double log_mu = (k > 0 ? kd * log_keep : 0.0) + log_h;
            const double class_mu = std::exp(log_mu);
            min_log_r = std::min(min_log_r, log_r);
            p.tv += std::max(class_pi - class_mu, 0.0);
            if (log_r < std::log(2.0)) {
                const double r = std::exp(log_r);
                l2_sq += class_pi * (r - 1.0) * (r - 1.0);
                const double term = r * std::log1p(r - 1.0) - (r - 1.0);
                p.entropy += class_pi * std::max(term, 0.0);
            } else {
                // Written through mu so that a vanishing class_pi does not lose mu * r.
                l2_sq += std::exp(log_mu + log_r) - 2.0 * class_mu + class_pi;
                p.entropy += class_mu * log_r - class_mu + class_pi;
            }
        }
    }
    p.l2 = std::sqrt(std::max(l2_sq, 0.0));
    p.sep = std::max(0.0, 1.0 - std::exp(min_log_r));
    return p;
}

}  // namespace

WreathChain::WreathChain(MarkovChain base, LampSpec spec) : base_(std::move(base)), spec_(spec) {
    check_spec(base_, spec_);
}

std::optional<std::size_t> WreathChain::state_count() const {
    const std::size_t n = base_.size();
    std::size_t count = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (count > std::numeric_limits<std::size_t>::max() / spec_.m) return std::nullopt;
        count *= spec_.m;
    }
    return count;
}

std::size_t WreathChain::state_index(const std::vector<std::size_t>& lamps, std::size_t position) const {
    const std::size_t n = base_.size();
    if (lamps.size() != n || position >= n) throw Error(ErrorKind::DimensionMismatch, "bad wreath state");
    std::size_t code = 0;
    for (std::size_t i = n; i-- > 0;) {
        if (lamps[i] >= spec_.m) throw Error(ErrorKind::Validation, "lamp value out of range");
        code = code * spec_.m + lamps[i];
    }
    return code * n + position;
}

const MarkovChain& WreathChain::explicit_chain() const {
    if (!explicit_) throw Error(ErrorKind::Precondition, "explicit wreath chain has not been built");
    return *explicit_;
}

const MarkovChain& WreathChain::ensure_explicit(const WreathLimits& limits) {
    if (explicit_) return *explicit_;
    const auto count = state_count();
    if (!count || *count > limits.explicit_cap) {
        throw Error(ErrorKind::Capacity, "explicit wreath chain exceeds the state cap of " +
                                             std::to_string(limits.explicit_cap) + "; use reduced_distances");
    }
    const std::size_t n = base_.size();
    const std::size_t m = spec_.m;
    const std::size_t codes = *count / n;
    std::vector<std::size_t> digit_weight(n, 1);
    for (std::size_t i = 1; i < n; ++i) digit_weight[i] = digit_weight[i - 1] * m;
    auto digit = [&](std::size_t code, std::size_t i) { return code / digit_weight[i] % m; };
    auto with_digit = [&](std::size_t code, std::size_t i, std::size_t v) {
        return code - digit(code, i) * digit_weight[i] + v * digit_weight[i];
    };
    const double md = static_cast<double>(m);

    SparseRows rows(*count);
    std::map<std::size_t, double> acc;
    for (std::size_t code = 0; code < codes; ++code) {
        for (std::size_t x = 0; x < n; ++x) {
            acc.clear();
            auto targets = base_.row_targets(x);
            auto probs = base_.row_probs(x);
            for (std::size_t k = 0; k < targets.size(); ++k) {
                const std::size_t y = targets[k];
                const double p = probs[k];
                switch (spec_.convention) {
                    case LampConvention::BothEndpoints:
                        if (y == x) {
                            for (std::size_t b = 0; b < m; ++b) acc[with_digit(code, x, b) * n + y] += p / md;
                        } else {
                            for (std::size_t a = 0; a < m; ++a) {
                                const std::size_t mid = with_digit(code, x, a);
                                for (std::size_t b = 0; b < m; ++b) {
                                    acc[with_digit(mid, y, b) * n + y] += p / (md * md);
                                }
                            }
                        }
                        break;
                    case LampConvention::RandomizeThenMove:
                        for (std::size_t a = 0; a < m; ++a) acc[with_digit(code, x, a) * n + y] += p / md;
                        break;
                    case LampConvention::MoveThenRandomize:
                        for (std::size_t b = 0; b < m; ++b) acc[with_digit(code, y, b) * n + y] += p / md;
                        break;
                }
            }
            auto& row = rows[code * n + x];
            for (auto [to, p] : acc) row.push_back({to, p});
        }
    }
    std::vector<double> stationary(*count);
    const auto& pi = base_.stationary();
    for (std::size_t s = 0; s < *count; ++s) stationary[s] = pi[s % n] / static_cast<double>(codes);
    const bool reversible = base_.reversible() && spec_.convention == LampConvention::BothEndpoints;
    explicit_.emplace(rows, std::move(stationary), reversible, 0.0);
    return *explicit_;
}

WreathChain build_wreath(const MarkovChain& base, const LampSpec& spec, const WreathLimits& limits) {
    WreathChain w(base, spec);
    w.ensure_explicit(limits);
    return w;
}

DistanceProfile reduced_distances(const MarkovChain& base, const LampSpec& spec, std::size_t start,
                                  std::size_t t, const SubsetDpOptions& options) {
    auto dp = lamp_process(base, spec, start, options);
    for (std::size_t s = 0; s < t; ++s) dp.advance();
    return wreath_profile(base, spec, dp.joint(), t);
}

std::vector<DistanceProfile> reduced_distance_series(const MarkovChain& base, const LampSpec& spec,
                                                     std::size_t start, std::size_t t_max,
                                                     const SubsetDpOptions& options) {
    auto dp = lamp_process(base, spec, start, options);
    std::vector<DistanceProfile> out;
    out.reserve(t_max + 1);
    for (std::size_t t = 0; t <= t_max; ++t) {
        if (t > 0) dp.advance();
        out.push_back(wreath_profile(base, spec, dp.joint(), t));
    }
    return out;
}

double l2_collision(const MarkovChain& base, const LampSpec& spec, std::size_t start, std::size_t t,
                    std::size_t max_states) {
    const std::size_t n = base.size();
    if (n > max_states) {
        throw Error(ErrorKind::Capacity, "collision sum enumerates mask pairs; base has too many states");
    }
    auto dp = lamp_process(base, spec, start, {});
    for (std::size_t s = 0; s < t; ++s) dp.advance();
    const std::size_t masks = std::size_t{1} << n;
    const double log_m = std::log(static_cast<double>(spec.m));
    const auto& pi = base.stationary();
    const auto& q = dp.joint();
    double total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double sum = 0.0;
        for (std::size_t a = 0; a < masks; ++a) {
            const double qa = q[a * n + x];
            if (qa == 0.0) continue;
            for (std::size_t b = 0; b < masks; ++b) {
                const double qb = q[b * n + x];
                if (qb == 0.0) continue;
                const int both_unvisited = static_cast<int>(n) - std::popcount(a | b);
                sum += qa * qb * std::exp(both_unvisited * log_m);
            }
        }
        total += sum / pi[x];
    }
    return total;
}

MixingTimes wreath_mixing_times(const MarkovChain& base, const LampSpec& spec, const MixingEpsilons& eps,
                                const WreathMixingOptions& options) {
    std::vector<std::size_t> starts = options.starts;
    if (starts.empty()) {
        starts.resize(base.size());
        for (std::size_t x = 0; x < base.size(); ++x) starts[x] = x;
    }
    // Lamps start all zero. Full randomization makes every fixed starting
    // configuration equivalent to this one up to relabelling the lamp values.
    MixingTimes out;
    out.epsilons = eps;
    for (std::size_t start : starts) {
        auto dp = lamp_process(base, spec, start, options.subset);
        std::array<std::size_t, 4> tau{};
        std::array<bool, 4> done{};
        for (std::size_t t = 0;; ++t) {
            if (t > 0) dp.advance();
            const auto p = wreath_profile(base, spec, dp.joint(), t);
            bool all = true;
            for (Metric metric : kAllMetrics) {
                const auto i = static_cast<std::size_t>(metric);
                if (!done[i] && p.get(metric) <= eps.get(metric)) {
                    done[i] = true;
                    tau[i] = t;
                }
                all = all && done[i];
            }
            if (all) break;
            if (t >= options.max_horizon) {
                throw HorizonExceededError("wreath chain distance still above threshold at the horizon", p);
            }
        }
        out.tau_tv = std::max(out.tau_tv, tau[static_cast<std::size_t>(Metric::Tv)]);
        out.tau_2 = std::max(out.tau_2, tau[static_cast<std::size_t>(Metric::L2)]);
        out.tau_sep = std::max(out.tau_sep, tau[static_cast<std::size_t>(Metric::Sep)]);
        out.tau_ent = std::max(out.tau_ent, tau[static_cast<std::size_t>(Metric::Entropy)]);
    }
    return out;
}

}  // namespace mixlab
