#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixlab/chain.hpp"
#include "mixlab/coverage.hpp"
#include "mixlab/metrics.hpp"

namespace mixlab {

/// When lamps get randomized relative to the walker's move.
enum class LampConvention {
    BothEndpoints,       // randomize at x, move x -> y, randomize at y
    RandomizeThenMove,   // randomize at x, then move
    MoveThenRandomize,   // move to y, then randomize at y
};

std::string_view to_string(LampConvention c);
LampConvention parse_lamp_convention(std::string_view name);

inline constexpr std::size_t kMaxLampAlphabet = std::size_t{1} << 16;

/// Lamp alphabet and randomization rule. Lamps always start all zero.
/// m = 1 is accepted as the degenerate case where the wreath chain is the base.
struct LampSpec {
    std::size_t m = 2;
    LampConvention convention = LampConvention::BothEndpoints;
};

struct WreathLimits {
    std::size_t explicit_cap = std::size_t{1} << 20;   // cap on m^n * n
};

/// Base chain plus lamp rule. The explicit m^n * n chain is only built by
/// build_wreath or ensure_explicit. States are indexed code * n + position,
/// with the lamp configuration read as base-m digits (lamp i is digit i).
class WreathChain {
public:
    WreathChain(MarkovChain base, LampSpec spec);

    const MarkovChain& base() const noexcept { return base_; }
    const LampSpec& spec() const noexcept { return spec_; }
    /// m^n * n, or nullopt if it does not fit in 64 bits.
    std::optional<std::size_t> state_count() const;

    const MarkovChain& ensure_explicit(const WreathLimits& limits = {});
    bool has_explicit() const noexcept { return explicit_.has_value(); }
    const MarkovChain& explicit_chain() const;

    std::size_t state_index(const std::vector<std::size_t>& lamps, std::size_t position) const;
    /// Index of (all lamps zero, position).
    std::size_t zero_lamps_index(std::size_t position) const { return position; }

private:
    MarkovChain base_;
    LampSpec spec_;
    std::optional<MarkovChain> explicit_;
};

/// Builds the explicit chain. The stationary law (uniform lamps times the
/// base stationary law) and, for BothEndpoints on a reversible base, detailed
/// balance are validated by the chain constructor. Throws Capacity above the
/// cap; reduced_distances handles larger cases.
WreathChain build_wreath(const MarkovChain& base, const LampSpec& spec, const WreathLimits& limits = {});

/// The marking rule of the subset process that tracks randomized lamps.
MarkRule lamp_mark_rule(LampConvention c);

/// Exact distances of the wreath chain from (all lamps zero, start) at time t
/// without building it. Given the randomized set M and the position, lamps are
/// i.i.d. uniform on M and zero elsewhere, so every metric is a sum over
/// (support, position) classes of a weighted superset transform of the law of
/// (M, position).
DistanceProfile reduced_distances(const MarkovChain& base, const LampSpec& spec, std::size_t start,
                                  std::size_t t, const SubsetDpOptions& options = {});
std::vector<DistanceProfile> reduced_distance_series(const MarkovChain& base, const LampSpec& spec,
                                                     std::size_t start, std::size_t t_max,
                                                     const SubsetDpOptions& options = {});

/// 1 + ||mu_t/pi - 1||_2^2 for the wreath chain as a collision sum over two
/// independent copies: E[m^{|S_t cap S'_t|} 1{X_t = X'_t} / pi(X_t)], with S
/// the never-randomized set. Pairs of masks are enumerated, so n <= max_states.
double l2_collision(const MarkovChain& base, const LampSpec& spec, std::size_t start, std::size_t t,
                    std::size_t max_states = 10);

struct WreathMixingOptions {
    std::vector<std::size_t> starts;   // base start vertices; empty = every vertex
    std::size_t max_horizon = std::size_t{1} << 16;
    SubsetDpOptions subset;
};

/// Mixing times of the wreath chain from all-zero lamps, worst over the start
/// vertices. Distances from a fixed start never increase, so the first time
/// each metric drops to its threshold is its mixing time. Throws
/// HorizonExceededError if some metric is still above threshold at the horizon.
MixingTimes wreath_mixing_times(const MarkovChain& base, const LampSpec& spec, const MixingEpsilons& eps = {},
                                const WreathMixingOptions& options = {});

}  // namespace mixlab
