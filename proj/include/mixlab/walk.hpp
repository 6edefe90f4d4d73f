#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "mixlab/chain.hpp"
#include "mixlab/rng.hpp"

namespace mixlab {

/// One step of the walk from x by inverse-CDF sampling of row x.
inline std::size_t sample_next(const MarkovChain& chain, std::size_t x, std::mt19937_64& engine) {
    auto targets = chain.row_targets(x);
    auto probs = chain.row_probs(x);
    double u = uniform01(engine);
    for (std::size_t k = 0; k + 1 < targets.size(); ++k) {
        if (u < probs[k]) return targets[k];
        u -= probs[k];
    }
    return targets.back();
}

/// Draws a state from a probability vector.
inline std::size_t sample_state(std::span<const double> dist, std::mt19937_64& engine) {
    double u = uniform01(engine);
    std::size_t last = 0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        last = i;
        if (u < dist[i]) return i;
        u -= dist[i];
    }
    return last;
}

}  // namespace mixlab
