#pragma once

#include <cstddef>
#include <vector>

#include "mixlab/chain.hpp"
#include "mixlab/linalg.hpp"

namespace mixlab {

enum class SpectrumMode {
    Auto,      // full spectrum for reversible chains, extremes otherwise
    Full,      // every eigenvalue; reversible chains only
    Extremes,  // lambda_1 and lambda_{N-1} (reversible) or |lambda| radius
};

struct SpectralOptions {
    std::size_t dense_cap = 2048;  // above this, power iteration with deflation
    double tolerance = 1e-10;
    std::size_t max_iterations = 2'000'000;
};

/// Spectral data of the pi-symmetrised kernel D^{1/2} P D^{-1/2}.
///
/// t_rel is max over non-trivial eigenvalues of 1/(1 - |lambda|) and is
/// +infinity when some non-trivial |lambda| equals 1 (within 1e-9), e.g. a
/// bipartite walk without laziness.
struct SpectralSummary {
    std::vector<double> eigenvalues;  // descending, eigenvalues[0] == 1; empty unless full spectrum
    double lambda1 = 0.0;             // largest non-trivial eigenvalue
    double lambda_min = 0.0;          // smallest eigenvalue
    double lambda_star = 0.0;         // max(|lambda1|, |lambda_min|), or |lambda| radius
    double sigma1 = 0.0;              // second largest singular value of P
    double t_rel = 0.0;
    double gap = 0.0;                 // 1 - lambda1
    bool full_spectrum = false;
};

/// Throws UnsupportedMode for SpectrumMode::Full on a non-reversible chain.
SpectralSummary analyze(const MarkovChain& chain, SpectrumMode mode = SpectrumMode::Auto,
                        const SpectralOptions& options = {});

/// Operator norm of P - E on L^2(pi), E the projection onto constants.
/// Computed from the singular values of the symmetrised kernel (via the
/// Jordan-Wielandt block matrix), independently of analyze().
double second_singular_value(const MarkovChain& chain, const SpectralOptions& options = {});

/// D^{1/2} P D^{-1/2}; symmetric exactly when the chain is reversible.
DenseMatrix symmetrized_kernel(const MarkovChain& chain);

double relaxation_time(double lambda_star);

}  // namespace mixlab
