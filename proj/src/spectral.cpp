#include "mixlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mixlab/error.hpp"

namespace mixlab {

namespace {

constexpr double kUnitTol = 1e-9;

// y = S v with S = D^{1/2} P D^{-1/2}, without materialising S.
void symmetric_apply(const MarkovChain& chain, const std::vector<double>& sqrt_pi,
                     const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t x = 0; x < chain.size(); ++x) {
        auto targets = chain.row_targets(x);
        auto probs = chain.row_probs(x);
        double acc = 0.0;
        for (std::size_t k = 0; k < targets.size(); ++k) acc += probs[k] * v[targets[k]] / sqrt_pi[targets[k]];
        out[x] = sqrt_pi[x] * acc;
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Dominant eigenvalue of (I + sign * S) / 2 restricted to the complement of
// sqrt(pi), via power iteration; returns the Rayleigh quotient.
double deflated_power(const MarkovChain& chain, const std::vector<double>& sqrt_pi, double sign,
                      const SpectralOptions& options) {
    const std::size_t n = chain.size();
    std::mt19937_64 engine(0x5eed);
    std::vector<double> v(n), w(n);
    for (double& x : v) x = static_cast<double>(engine() >> 11) * 0x1.0p-53 - 0.5;
    auto project = [&](std::vector<double>& u) {
        const double c = dot(u, sqrt_pi);
        for (std::size_t i = 0; i < n; ++i) u[i] -= c * sqrt_pi[i];
        const double norm = std::sqrt(dot(u, u));
        for (double& x : u) x /= norm;
    };
    project(v);
    double rho = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        symmetric_apply(chain, sqrt_pi, v, w);
        for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * (v[i] + sign * w[i]);
        rho = dot(v, w);
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual += (w[i] - rho * v[i]) * (w[i] - rho * v[i]);
        v.swap(w);
        project(v);
        if (std::sqrt(residual) < options.tolerance) return rho;
    }
    throw Error(ErrorKind::NoConvergence, "power iteration did not converge");
}

// Spectral radius of P - 1 pi^T for a non-reversible chain, from the growth of
// ||(P - E)^k f|| (Gelfand's formula, k doubling until stable).
double nonreversible_radius(const MarkovChain& chain) {
    const std::size_t n = chain.size();
    const auto& pi = chain.stationary();
    std::mt19937_64 engine(0xfeed);
    std::vector<double> f(n), g(n);
    for (double& x : f) x = static_cast<double>(engine() >> 11) * 0x1.0p-53 - 0.5;
    auto center = [&](std::vector<double>& u) {
        const double mean = dot(u, pi);
        for (double& x : u) x -= mean;
    };
    center(f);
    double log_norm = 0.0;
    double estimate = 0.0;
    double previous = -1.0;
    std::size_t k = 0;
    for (std::size_t block = 1; block <= (std::size_t{1} << 16); block *= 2) {
        while (k < block) {
            chain.apply(f, g);
            center(g);
            double norm = std::sqrt(dot(g, g));
            if (norm == 0.0) return 0.0;
            log_norm += std::log(norm);
            for (std::size_t i = 0; i < n; ++i) f[i] = g[i] / norm;
            ++k;
        }
        estimate = std::exp(log_norm / static_cast<double>(k));
        if (previous >= 0.0 && std::abs(estimate - previous) < 1e-6) break;
        previous = estimate;
    }
    return estimate;
}

}  // namespace

double relaxation_time(double lambda_star) {
    if (lambda_star >= 1.0 - kUnitTol) return std::numeric_limits<double>::infinity();
    return 1.0 / (1.0 - lambda_star);
}

DenseMatrix symmetrized_kernel(const MarkovChain& chain) {
    const std::size_t n = chain.size();
    const auto& pi = chain.stationary();
    DenseMatrix s(n);
    for (std::size_t x = 0; x < n; ++x) {
        auto targets = chain.row_targets(x);
        auto probs = chain.row_probs(x);
        for (std::size_t k = 0; k < targets.size(); ++k) {
            const std::size_t y = targets[k];
            s(x, y) = std::sqrt(pi[x] / pi[y]) * probs[k];
        }
    }
    return s;
}

SpectralSummary analyze(const MarkovChain& chain, SpectrumMode mode, const SpectralOptions& options) {
    const std::size_t n = chain.size();
    SpectralSummary out;
    if (!chain.reversible()) {
        if (mode == SpectrumMode::Full) {
            throw Error(ErrorKind::UnsupportedMode,
                        "full spectrum requested for a non-reversible chain");
        }
        out.sigma1 = second_singular_value(chain, options);
        out.lambda_star = n == 1 ? 0.0 : nonreversible_radius(chain);
        out.lambda1 = std::numeric_limits<double>::quiet_NaN();
        out.lambda_min = std::numeric_limits<double>::quiet_NaN();
        out.gap = std::numeric_limits<double>::quiet_NaN();
        out.t_rel = relaxation_time(out.lambda_star);
        return out;
    }
    if (n == 1) {
        out.eigenvalues = {1.0};
        out.full_spectrum = true;
        out.t_rel = 1.0;
        out.gap = 1.0;
        return out;
    }

    const bool dense = n <= options.dense_cap;
    if (mode == SpectrumMode::Full && !dense) {
        throw Error(ErrorKind::Capacity, "full spectrum requested above the dense cap");
    }
    if (dense) {
        DenseMatrix s = symmetrized_kernel(chain);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double avg = 0.5 * (s(i, j) + s(j, i));
                s(i, j) = s(j, i) = avg;
            }
        }
        auto eig = symmetric_eigen(s, false);
        out.eigenvalues.assign(eig.values.rbegin(), eig.values.rend());
        out.lambda1 = out.eigenvalues[1];
        out.lambda_min = out.eigenvalues.back();
        out.full_spectrum = true;
        if (mode == SpectrumMode::Extremes) {
            out.eigenvalues.clear();
            out.full_spectrum = false;
        }
    } else {
        std::vector<double> sqrt_pi(n);
        for (std::size_t i = 0; i < n; ++i) sqrt_pi[i] = std::sqrt(chain.stationary()[i]);
        out.lambda1 = 2.0 * deflated_power(chain, sqrt_pi, +1.0, options) - 1.0;
        out.lambda_min = 1.0 - 2.0 * deflated_power(chain, sqrt_pi, -1.0, options);
    }
    out.lambda_star = std::max(std::abs(out.lambda1), std::abs(out.lambda_min));
    out.sigma1 = out.lambda_star;
    out.gap = 1.0 - out.lambda1;
    out.t_rel = relaxation_time(out.lambda_star);
    return out;
}

double second_singular_value(const MarkovChain& chain, const SpectralOptions& options) {
    const std::size_t n = chain.size();
    if (n == 1) return 0.0;
    DenseMatrix s = symmetrized_kernel(chain);
    std::vector<double> sqrt_pi(n);
    for (std::size_t i = 0; i < n; ++i) sqrt_pi[i] = std::sqrt(chain.stationary()[i]);
    // M = S - sqrt(pi) sqrt(pi)^T is the image of P - E under f -> D^{1/2} f.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s(i, j) -= sqrt_pi[i] * sqrt_pi[j];

    if (2 * n <= options.dense_cap) {
        DenseMatrix block(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                block(i, n + j) = s(i, j);
                block(n + j, i) = s(i, j);
            }
        }
        auto eig = symmetric_eigen(block, false);
        return std::max(0.0, eig.values.back());
    }
    // Power iteration on M^T M.
    std::vector<double> v(n, 0.0), w(n), u(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(n)) * ((i % 2) ? 1.0 : -0.5);
    double sigma_sq = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        const double norm = std::sqrt(dot(v, v));
        if (norm == 0.0) return 0.0;
        for (double& x : v) x /= norm;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += s(i, j) * v[j];
            u[i] = acc;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += s(i, j) * u[i];
            w[j] = acc;
        }
        const double next = dot(v, w);
        v.swap(w);
        if (std::abs(next - sigma_sq) < options.tolerance * std::max(1.0, next)) {
            sigma_sq = next;
            break;
        }
        sigma_sq = next;
    }
    return std::sqrt(std::max(0.0, sigma_sq));
}

}  // namespace mixlab
