#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mixlab {

/// Row-major dense square matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
    DenseMatrix(std::size_t n, std::vector<double> data);

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * n_, n_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    static DenseMatrix identity(std::size_t n);

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

struct SymmetricEigen {
    std::vector<double> values;   // ascending
    DenseMatrix vectors;          // column k is the eigenvector for values[k]; empty if not requested
};

/// Householder tridiagonalisation followed by implicit QL iterations.
/// The input must be symmetric; only values are returned unless want_vectors.
SymmetricEigen symmetric_eigen(const DenseMatrix& a, bool want_vectors);

/// LU factorisation with partial pivoting.
class LuDecomposition {
public:
    explicit LuDecomposition(DenseMatrix a);

    bool singular() const noexcept { return singular_; }
    std::vector<double> solve(std::span<const double> rhs) const;

private:
    DenseMatrix lu_;
    std::vector<std::size_t> pivot_;
    bool singular_ = false;
};

}  // namespace mixlab
