#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "confsafe/numerics.hpp"

namespace confsafe::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = uniform(rng, lo, hi);
    return v;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = uniform(rng, lo, hi);
    return m;
}

// Q diag(lambda) Q^T with log-uniform eigenvalues in [lo, hi].
inline SymmetricMatrix random_spd(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n, -1.0, 1.0));
    const Matrix q = qr.householderQ();
    Vector lambda(n);
    for (Eigen::Index i = 0; i < n; ++i)
        lambda(i) = std::exp(uniform(rng, std::log(lo), std::log(hi)));
    return SymmetricMatrix(q * lambda.asDiagonal() * q.transpose());
}

inline double relative_error(const Vector& got, const Vector& want) {
    return (got - want).norm() / std::max(1.0, want.norm());
}

inline double relative_error(const Matrix& got, const Matrix& want) {
    return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace confsafe::testing
