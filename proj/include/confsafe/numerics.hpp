#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace confsafe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ============================================================================
// Errors
// ============================================================================

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An RK4 stage produced NaN/Inf. Usually means the trajectory blew up.
class NonFiniteDerivative : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// ============================================================================
// SymmetricMatrix
// ============================================================================

/// Dense symmetric matrix. The stored entries are exactly symmetric: every
/// construction path goes through (M + Mᵀ)/2.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(const Matrix& m);

    static SymmetricMatrix identity(Eigen::Index n);
    static SymmetricMatrix diagonal(const Vector& d);

    [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }
    [[nodiscard]] const Matrix& matrix() const { return m_; }
    [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    // All eigenvalues > rel_tol * largest eigenvalue (and the largest > 0).
    [[nodiscard]] bool is_positive_definite(double rel_tol = 1e-12) const;

    [[nodiscard]] bool all_finite() const { return m_.allFinite(); }

private:
    Matrix m_;
};

[[nodiscard]] Matrix symmetrize(const Matrix& m);

// ============================================================================
// Spectral decomposition (cyclic Jacobi)
// ============================================================================

struct SpectralDecomposition {
    Vector eigenvalues;   // ascending
    Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

inline constexpr int kJacobiMaxSweeps = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Throws ConvergenceFailure if the off-diagonal mass has not vanished after
/// kJacobiMaxSweeps sweeps.
[[nodiscard]] SpectralDecomposition sym_eig(const SymmetricMatrix& s);

// ============================================================================
// Positive definite inverse
// ============================================================================

/// Cholesky pivots of a symmetric matrix. Throws NotPositiveDefinite as soon
/// as a pivot is <= min_pivot.
[[nodiscard]] Matrix cholesky_lower(const SymmetricMatrix& p, double min_pivot = 0.0);

/// Inverse of a positive definite matrix via Cholesky. The result is
/// symmetrized. Throws NotPositiveDefinite on a nonpositive pivot.
[[nodiscard]] SymmetricMatrix spd_inverse(const SymmetricMatrix& p);

/// Definiteness check used by the observer: Cholesky pivots must exceed
/// rel_tol times the largest diagonal entry.
void require_positive_definite(const SymmetricMatrix& p, double rel_tol, const std::string& what);

// ============================================================================
// Integration and differentiation
// ============================================================================

using OdeRhs = std::function<Vector(double, const Vector&)>;

/// One classical Runge-Kutta step. Throws NonFiniteDerivative if any stage
/// derivative contains NaN or Inf.
[[nodiscard]] Vector rk4_step(const OdeRhs& rhs, double t, const Vector& y, double dt);

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

/// Central differences (f(x + h e_k) - f(x - h e_k)) / 2h per coordinate.
[[nodiscard]] Vector finite_diff_gradient(const ScalarField& fn, const Vector& point, double h);

/// Column k is the central difference along e_k.
[[nodiscard]] Matrix finite_diff_jacobian(const VectorField& fn, const Vector& point, double h);

}  // namespace confsafe
