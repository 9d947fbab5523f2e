#include "confsafe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace confsafe {

Matrix symmetrize(const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("symmetrize: matrix is not square");
    return 0.5 * (m + m.transpose());
}

SymmetricMatrix::SymmetricMatrix(const Matrix& m) : m_(symmetrize(m)) {}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index n) {
    return SymmetricMatrix(Matrix::Identity(n, n));
}

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& d) {
    return SymmetricMatrix(Matrix(d.asDiagonal()));
}

bool SymmetricMatrix::is_positive_definite(double rel_tol) const {
    if (dim() == 0 || !all_finite())
        return false;
    const auto eig = sym_eig(*this);
    const double largest = eig.eigenvalues(dim() - 1);
    return largest > 0.0 && eig.eigenvalues(0) > rel_tol * largest;
}

SpectralDecomposition sym_eig(const SymmetricMatrix& s) {
    const Eigen::Index n = s.dim();
    Matrix a = s.matrix();
    Matrix v = Matrix::Identity(n, n);

    if (!a.allFinite())
        throw NumericalError("sym_eig: non-finite entries");

    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
    bool converged = false;
    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-14 * scale) {
            converged = true;
            break;
        }

        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                // Rutishauser's stable rotation: t = tan of the rotation angle.
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged)
        throw ConvergenceFailure("sym_eig: Jacobi iteration exceeded sweep budget");

    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    SpectralDecomposition out{Vector(n), Matrix(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigenvalues(k) = a(order[k], order[k]);
        out.eigenvectors.col(k) = v.col(order[k]);
    }
    return out;
}

Matrix cholesky_lower(const SymmetricMatrix& p, double min_pivot) {
    const Eigen::Index n = p.dim();
    const Matrix& a = p.matrix();
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k)
            d -= l(j, k) * l(j, k);
        if (!(d > min_pivot))
            throw NotPositiveDefinite("Cholesky pivot " + std::to_string(j) + " = " + std::to_string(d) +
                                      " is not positive");
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k)
                s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

SymmetricMatrix spd_inverse(const SymmetricMatrix& p) {
    const Eigen::Index n = p.dim();
    const Matrix l = cholesky_lower(p);
    // P^{-1} = L^{-T} L^{-1}
    const Matrix l_inv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    return SymmetricMatrix(l_inv.transpose() * l_inv);
}

void require_positive_definite(const SymmetricMatrix& p, double rel_tol, const std::string& what) {
    if (!p.all_finite())
        throw NotPositiveDefinite(what + ": non-finite entries");
    const double largest = p.matrix().diagonal().maxCoeff();
    try {
        (void)cholesky_lower(p, rel_tol * std::max(largest, 0.0));
    } catch (const NotPositiveDefinite& e) {
        throw NotPositiveDefinite(what + ": " + e.what());
    }
}

namespace {

void check_stage(const Vector& k, int stage, double t) {
    if (!k.allFinite())
        throw NonFiniteDerivative("rk4_step: stage " + std::to_string(stage) + " derivative is non-finite at t = " +
                                  std::to_string(t));
}

}  // namespace

Vector rk4_step(const OdeRhs& rhs, double t, const Vector& y, double dt) {
    if (!(dt > 0.0))
        throw std::invalid_argument("rk4_step: dt must be positive");
    const double half = 0.5 * dt;
    const Vector k1 = rhs(t, y);
    check_stage(k1, 1, t);
    const Vector k2 = rhs(t + half, y + half * k1);
    check_stage(k2, 2, t + half);
    const Vector k3 = rhs(t + half, y + half * k2);
    check_stage(k3, 3, t + half);
    const Vector k4 = rhs(t + dt, y + dt * k3);
    check_stage(k4, 4, t + dt);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector finite_diff_gradient(const ScalarField& fn, const Vector& point, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("finite_diff_gradient: step must be positive");
    Vector grad(point.size());
    Vector x = point;
    for (Eigen::Index k = 0; k < point.size(); ++k) {
        x(k) = point(k) + h;
        const double fp = fn(x);
        x(k) = point(k) - h;
        const double fm = fn(x);
        x(k) = point(k);
        grad(k) = (fp - fm) / (2.0 * h);
    }
    return grad;
}

Matrix finite_diff_jacobian(const VectorField& fn, const Vector& point, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("finite_diff_jacobian: step must be positive");
    Vector x = point;
    Matrix jac;
    for (Eigen::Index k = 0; k < point.size(); ++k) {
        x(k) = point(k) + h;
        const Vector fp = fn(x);
        x(k) = point(k) - h;
        const Vector fm = fn(x);
        x(k) = point(k);
        if (k == 0)
            jac.resize(fp.size(), point.size());
        jac.col(k) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

}  // namespace confsafe
