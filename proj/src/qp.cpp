#include "confsafe/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace confsafe {

namespace {

struct Candidate {
    Vector x;
    Vector lambda;
    double violation;
};

}  // namespace

QpSolution solve_qp_enumeration(const QuadraticProgram& qp, double tol) {
    const Eigen::Index n = qp.H.rows();
    const Eigen::Index m = qp.A.rows();

    std::vector<Eigen::Index> flat_vars;
    for (Eigen::Index j = 0; j < n; ++j)
        if (qp.H.row(j).cwiseAbs().maxCoeff() == 0.0)
            flat_vars.push_back(j);

    Vector row_scale(m);
    for (Eigen::Index i = 0; i < m; ++i)
        row_scale(i) = 1.0 + qp.A.row(i).cwiseAbs().sum() + std::abs(qp.b(i));
    const double dual_scale = 1.0 + qp.c.cwiseAbs().maxCoeff() + qp.H.cwiseAbs().maxCoeff();

    Candidate best{Vector::Zero(n), Vector::Zero(m), std::numeric_limits<double>::infinity()};
    std::vector<int> best_active;

    const Eigen::Index max_size = std::min(n, m);
    std::vector<int> idx;
    for (Eigen::Index size = 0; size <= max_size; ++size) {
        idx.resize(static_cast<size_t>(size));
        for (Eigen::Index k = 0; k < size; ++k)
            idx[static_cast<size_t>(k)] = static_cast<int>(k);

        while (true) {
            bool bounded = true;
            for (Eigen::Index j : flat_vars) {
                bool hit = false;
                for (int i : idx)
                    hit = hit || qp.A(i, j) != 0.0;
                if (!hit) {
                    bounded = false;
                    break;
                }
            }

            if (bounded) {
                const Eigen::Index dim = n + size;
                Matrix kkt = Matrix::Zero(dim, dim);
                Vector rhs(dim);
                kkt.topLeftCorner(n, n) = qp.H;
                rhs.head(n) = -qp.c;
                for (Eigen::Index k = 0; k < size; ++k) {
                    const int i = idx[static_cast<size_t>(k)];
                    kkt.block(n + k, 0, 1, n) = qp.A.row(i);
                    kkt.block(0, n + k, n, 1) = qp.A.row(i).transpose();
                    rhs(n + k) = qp.b(i);
                }
                Eigen::FullPivLU<Matrix> lu(kkt);
                lu.setThreshold(1e-12);
                if (lu.isInvertible()) {
                    const Vector sol = lu.solve(rhs);
                    const Vector x = sol.head(n);
                    Vector lambda = Vector::Zero(m);
                    double violation = 0.0;
                    for (Eigen::Index k = 0; k < size; ++k) {
                        const int i = idx[static_cast<size_t>(k)];
                        lambda(i) = sol(n + k);
                        violation = std::max(violation, -lambda(i) / dual_scale);
                    }
                    for (Eigen::Index i = 0; i < m; ++i)
                        violation = std::max(violation, (qp.A.row(i).dot(x) - qp.b(i)) / row_scale(i));

                    if (violation <= tol) {
                        QpSolution out;
                        out.x = x;
                        out.multipliers = lambda;
                        out.active = idx;
                        out.objective = 0.5 * x.dot(qp.H * x) + qp.c.dot(x);
                        out.kkt_satisfied = true;
                        out.max_violation = std::max(violation, 0.0);
                        return out;
                    }
                    if (violation < best.violation) {
                        best = {x, lambda, violation};
                        best_active = idx;
                    }
                }
            }

            // next combination of `size` indices out of m
            Eigen::Index k = size - 1;
            while (k >= 0 && idx[static_cast<size_t>(k)] == static_cast<int>(m - size + k))
                --k;
            if (k < 0)
                break;
            ++idx[static_cast<size_t>(k)];
            for (Eigen::Index j = k + 1; j < size; ++j)
                idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
        }
    }

    QpSolution out;
    out.x = best.x;
    out.multipliers = best.lambda;
    out.active = best_active;
    out.objective = 0.5 * best.x.dot(qp.H * best.x) + qp.c.dot(best.x);
    out.kkt_satisfied = false;
    out.max_violation = best.violation;
    return out;
}

}  // namespace confsafe
