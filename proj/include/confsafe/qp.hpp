#pragma once

#include <vector>

#include "confsafe/numerics.hpp"

namespace confsafe {

/// min 1/2 x^T H x + c^T x  s.t.  A x <= b, with H positive semidefinite.
struct QuadraticProgram {
    Matrix H;
    Vector c;
    Matrix A;
    Vector b;
};

struct QpSolution {
    Vector x;
    Vector multipliers;       // one per row of A, zero for inactive rows
    std::vector<int> active;  // indices of the active rows, ascending
    double objective = 0.0;
    bool kkt_satisfied = false;
    double max_violation = 0.0;  // largest primal/dual violation of the returned point
};

/// Active-set enumeration for small dense QPs. Candidate working sets are
/// visited by increasing size (lexicographic within a size); the first set
/// whose equality-constrained KKT point is primal and dual feasible is
/// returned, so the reported active set is a smallest optimal one.
///
/// A variable with zero curvature must be bounded by some active row, so
/// working sets that leave it free are skipped without a factorization.
///
/// If no working set passes within tolerance, the least-violating candidate
/// is returned with kkt_satisfied = false.
[[nodiscard]] QpSolution solve_qp_enumeration(const QuadraticProgram& qp, double tol = 1e-10);

}  // namespace confsafe
