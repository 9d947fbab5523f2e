#pragma once

#include <optional>
#include <string>
#include <vector>

#include "confsafe/numerics.hpp"
#include "confsafe/observer.hpp"
#include "confsafe/safety.hpp"
#include "confsafe/systems.hpp"

namespace confsafe {

enum class ConfidenceMetric { min_eigenvalue, trace, log_determinant };

[[nodiscard]] std::string to_string(ConfidenceMetric metric);
[[nodiscard]] ConfidenceMetric parse_confidence_metric(const std::string& text);

struct SolverWeights {
    double c1 = 0.0;       // confidence weight
    double c2 = 1.0;       // CLF relaxation weight (P1 only)
    double dt_ctrl = 0.01;
    ConfidenceMetric metric = ConfidenceMetric::min_eigenvalue;

    void validate() const;
};

enum class SolverStatus { optimal, max_iter, infeasible_cbf };

[[nodiscard]] std::string to_string(SolverStatus status);

struct SolverResult {
    Vector u;
    double delta = 0.0;
    double objective = 0.0;
    int iterations = 0;
    int cuts = 0;
    SolverStatus status = SolverStatus::optimal;
    double metric_value = 0.0;
    double gap = 0.0;
    double cbf_residual = 0.0;  // a.u - b of the CBF row, <= 0 when satisfied
    bool near_degenerate = false;
};

// ============================================================================
// Confidence metric
// ============================================================================

inline constexpr double kEigenGapWarning = 1e-8;

struct MetricEvaluation {
    double value = 0.0;
    Vector grad;
    bool near_degenerate = false;  // min-eigenvalue gap below kEigenGapWarning
};

/// Metric of the predicted confidence and its gradient with respect to u,
/// where dS_du[k] = dS_pred/du_k.
///   min_eigenvalue:  grad_k = v1^T dS_du[k] v1
///   trace:           grad_k = tr(dS_du[k])
///   log_determinant: grad_k = tr(S_pred^{-1} dS_du[k])
/// For a repeated smallest eigenvalue the returned gradient is a supergradient
/// built from one eigenvector of the cluster and near_degenerate is set.
/// log_determinant throws NotPositiveDefinite if S_pred is not positive definite.
[[nodiscard]] MetricEvaluation metric_and_gradient(const SymmetricMatrix& s_pred,
                                                   const std::vector<SymmetricMatrix>& ds_du,
                                                   ConfidenceMetric metric);

/// S_pred(u) = base + sum_k u_k slopes[k]; exact because A is affine in u and
/// C does not depend on u.
struct AffineConfidence {
    SymmetricMatrix base;
    std::vector<SymmetricMatrix> slopes;

    [[nodiscard]] SymmetricMatrix at(const Vector& u) const;
};

/// base = predict_confidence(S, A(xhat, 0), ...), slopes[k] = -dt (G_k^T S + S G_k)
/// with G_k the k-th actuation Jacobian slice.
[[nodiscard]] AffineConfidence confidence_prediction(const SystemModel& model, const Vector& xhat,
                                                     const SymmetricMatrix& s, const ObserverConfig& cfg,
                                                     double dt_ctrl);

// ============================================================================
// Confidence-aware programs
// ============================================================================

/// Generic form shared by both controllers:
///   min  |u - reference|^2 + c2 delta^2 - c1 metric(S_pred(u))
///   s.t. clf.a u <= clf.b + delta   (only if clf is set; delta exists only then)
///        cbf.a u <= cbf.b
///        u in control_box
struct ConfidenceProgram {
    AffineConfidence confidence;
    Vector reference;
    std::optional<LinearRow> clf;
    double relaxation_weight = 1.0;
    LinearRow cbf;
    Box control_box;
    double c1 = 0.0;
    ConfidenceMetric metric = ConfidenceMetric::min_eigenvalue;

    [[nodiscard]] Eigen::Index n_u() const { return reference.size(); }
    [[nodiscard]] double metric_at(const Vector& u) const;
    [[nodiscard]] double objective(const Vector& u, double delta) const;
};

struct CuttingPlaneOptions {
    int max_cuts = 50;
    double gap_tol = 1e-6;
    double qp_tol = 1e-10;
};

/// Kelley cutting planes on the concave metric with an epigraph variable.
/// Each master problem is a QP solved by active-set enumeration; the loop
/// stops when (best objective) - (master lower bound) <= gap_tol or after
/// max_cuts cuts. Returns the best iterate seen.
[[nodiscard]] SolverResult solve_confidence_program(const ConfidenceProgram& program,
                                                    const CuttingPlaneOptions& options = {});

/// Cutting plane j at point u_j: metric(u_j) + grad_j . (u - u_j).
struct CuttingPlane {
    Vector point;
    double value = 0.0;
    Vector grad;

    [[nodiscard]] double operator()(const Vector& u) const { return value + grad.dot(u - point); }
};

[[nodiscard]] CuttingPlane make_cut(const ConfidenceProgram& program, const Vector& u);

/// CLF-CBF program with confidence term:
///   min u^T u - c1 metric(S(t + dt)) + c2 delta^2
///   s.t. relaxed CLF row, hard CBF row, u in box.
[[nodiscard]] ConfidenceProgram build_p1(const SystemModel& model, const StabilitySpec& stab, const SafetySpec& safe,
                                         const Vector& xhat, const Vector& z, const SymmetricMatrix& s,
                                         const ObserverConfig& cfg, const SolverWeights& weights,
                                         const Box& control_box);

/// Nominal tracking with confidence term:
///   min |u - u_nominal|^2 - c1 metric(S(t + dt))  s.t. hard CBF row, u in box.
[[nodiscard]] ConfidenceProgram build_p2(const SystemModel& model, const SafetySpec& safe, const Vector& nominal_u,
                                         const Vector& xhat, const Vector& z, const SymmetricMatrix& s,
                                         const ObserverConfig& cfg, const SolverWeights& weights,
                                         const Box& control_box);

[[nodiscard]] SolverResult solve_p1(const SystemModel& model, const StabilitySpec& stab, const SafetySpec& safe,
                                    const Vector& xhat, const Vector& z, const SymmetricMatrix& s,
                                    const ObserverConfig& cfg, const SolverWeights& weights, const Box& control_box,
                                    const CuttingPlaneOptions& options = {});

[[nodiscard]] SolverResult solve_p2(const SystemModel& model, const SafetySpec& safe, const Vector& nominal_u,
                                    const Vector& xhat, const Vector& z, const SymmetricMatrix& s,
                                    const ObserverConfig& cfg, const SolverWeights& weights, const Box& control_box,
                                    const CuttingPlaneOptions& options = {});

// ============================================================================
// Brute-force oracle
// ============================================================================

class EmptyFeasibleGrid : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridOracleResult {
    Vector point;
    double objective = 0.0;
    std::size_t feasible_points = 0;
};

/// Exhaustive search over a uniform grid of `box` with `resolution` points
/// per axis (>= 101). Points violating any row a.x <= b are skipped.
[[nodiscard]] GridOracleResult grid_oracle(const ScalarField& objective, const std::vector<LinearRow>& rows,
                                           const Box& box, int resolution);

}  // namespace confsafe
