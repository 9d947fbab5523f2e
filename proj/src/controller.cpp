#include "confsafe/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "confsafe/qp.hpp"

namespace confsafe {

std::string to_string(ConfidenceMetric metric) {
    switch (metric) {
    case ConfidenceMetric::min_eigenvalue: return "min_eigenvalue";
    case ConfidenceMetric::trace: return "trace";
    case ConfidenceMetric::log_determinant: return "log_determinant";
    }
    return "unknown";
}

ConfidenceMetric parse_confidence_metric(const std::string& text) {
    if (text == "min_eigenvalue")
        return ConfidenceMetric::min_eigenvalue;
    if (text == "trace")
        return ConfidenceMetric::trace;
    if (text == "log_determinant")
        return ConfidenceMetric::log_determinant;
    throw std::invalid_argument("unknown confidence metric '" + text + "'");
}

std::string to_string(SolverStatus status) {
    switch (status) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::infeasible_cbf: return "infeasible_cbf";
    }
    return "unknown";
}

void SolverWeights::validate() const {
    if (!(c1 >= 0.0))
        throw std::invalid_argument("c1 must be >= 0");
    if (!(c2 > 0.0))
        throw std::invalid_argument("c2 must be > 0");
    if (!(dt_ctrl > 0.0))
        throw std::invalid_argument("dt_ctrl must be > 0");
}

MetricEvaluation metric_and_gradient(const SymmetricMatrix& s_pred, const std::vector<SymmetricMatrix>& ds_du,
                                     ConfidenceMetric metric) {
    MetricEvaluation out;
    out.grad = Vector::Zero(static_cast<Eigen::Index>(ds_du.size()));
    switch (metric) {
    case ConfidenceMetric::min_eigenvalue: {
        const auto eig = sym_eig(s_pred);
        out.value = eig.eigenvalues(0);
        if (eig.eigenvalues.size() > 1 && eig.eigenvalues(1) - eig.eigenvalues(0) < kEigenGapWarning)
            out.near_degenerate = true;
        const Vector v = eig.eigenvectors.col(0);
        for (size_t k = 0; k < ds_du.size(); ++k)
            out.grad(static_cast<Eigen::Index>(k)) = v.dot(ds_du[k].matrix() * v);
        break;
    }
    case ConfidenceMetric::trace:
        out.value = s_pred.matrix().trace();
        for (size_t k = 0; k < ds_du.size(); ++k)
            out.grad(static_cast<Eigen::Index>(k)) = ds_du[k].matrix().trace();
        break;
    case ConfidenceMetric::log_determinant: {
        const Matrix l = cholesky_lower(s_pred);
        out.value = 2.0 * l.diagonal().array().log().sum();
        const Matrix inv = spd_inverse(s_pred).matrix();
        for (size_t k = 0; k < ds_du.size(); ++k)
            out.grad(static_cast<Eigen::Index>(k)) = (inv * ds_du[k].matrix()).trace();
        break;
    }
    }
    return out;
}

SymmetricMatrix AffineConfidence::at(const Vector& u) const {
    Matrix m = base.matrix();
    for (size_t k = 0; k < slopes.size(); ++k)
        m += u(static_cast<Eigen::Index>(k)) * slopes[k].matrix();
    return SymmetricMatrix(m);
}

AffineConfidence confidence_prediction(const SystemModel& model, const Vector& xhat, const SymmetricMatrix& s,
                                       const ObserverConfig& cfg, double dt_ctrl) {
    AffineConfidence out;
    const Matrix a0 = linearization_A(model, xhat, Vector::Zero(model.n_u));
    const Matrix c = model.output_jacobian(xhat);
    out.base = predict_confidence(s, a0, c, cfg.Q, cfg.R, cfg.kappa, dt_ctrl);
    for (const Matrix& g : model.actuation_jacobian(xhat)) {
        const Matrix sg = s.matrix() * g;
        out.slopes.emplace_back(-dt_ctrl * (sg.transpose() + sg));
    }
    return out;
}

double ConfidenceProgram::metric_at(const Vector& u) const {
    return metric_and_gradient(confidence.at(u), confidence.slopes, metric).value;
}

double ConfidenceProgram::objective(const Vector& u, double delta) const {
    double f = (u - reference).squaredNorm();
    if (clf)
        f += relaxation_weight * delta * delta;
    if (c1 != 0.0)
        f -= c1 * metric_at(u);
    return f;
}

CuttingPlane make_cut(const ConfidenceProgram& program, const Vector& u) {
    const auto eval = metric_and_gradient(program.confidence.at(u), program.confidence.slopes, program.metric);
    return {u, eval.value, eval.grad};
}

namespace {

// Variable layout of the master problem: [u, delta?, tau?].
struct MasterLayout {
    Eigen::Index n_u;
    Eigen::Index delta;  // -1 if absent
    Eigen::Index tau;    // -1 if absent
    Eigen::Index n;
};

MasterLayout layout_for(const ConfidenceProgram& p, bool with_tau) {
    MasterLayout l{p.n_u(), -1, -1, p.n_u()};
    if (p.clf)
        l.delta = l.n++;
    if (with_tau)
        l.tau = l.n++;
    return l;
}

QuadraticProgram master_problem(const ConfidenceProgram& p, const MasterLayout& l,
                                const std::vector<CuttingPlane>& cuts) {
    QuadraticProgram qp;
    qp.H = Matrix::Zero(l.n, l.n);
    qp.c = Vector::Zero(l.n);
    qp.H.topLeftCorner(l.n_u, l.n_u) = 2.0 * Matrix::Identity(l.n_u, l.n_u);
    qp.c.head(l.n_u) = -2.0 * p.reference;
    if (l.delta >= 0)
        qp.H(l.delta, l.delta) = 2.0 * p.relaxation_weight;
    if (l.tau >= 0)
        qp.c(l.tau) = -p.c1;

    const Eigen::Index rows = (p.clf ? 1 : 0) + 1 + 2 * l.n_u + static_cast<Eigen::Index>(cuts.size());
    qp.A = Matrix::Zero(rows, l.n);
    qp.b = Vector::Zero(rows);
    Eigen::Index r = 0;
    if (p.clf) {
        qp.A.block(r, 0, 1, l.n_u) = p.clf->a.transpose();
        qp.A(r, l.delta) = -1.0;
        qp.b(r) = p.clf->b;
        ++r;
    }
    qp.A.block(r, 0, 1, l.n_u) = p.cbf.a.transpose();
    qp.b(r) = p.cbf.b;
    ++r;
    for (Eigen::Index k = 0; k < l.n_u; ++k) {
        qp.A(r, k) = 1.0;
        qp.b(r++) = p.control_box.hi(k);
        qp.A(r, k) = -1.0;
        qp.b(r++) = -p.control_box.lo(k);
    }
    // tau <= value + grad.(u - point)
    for (const auto& cut : cuts) {
        qp.A.block(r, 0, 1, l.n_u) = -cut.grad.transpose();
        qp.A(r, l.tau) = 1.0;
        qp.b(r++) = cut.value - cut.grad.dot(cut.point);
    }
    return qp;
}

}  // namespace

SolverResult solve_confidence_program(const ConfidenceProgram& p, const CuttingPlaneOptions& options) {
    const Eigen::Index n_u = p.n_u();
    p.control_box.validate("control box");
    if (p.cbf.a.size() != n_u || (p.clf && p.clf->a.size() != n_u))
        throw std::invalid_argument("solve_confidence_program: row dimension mismatch");

    SolverResult result;

    // The CBF row must be satisfiable somewhere in the box.
    double cbf_min = 0.0;
    Vector cbf_argmin(n_u);
    for (Eigen::Index k = 0; k < n_u; ++k) {
        const double lo = p.cbf.a(k) * p.control_box.lo(k);
        const double hi = p.cbf.a(k) * p.control_box.hi(k);
        cbf_argmin(k) = lo <= hi ? p.control_box.lo(k) : p.control_box.hi(k);
        cbf_min += std::min(lo, hi);
    }
    if (cbf_min > p.cbf.b + 1e-12 * (1.0 + std::abs(p.cbf.b))) {
        result.u = cbf_argmin;
        result.delta = p.clf ? std::max(0.0, p.clf->residual(cbf_argmin)) : 0.0;
        result.status = SolverStatus::infeasible_cbf;
        result.cbf_residual = p.cbf.residual(cbf_argmin);
        const auto eval = metric_and_gradient(p.confidence.at(cbf_argmin), p.confidence.slopes, p.metric);
        result.metric_value = eval.value;
        result.objective = p.objective(result.u, result.delta);
        return result;
    }

    auto finish = [&](Vector u, double delta) {
        // Enforce the box exactly; the QP returns it to within roundoff.
        for (Eigen::Index k = 0; k < n_u; ++k)
            u(k) = std::clamp(u(k), p.control_box.lo(k), p.control_box.hi(k));
        result.u = u;
        result.delta = delta;
        const auto eval = metric_and_gradient(p.confidence.at(u), p.confidence.slopes, p.metric);
        result.metric_value = eval.value;
        result.near_degenerate = result.near_degenerate || eval.near_degenerate;
        result.objective = p.objective(u, delta);
        result.cbf_residual = p.cbf.residual(u);
    };

    // Without a confidence term the program is a single QP.
    const MasterLayout plain = layout_for(p, false);
    const QpSolution base = solve_qp_enumeration(master_problem(p, plain, {}), options.qp_tol);
    result.iterations = 1;
    const double base_delta = plain.delta >= 0 ? base.x(plain.delta) : 0.0;
    if (p.c1 == 0.0) {
        finish(base.x.head(n_u), base_delta);
        result.status = base.kkt_satisfied ? SolverStatus::optimal : SolverStatus::max_iter;
        return result;
    }

    const MasterLayout l = layout_for(p, true);
    std::vector<CuttingPlane> cuts;
    cuts.push_back(make_cut(p, base.x.head(n_u)));

    Vector best_u = base.x.head(n_u);
    double best_delta = base_delta;
    double best_obj = p.objective(best_u, best_delta);
    double lower = -std::numeric_limits<double>::infinity();
    bool master_ok = base.kkt_satisfied;

    while (true) {
        const QpSolution master = solve_qp_enumeration(master_problem(p, l, cuts), options.qp_tol);
        ++result.iterations;
        master_ok = master_ok && master.kkt_satisfied;

        // Constant term |reference|^2 of the expanded objective.
        lower = std::max(lower, master.objective + p.reference.squaredNorm());
        const Vector u = master.x.head(n_u);
        const double delta = l.delta >= 0 ? master.x(l.delta) : 0.0;
        const CuttingPlane cut = make_cut(p, u);
        double obj = (u - p.reference).squaredNorm() - p.c1 * cut.value;
        if (p.clf)
            obj += p.relaxation_weight * delta * delta;
        if (obj < best_obj) {
            best_obj = obj;
            best_u = u;
            best_delta = delta;
        }

        result.gap = best_obj - lower;
        if (result.gap <= options.gap_tol) {
            result.status = master_ok ? SolverStatus::optimal : SolverStatus::max_iter;
            break;
        }
        if (static_cast<int>(cuts.size()) >= options.max_cuts) {
            result.status = SolverStatus::max_iter;
            break;
        }
        cuts.push_back(cut);
    }
    result.cuts = static_cast<int>(cuts.size());
    finish(best_u, best_delta);
    return result;
}

ConfidenceProgram build_p1(const SystemModel& model, const StabilitySpec& stab, const SafetySpec& safe,
                           const Vector& xhat, const Vector& z, const SymmetricMatrix& s, const ObserverConfig& cfg,
                           const SolverWeights& weights, const Box& control_box) {
    ConfidenceProgram p;
    p.confidence = confidence_prediction(model, xhat, s, cfg, weights.dt_ctrl);
    p.reference = Vector::Zero(model.n_u);
    p.clf = clf_row(stab, model, xhat);
    p.relaxation_weight = weights.c2;
    p.cbf = cbf_row(safe, model, xhat, z, s, cfg.R);
    p.control_box = control_box;
    p.c1 = weights.c1;
    p.metric = weights.metric;
    return p;
}

ConfidenceProgram build_p2(const SystemModel& model, const SafetySpec& safe, const Vector& nominal_u,
                           const Vector& xhat, const Vector& z, const SymmetricMatrix& s, const ObserverConfig& cfg,
                           const SolverWeights& weights, const Box& control_box) {
    ConfidenceProgram p;
    p.confidence = confidence_prediction(model, xhat, s, cfg, weights.dt_ctrl);
    p.reference = nominal_u;
    p.cbf = cbf_row(safe, model, xhat, z, s, cfg.R);
    p.control_box = control_box;
    p.c1 = weights.c1;
    p.metric = weights.metric;
    return p;
}

SolverResult solve_p1(const SystemModel& model, const StabilitySpec& stab, const SafetySpec& safe,
                      const Vector& xhat, const Vector& z, const SymmetricMatrix& s, const ObserverConfig& cfg,
                      const SolverWeights& weights, const Box& control_box, const CuttingPlaneOptions& options) {
    weights.validate();
    return solve_confidence_program(build_p1(model, stab, safe, xhat, z, s, cfg, weights, control_box), options);
}

SolverResult solve_p2(const SystemModel& model, const SafetySpec& safe, const Vector& nominal_u, const Vector& xhat,
                      const Vector& z, const SymmetricMatrix& s, const ObserverConfig& cfg,
                      const SolverWeights& weights, const Box& control_box, const CuttingPlaneOptions& options) {
    weights.validate();
    return solve_confidence_program(build_p2(model, safe, nominal_u, xhat, z, s, cfg, weights, control_box),
                                    options);
}

GridOracleResult grid_oracle(const ScalarField& objective, const std::vector<LinearRow>& rows, const Box& box,
                             int resolution) {
    if (resolution < 101)
        throw std::invalid_argument("grid_oracle: resolution must be >= 101");
    box.validate("grid box");
    const Eigen::Index n = box.dim();

    GridOracleResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<size_t>(n), 0);
    Vector x(n);
    while (true) {
        for (Eigen::Index i = 0; i < n; ++i)
            x(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * idx[static_cast<size_t>(i)] / (resolution - 1);

        bool feasible = true;
        for (const auto& row : rows)
            if (row.residual(x) > 0.0) {
                feasible = false;
                break;
            }
        if (feasible) {
            ++best.feasible_points;
            const double f = objective(x);
            if (f < best.objective) {
                best.objective = f;
                best.point = x;
            }
        }

        Eigen::Index d = 0;
        while (d < n && ++idx[static_cast<size_t>(d)] == resolution) {
            idx[static_cast<size_t>(d)] = 0;
            ++d;
        }
        if (d == n)
            break;
    }
    if (best.feasible_points == 0)
        throw EmptyFeasibleGrid("grid_oracle: no grid point satisfies the constraints");
    return best;
}

}  // namespace confsafe
