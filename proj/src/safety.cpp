#include "confsafe/safety.hpp"

#include <cmath>
#include <limits>

namespace confsafe {

void TheoryConstants::validate() const {
    if (!(eta > 0.0 && theta > 0.0 && epsilon > 0.0 && K_h > 0.0))
        throw std::invalid_argument("theory constants eta, theta, epsilon, K_h must be positive");
}

StabilitySpec second_order_clf(double gamma) {
    StabilitySpec s;
    s.V = [](const Vector& x) { return std::pow(x(0), 4) / 4.0 + x(1) * x(1) / 2.0; };
    s.grad_V = [](const Vector& x) {
        Vector g(2);
        g << x(0) * x(0) * x(0), x(1);
        return g;
    };
    s.gamma = gamma;
    return s;
}

SafetySpec second_order_cbf(double alpha) {
    SafetySpec s;
    s.h = [](const Vector& x) { return -x(0) / 2.0 + x(1) + 0.5; };
    s.grad_h = [](const Vector&) {
        Vector g(2);
        g << -0.5, 1.0;
        return g;
    };
    s.alpha = alpha;
    return s;
}

SafetySpec obstacle_cbf(const CircularObstacle& obstacle, double alpha) {
    SafetySpec s;
    s.h = [obstacle](const Vector& x) {
        const double dx = x(0) - obstacle.x;
        const double dy = x(1) - obstacle.y;
        return dx * dx + dy * dy - obstacle.radius * obstacle.radius;
    };
    s.grad_h = [obstacle](const Vector& x) {
        Vector g = Vector::Zero(x.size());
        g(0) = 2.0 * (x(0) - obstacle.x);
        g(1) = 2.0 * (x(1) - obstacle.y);
        return g;
    };
    s.alpha = alpha;
    return s;
}

StabilitySpec goal_distance_clf(double goal_x, double goal_y, double gamma) {
    StabilitySpec s;
    s.V = [=](const Vector& x) {
        const double dx = x(0) - goal_x;
        const double dy = x(1) - goal_y;
        return 0.5 * (dx * dx + dy * dy);
    };
    s.grad_V = [=](const Vector& x) {
        Vector g = Vector::Zero(x.size());
        g(0) = x(0) - goal_x;
        g(1) = x(1) - goal_y;
        return g;
    };
    s.gamma = gamma;
    return s;
}

LinearRow clf_row(const StabilitySpec& spec, const SystemModel& model, const Vector& xhat) {
    const Vector grad = spec.grad_V(xhat);
    const double lf = grad.dot(model.drift(xhat));
    LinearRow row;
    row.a = (grad.transpose() * model.actuation(xhat)).transpose();
    row.b = -lf - spec.gamma * spec.V(xhat);
    return row;
}

LinearRow cbf_row(const SafetySpec& spec, const SystemModel& model, const Vector& xhat, const Vector& z,
                  const SymmetricMatrix& s, const SymmetricMatrix& r) {
    const Vector grad = spec.grad_h(xhat);
    const Matrix c = model.output_jacobian(xhat);
    const Matrix gain = spd_inverse(s).matrix() * c.transpose() * spd_inverse(r).matrix();
    const double innovation = grad.dot(gain * (z - model.output(xhat)));

    LinearRow row;
    row.a = -(grad.transpose() * model.actuation(xhat)).transpose();
    row.b = grad.dot(model.drift(xhat)) + spec.alpha * spec.h(xhat) + innovation;
    return row;
}

InitialConditionReport validate_initial_conditions(const TheoryConstants& consts, const SafetySpec& spec,
                                                   const Vector& x0, const Vector& xhat0) {
    InitialConditionReport rep;
    rep.error_norm = (x0 - xhat0).norm();
    rep.m0 = consts.eta * rep.error_norm;
    rep.h_x0 = spec.h(x0);
    rep.required_h = 2.0 * consts.K_h * rep.m0;
    rep.safe_margin = rep.h_x0 - rep.required_h;
    rep.ball_margin = consts.epsilon - rep.error_norm;
    rep.x0_in_initial_set = rep.safe_margin >= 0.0;
    rep.xhat0_in_initial_set = rep.error_norm < consts.epsilon;
    return rep;
}

CbfConditionDiagnostic cbf_condition_margin(const SafetySpec& spec, const SystemModel& model,
                                            const AdmissibleSets& sets, double r_lo, double p_hi, double K_h,
                                            double K_q, double m0, int points_per_axis) {
    if (points_per_axis < 2)
        throw std::invalid_argument("cbf_condition_margin: need at least 2 points per axis");
    const Box& box = sets.state_box;
    const Eigen::Index n = box.dim();
    const double offset = p_hi * K_h * K_q * K_q * m0 / r_lo;

    CbfConditionDiagnostic diag;
    diag.worst_margin = std::numeric_limits<double>::infinity();

    std::vector<int> idx(static_cast<size_t>(n), 0);
    Vector x(n);
    while (true) {
        for (Eigen::Index i = 0; i < n; ++i)
            x(i) = box.lo(i) + (box.hi(i) - box.lo(i)) * idx[static_cast<size_t>(i)] / (points_per_axis - 1);

        const double h = spec.h(x);
        if (h >= 0.0) {
            const Vector grad = spec.grad_h(x);
            const Vector lg = (grad.transpose() * model.actuation(x)).transpose();
            double best = grad.dot(model.drift(x));
            for (Eigen::Index k = 0; k < lg.size(); ++k)
                best += std::max(lg(k) * sets.control_box.lo(k), lg(k) * sets.control_box.hi(k));
            const double margin = best - offset + spec.alpha * h;
            ++diag.samples;
            if (margin < diag.worst_margin) {
                diag.worst_margin = margin;
                diag.worst_state = x;
            }
        }

        Eigen::Index d = 0;
        while (d < n && ++idx[static_cast<size_t>(d)] == points_per_axis) {
            idx[static_cast<size_t>(d)] = 0;
            ++d;
        }
        if (d == n)
            break;
    }
    return diag;
}

}  // namespace confsafe
