#pragma once

#include <functional>
#include <string>
#include <vector>

#include "confsafe/numerics.hpp"

namespace confsafe {

/// Axis-aligned box [lo, hi] per coordinate.
struct Box {
    Vector lo;
    Vector hi;

    [[nodiscard]] Eigen::Index dim() const { return lo.size(); }
    [[nodiscard]] bool contains(const Vector& x, double tol = 0.0) const;
    void validate(const std::string& what) const;
};

struct AdmissibleSets {
    Box state_box;    // X and X-hat
    Box control_box;  // U
};

/// Control-affine plant xdot = f(x) + g(x) u, z = q(x), with analytic
/// first derivatives. actuation_jacobian(x)[k] is the Jacobian of column k
/// of g, so the tensor contraction (dg/dx) u is sum_k u_k * slice_k.
struct SystemModel {
    std::string name;
    Eigen::Index n_x = 0;
    Eigen::Index n_u = 0;
    Eigen::Index n_z = 0;

    std::function<Vector(const Vector&)> drift;
    std::function<Matrix(const Vector&)> actuation;
    std::function<Vector(const Vector&)> output;
    std::function<Matrix(const Vector&)> drift_jacobian;
    std::function<std::vector<Matrix>(const Vector&)> actuation_jacobian;
    std::function<Matrix(const Vector&)> output_jacobian;

    [[nodiscard]] Vector dynamics(const Vector& x, const Vector& u) const { return drift(x) + actuation(x) * u; }
};

// xdot1 = -x1/4 - x2, xdot2 = x1^3 - x2/2 + (x2^2 + 1) u, z = x1
[[nodiscard]] SystemModel second_order_system();

// State (x, y, theta), control (v, omega), output (x, y).
[[nodiscard]] SystemModel unicycle_system();

/// A = df/dx(xhat) + sum_k u_k dg_k/dx(xhat)
[[nodiscard]] Matrix linearization_A(const SystemModel& model, const Vector& xhat, const Vector& u);

struct UnicycleGains {
    double d1 = 1.0;
    double d2 = 2.0;
    double d3 = 1.0;
    double goal_x = 6.0;
    double goal_y = 6.0;

    void validate() const;
};

/// Wraps an angle into (-pi, pi].
[[nodiscard]] double wrap_to_pi(double angle);

inline constexpr double kHeadingSingularity = 1e-8;

/// Closed-loop polar-coordinate steering law toward (goal_x, goal_y):
///   v = d1 e cos(phi)
///   w = d2 phi + d1 cos(phi) sin(phi) [phi + d3 (phi + theta)] / phi
/// with phi the wrapped bearing error. Below |phi| < kHeadingSingularity the
/// phi -> 0 limit is used. Returns zero control at the goal.
[[nodiscard]] Vector unicycle_nominal(const Vector& xhat, const UnicycleGains& gains);

}  // namespace confsafe
