#pragma once

#include <functional>
#include <optional>

#include "confsafe/numerics.hpp"
#include "confsafe/systems.hpp"

namespace confsafe {

/// Linear inequality a . u <= b in control space.
struct LinearRow {
    Vector a;
    double b = 0.0;

    [[nodiscard]] double residual(const Vector& u) const { return a.dot(u) - b; }
};

struct StabilitySpec {
    std::function<double(const Vector&)> V;
    std::function<Vector(const Vector&)> grad_V;
    double gamma = 1.0;
};

struct SafetySpec {
    std::function<double(const Vector&)> h;
    std::function<Vector(const Vector&)> grad_h;
    double alpha = 1.0;
};

/// Constants of the exponential observer bound |x - xhat|(t) <= eta |x0 - xhat0| e^{-theta t}
/// (valid for |x0 - xhat0| < epsilon) and the Lipschitz constant K_h of h.
/// None of these are computed here; they come from the user.
struct TheoryConstants {
    double eta = 1.0;
    double theta = 1.0;
    double epsilon = 1.0;
    double K_h = 1.0;

    void validate() const;
};

// V = x1^4/4 + x2^2/2 (Vdot = -V along the drift).
[[nodiscard]] StabilitySpec second_order_clf(double gamma);
// h = -x1/2 + x2 + 1/2
[[nodiscard]] SafetySpec second_order_cbf(double alpha);

struct CircularObstacle {
    double x = 5.3;
    double y = 4.0;
    double radius = 1.1;
};

// h = (x - xo)^2 + (y - yo)^2 - r^2 on the (x, y) components of the state.
[[nodiscard]] SafetySpec obstacle_cbf(const CircularObstacle& obstacle, double alpha);
// V = ((x - xg)^2 + (y - yg)^2) / 2; used for tests and custom setups.
[[nodiscard]] StabilitySpec goal_distance_clf(double goal_x, double goal_y, double gamma);

/// CLF row: a = L_g V(xhat), b = -L_f V(xhat) - gamma V(xhat). The solver
/// relaxes it as a . u <= b + delta.
[[nodiscard]] LinearRow clf_row(const StabilitySpec& spec, const SystemModel& model, const Vector& xhat);

/// CBF row for membership in the observer-based safe control set:
///   a = -L_g h(xhat)
///   b = L_f h(xhat) + alpha h(xhat) + grad_h(xhat)^T S^{-1} C^T R^{-1} (z - q(xhat))
/// Throws NotPositiveDefinite if S cannot be inverted.
[[nodiscard]] LinearRow cbf_row(const SafetySpec& spec, const SystemModel& model, const Vector& xhat, const Vector& z,
                                const SymmetricMatrix& s, const SymmetricMatrix& r);

[[nodiscard]] inline double barrier_margin(const SafetySpec& spec, const Vector& x) { return spec.h(x); }

struct InitialConditionReport {
    double error_norm = 0.0;       // |x0 - xhat0|
    double m0 = 0.0;               // eta |x0 - xhat0|
    double h_x0 = 0.0;
    double required_h = 0.0;       // 2 K_h M(0)
    double safe_margin = 0.0;      // h(x0) - 2 K_h M(0)
    double ball_margin = 0.0;      // epsilon - |x0 - xhat0|
    bool x0_in_initial_set = false;
    bool xhat0_in_initial_set = false;

    [[nodiscard]] bool passed() const { return x0_in_initial_set && xhat0_in_initial_set; }
};

/// Advisory check of the initial sets X0 = {h(x) >= 2 K_h M(0)} and
/// Xhat0 = {x0 - xhat0 in B_epsilon} with M(0) = eta |x0 - xhat0|.
[[nodiscard]] InitialConditionReport validate_initial_conditions(const TheoryConstants& consts,
                                                                 const SafetySpec& spec, const Vector& x0,
                                                                 const Vector& xhat0);

struct CbfConditionDiagnostic {
    double worst_margin = 0.0;  // min over sampled safe states
    Vector worst_state;
    std::size_t samples = 0;    // states with h >= 0 that were checked
};

/// Pointwise check of the observer-based CBF condition on a uniform grid of
/// the state box:
///   max_{u in U} (L_f h + L_g h u) - r_lo^{-1} p_hi K_h K_q^2 M(0) + alpha h >= 0
/// Only states with h >= 0 are considered. Diagnostic only.
[[nodiscard]] CbfConditionDiagnostic cbf_condition_margin(const SafetySpec& spec, const SystemModel& model,
                                                          const AdmissibleSets& sets, double r_lo, double p_hi,
                                                          double K_h, double K_q, double m0, int points_per_axis);

}  // namespace confsafe
