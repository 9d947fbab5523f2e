#pragma once

#include <limits>
#include <vector>

#include "confsafe/numerics.hpp"
#include "confsafe/systems.hpp"

namespace confsafe {

struct ObserverConfig {
    double kappa = 0.1;
    SymmetricMatrix Q;
    SymmetricMatrix R;
    SymmetricMatrix P0;

    // kappa >= 0; Q, R, P0 positive definite with dimensions matching model.
    void validate(const SystemModel& model) const;
};

/// Estimate and uncertainty P. The confidence is S = P^{-1}.
struct ObserverState {
    Vector xhat;
    SymmetricMatrix P;
    double t = 0.0;
};

/// Running bounds p_lo <= lambda(P(s)) <= p_hi for s <= t.
struct PBoundsMonitor {
    struct Row {
        double t;
        double lambda_min;
        double lambda_max;
    };

    double p_lo = std::numeric_limits<double>::infinity();
    double p_hi = -std::numeric_limits<double>::infinity();
    bool assumption_violated = false;
    std::vector<Row> history;

    void update(double t, const SymmetricMatrix& p);
};

[[nodiscard]] PBoundsMonitor monitor_update(PBoundsMonitor monitor, double t, const SymmetricMatrix& p);

/// K = P C^T R^{-1}
[[nodiscard]] Matrix observer_gain(const SymmetricMatrix& p, const Matrix& c, const SymmetricMatrix& r);

/// Pdot = kappa P + A P + P A^T - P C^T R^{-1} C P + Q
[[nodiscard]] SymmetricMatrix riccati_p_rhs(const SymmetricMatrix& p, const Matrix& a, const Matrix& c,
                                            const SymmetricMatrix& q, const SymmetricMatrix& r, double kappa);

/// Sdot = -kappa S - A^T S - S A + C^T R^{-1} C - S Q S
[[nodiscard]] SymmetricMatrix riccati_s_rhs(const SymmetricMatrix& s, const Matrix& a, const Matrix& c,
                                            const SymmetricMatrix& q, const SymmetricMatrix& r, double kappa);

/// xhat_dot = f(xhat) + g(xhat) u + K (z - q(xhat))
[[nodiscard]] Vector observer_rhs(const SystemModel& model, const Vector& xhat, const Vector& u, const Vector& z,
                                  const Matrix& k);

struct ObserverDerivative {
    Vector xhat_dot;
    SymmetricMatrix p_dot;
};

/// Joint derivative of (xhat, P) with A and C evaluated at xhat.
[[nodiscard]] ObserverDerivative observer_derivative(const SystemModel& model, const ObserverConfig& cfg,
                                                     const Vector& xhat, const SymmetricMatrix& p, const Vector& u,
                                                     const Vector& z);

// Flat layout used for RK4: [xhat (n), P column-major (n*n)].
[[nodiscard]] Vector pack_observer(const Vector& xhat, const SymmetricMatrix& p);
void unpack_observer(const Vector& flat, Eigen::Index n_x, Vector& xhat, SymmetricMatrix& p);

inline constexpr double kDefinitenessTolerance = 1e-12;

/// One RK4 step of (xhat, P) with the output z held over the step. A and C
/// are re-evaluated at every stage. Throws NotPositiveDefinite if the new P
/// fails the definiteness check.
[[nodiscard]] ObserverState observer_step(const SystemModel& model, const ObserverConfig& cfg,
                                          const ObserverState& state, const Vector& u, const Vector& z, double dt);

/// First-order prediction S + dt * Sdot(S, A, C). The result may be
/// indefinite for large dt; only its spectrum is used downstream.
[[nodiscard]] SymmetricMatrix predict_confidence(const SymmetricMatrix& s, const Matrix& a, const Matrix& c,
                                                 const SymmetricMatrix& q, const SymmetricMatrix& r, double kappa,
                                                 double dt_ctrl);

}  // namespace confsafe
