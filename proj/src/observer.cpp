#include "confsafe/observer.hpp"

#include <algorithm>

namespace confsafe {

void ObserverConfig::validate(const SystemModel& model) const {
    if (!(kappa >= 0.0))
        throw std::invalid_argument("observer: kappa must be >= 0");
    auto check = [](const SymmetricMatrix& m, Eigen::Index n, const char* name) {
        if (m.dim() != n)
            throw std::invalid_argument(std::string("observer: ") + name + " must be " + std::to_string(n) + "x" +
                                        std::to_string(n));
        if (!m.is_positive_definite())
            throw std::invalid_argument(std::string("observer: ") + name + " must be positive definite");
    };
    check(Q, model.n_x, "Q");
    check(R, model.n_z, "R");
    check(P0, model.n_x, "P0");
}

void PBoundsMonitor::update(double t, const SymmetricMatrix& p) {
    const auto eig = sym_eig(p);
    const double lo = eig.eigenvalues(0);
    const double hi = eig.eigenvalues(eig.eigenvalues.size() - 1);
    p_lo = std::min(p_lo, lo);
    p_hi = std::max(p_hi, hi);
    if (!(lo > 0.0))
        assumption_violated = true;
    history.push_back({t, lo, hi});
}

PBoundsMonitor monitor_update(PBoundsMonitor monitor, double t, const SymmetricMatrix& p) {
    monitor.update(t, p);
    return monitor;
}

Matrix observer_gain(const SymmetricMatrix& p, const Matrix& c, const SymmetricMatrix& r) {
    return p.matrix() * c.transpose() * spd_inverse(r).matrix();
}

SymmetricMatrix riccati_p_rhs(const SymmetricMatrix& p, const Matrix& a, const Matrix& c, const SymmetricMatrix& q,
                              const SymmetricMatrix& r, double kappa) {
    const Matrix& pm = p.matrix();
    const Matrix pct = pm * c.transpose();
    const Matrix ap = a * pm;
    return SymmetricMatrix(kappa * pm + ap + ap.transpose() - pct * spd_inverse(r).matrix() * pct.transpose() +
                           q.matrix());
}

SymmetricMatrix riccati_s_rhs(const SymmetricMatrix& s, const Matrix& a, const Matrix& c, const SymmetricMatrix& q,
                              const SymmetricMatrix& r, double kappa) {
    const Matrix& sm = s.matrix();
    const Matrix sa = sm * a;
    return SymmetricMatrix(-kappa * sm - sa.transpose() - sa + c.transpose() * spd_inverse(r).matrix() * c -
                           sm * q.matrix() * sm);
}

Vector observer_rhs(const SystemModel& model, const Vector& xhat, const Vector& u, const Vector& z, const Matrix& k) {
    return model.dynamics(xhat, u) + k * (z - model.output(xhat));
}

ObserverDerivative observer_derivative(const SystemModel& model, const ObserverConfig& cfg, const Vector& xhat,
                                       const SymmetricMatrix& p, const Vector& u, const Vector& z) {
    const Matrix a = linearization_A(model, xhat, u);
    const Matrix c = model.output_jacobian(xhat);
    const Matrix k = observer_gain(p, c, cfg.R);
    return {observer_rhs(model, xhat, u, z, k), riccati_p_rhs(p, a, c, cfg.Q, cfg.R, cfg.kappa)};
}

Vector pack_observer(const Vector& xhat, const SymmetricMatrix& p) {
    const Eigen::Index n = xhat.size();
    Vector flat(n + n * n);
    flat.head(n) = xhat;
    flat.tail(n * n) = p.matrix().reshaped();
    return flat;
}

void unpack_observer(const Vector& flat, Eigen::Index n_x, Vector& xhat, SymmetricMatrix& p) {
    xhat = flat.head(n_x);
    p = SymmetricMatrix(flat.segment(n_x, n_x * n_x).reshaped(n_x, n_x));
}

ObserverState observer_step(const SystemModel& model, const ObserverConfig& cfg, const ObserverState& state,
                            const Vector& u, const Vector& z, double dt) {
    const Eigen::Index n = model.n_x;
    auto rhs = [&](double, const Vector& y) {
        Vector xhat;
        SymmetricMatrix p;
        unpack_observer(y, n, xhat, p);
        const auto d = observer_derivative(model, cfg, xhat, p, u, z);
        return pack_observer(d.xhat_dot, d.p_dot);
    };
    const Vector next = rk4_step(rhs, state.t, pack_observer(state.xhat, state.P), dt);

    ObserverState out;
    unpack_observer(next, n, out.xhat, out.P);
    out.t = state.t + dt;
    require_positive_definite(out.P, kDefinitenessTolerance, "observer uncertainty P");
    return out;
}

SymmetricMatrix predict_confidence(const SymmetricMatrix& s, const Matrix& a, const Matrix& c,
                                   const SymmetricMatrix& q, const SymmetricMatrix& r, double kappa, double dt_ctrl) {
    return SymmetricMatrix(s.matrix() + dt_ctrl * riccati_s_rhs(s, a, c, q, r, kappa).matrix());
}

}  // namespace confsafe
