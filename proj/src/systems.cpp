#include "confsafe/systems.hpp"

#include <cmath>
#include <numbers>

namespace confsafe {

bool Box::contains(const Vector& x, double tol) const {
    if (x.size() != lo.size())
        return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) < lo(i) - tol || x(i) > hi(i) + tol)
            return false;
    return true;
}

void Box::validate(const std::string& what) const {
    if (lo.size() != hi.size())
        throw std::invalid_argument(what + ": lo/hi dimension mismatch");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo(i)) || !std::isfinite(hi(i)))
            throw std::invalid_argument(what + ": bounds must be finite");
        if (!(lo(i) < hi(i)))
            throw std::invalid_argument(what + ": lo must be < hi in coordinate " + std::to_string(i));
    }
}

SystemModel second_order_system() {
    SystemModel m;
    m.name = "second-order";
    m.n_x = 2;
    m.n_u = 1;
    m.n_z = 1;
    m.drift = [](const Vector& x) {
        Vector f(2);
        f << -x(0) / 4.0 - x(1), x(0) * x(0) * x(0) - x(1) / 2.0;
        return f;
    };
    m.actuation = [](const Vector& x) {
        Matrix g(2, 1);
        g << 0.0, x(1) * x(1) + 1.0;
        return g;
    };
    m.output = [](const Vector& x) {
        Vector z(1);
        z << x(0);
        return z;
    };
    m.drift_jacobian = [](const Vector& x) {
        Matrix j(2, 2);
        j << -0.25, -1.0, 3.0 * x(0) * x(0), -0.5;
        return j;
    };
    m.actuation_jacobian = [](const Vector& x) {
        Matrix slice = Matrix::Zero(2, 2);
        slice(1, 1) = 2.0 * x(1);
        return std::vector<Matrix>{slice};
    };
    m.output_jacobian = [](const Vector&) {
        Matrix c(1, 2);
        c << 1.0, 0.0;
        return c;
    };
    return m;
}

SystemModel unicycle_system() {
    SystemModel m;
    m.name = "unicycle";
    m.n_x = 3;
    m.n_u = 2;
    m.n_z = 2;
    m.drift = [](const Vector&) { return Vector(Vector::Zero(3)); };
    m.actuation = [](const Vector& x) {
        Matrix g(3, 2);
        g << std::cos(x(2)), 0.0,
             std::sin(x(2)), 0.0,
             0.0, 1.0;
        return g;
    };
    m.output = [](const Vector& x) { return Vector(x.head(2)); };
    m.drift_jacobian = [](const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
    m.actuation_jacobian = [](const Vector& x) {
        Matrix v_slice = Matrix::Zero(3, 3);
        v_slice(0, 2) = -std::sin(x(2));
        v_slice(1, 2) = std::cos(x(2));
        return std::vector<Matrix>{v_slice, Matrix::Zero(3, 3)};
    };
    m.output_jacobian = [](const Vector&) {
        Matrix c = Matrix::Zero(2, 3);
        c(0, 0) = 1.0;
        c(1, 1) = 1.0;
        return c;
    };
    return m;
}

Matrix linearization_A(const SystemModel& model, const Vector& xhat, const Vector& u) {
    Matrix a = model.drift_jacobian(xhat);
    const auto slices = model.actuation_jacobian(xhat);
    for (Eigen::Index k = 0; k < u.size(); ++k)
        if (u(k) != 0.0)
            a += u(k) * slices[static_cast<size_t>(k)];
    return a;
}

void UnicycleGains::validate() const {
    if (!(d1 > 0.0 && d2 > 0.0 && d3 > 0.0))
        throw std::invalid_argument("unicycle gains d1, d2, d3 must be positive");
}

double wrap_to_pi(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(angle, two_pi);  // [-pi, pi]
    if (w <= -std::numbers::pi)
        w += two_pi;
    return w;
}

Vector unicycle_nominal(const Vector& xhat, const UnicycleGains& gains) {
    const double dx = gains.goal_x - xhat(0);
    const double dy = gains.goal_y - xhat(1);
    const double e = std::hypot(dx, dy);
    Vector u = Vector::Zero(2);
    if (e == 0.0)
        return u;

    const double theta = xhat(2);
    const double phi = wrap_to_pi(std::atan2(dy, dx) - theta);
    u(0) = gains.d1 * e * std::cos(phi);
    if (std::abs(phi) < kHeadingSingularity) {
        u(1) = gains.d1 * gains.d3 * theta;
    } else {
        u(1) = gains.d2 * phi +
               gains.d1 * std::cos(phi) * std::sin(phi) * (phi + gains.d3 * (phi + theta)) / phi;
    }
    return u;
}

}  // namespace confsafe
