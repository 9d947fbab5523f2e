#include <cmath>
#include <random>

#include "doctest.h"

#include "confsafe/observer.hpp"
#include "confsafe/systems.hpp"
#include "support.hpp"

using namespace confsafe;
using confsafe::testing::random_matrix;
using confsafe::testing::random_spd;
using confsafe::testing::random_vector;

namespace {

// xdot = 0, z = x, scalar.
SystemModel static_scalar() {
    SystemModel m;
    m.name = "static";
    m.n_x = 1;
    m.n_u = 1;
    m.n_z = 1;
    m.drift = [](const Vector&) { return Vector(Vector::Zero(1)); };
    m.actuation = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    m.output = [](const Vector& x) { return x; };
    m.drift_jacobian = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    m.actuation_jacobian = [](const Vector&) { return std::vector<Matrix>{Matrix::Zero(1, 1)}; };
    m.output_jacobian = [](const Vector&) { return Matrix(Matrix::Identity(1, 1)); };
    return m;
}

Matrix row(std::initializer_list<double> v) {
    Matrix m(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        m(0, i++) = x;
    return m;
}

SymmetricMatrix scalar(double v) { return SymmetricMatrix(Matrix::Constant(1, 1, v)); }

}  // namespace

TEST_CASE("observer gain examples") {
    const Matrix c = row({1.0, 0.0});
    const Matrix k1 = observer_gain(SymmetricMatrix::identity(2), c, scalar(1.0));
    CHECK(k1(0, 0) == 1.0);
    CHECK(k1(1, 0) == 0.0);
    const Matrix k2 = observer_gain(SymmetricMatrix::diagonal(Vector{{2.0, 3.0}}), c, scalar(2.0));
    CHECK(std::abs(k2(0, 0) - 1.0) <= 1e-15);
    CHECK(k2(1, 0) == 0.0);
    CHECK(observer_gain(SymmetricMatrix::identity(2), row({0.0, 0.0}), scalar(1.0)).norm() == 0.0);
}

TEST_CASE("riccati P right-hand side examples") {
    const Matrix a0 = Matrix::Zero(2, 2);
    const auto i2 = SymmetricMatrix::identity(2);
    const auto zero2 = SymmetricMatrix(Matrix::Zero(2, 2));
    CHECK(riccati_p_rhs(i2, a0, row({0.0, 0.0}), i2, scalar(1.0), 0.0).matrix() == Matrix::Identity(2, 2));
    const auto info = riccati_p_rhs(i2, a0, row({1.0, 0.0}), zero2, scalar(1.0), 0.0);
    CHECK(info.matrix() == Matrix(Vector{{-1.0, 0.0}}.asDiagonal()));
    const auto growth =
        riccati_p_rhs(SymmetricMatrix::diagonal(Vector{{2.0, 3.0}}), a0, row({0.0, 0.0}), zero2, scalar(1.0), 1.0);
    CHECK(growth.matrix() == Matrix(Vector{{2.0, 3.0}}.asDiagonal()));
}

TEST_CASE("riccati S right-hand side examples") {
    const Matrix a0 = Matrix::Zero(2, 2);
    const auto i2 = SymmetricMatrix::identity(2);
    const auto zero2 = SymmetricMatrix(Matrix::Zero(2, 2));
    CHECK(riccati_s_rhs(i2, a0, row({0.0, 0.0}), i2, scalar(1.0), 0.0).matrix() == -Matrix::Identity(2, 2));
    const auto gain = riccati_s_rhs(zero2, a0, row({1.0, 0.0}), zero2, scalar(1.0), 0.0);
    CHECK(gain.matrix() == Matrix(Vector{{1.0, 0.0}}.asDiagonal()));
}

TEST_CASE("S rhs equals -S Pdot S for S = P^-1") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        const Eigen::Index m = 1 + trial % 2;
        const auto p = random_spd(rng, n, 0.1, 10.0);
        const auto s = spd_inverse(p);
        const Matrix a = random_matrix(rng, n, n, -2, 2);
        const Matrix c = random_matrix(rng, m, n, -2, 2);
        const auto q = random_spd(rng, n, 0.1, 5.0);
        const auto r = random_spd(rng, m, 0.1, 5.0);
        const double kappa = confsafe::testing::uniform(rng, 0.0, 1.0);
        const Matrix lhs = riccati_s_rhs(s, a, c, q, r, kappa).matrix();
        const Matrix rhs = -s.matrix() * riccati_p_rhs(p, a, c, q, r, kappa).matrix() * s.matrix();
        CHECK((lhs - rhs).norm() <= 1e-8 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("observer rhs examples") {
    const auto m = second_order_system();
    const Vector xhat{{0.3, -0.2}};
    const Vector u{{0.7}};
    std::mt19937_64 rng(1);
    const Matrix k = random_matrix(rng, 2, 1, -1, 1);
    CHECK((observer_rhs(m, xhat, u, m.output(xhat), k) - m.dynamics(xhat, u)).norm() == 0.0);

    Matrix k10(2, 1);
    k10 << 1.0, 0.0;
    const Vector d = observer_rhs(m, Vector{{0.0, 0.0}}, Vector{{0.0}}, Vector{{1.0}}, k10);
    CHECK(d(0) == 1.0);
    CHECK(d(1) == 0.0);
    CHECK(observer_rhs(m, Vector{{0.0, 0.0}}, Vector{{0.0}}, Vector{{0.0}}, k10).norm() == 0.0);
}

TEST_CASE("observer step") {
    const auto model = static_scalar();
    ObserverConfig cfg{0.0, scalar(1.0), scalar(1.0), scalar(1.0)};
    CHECK_NOTHROW(cfg.validate(model));

    SUBCASE("tiny step is nearly the identity") {
        const auto so = second_order_system();
        ObserverConfig c2{0.1, SymmetricMatrix::identity(2), scalar(0.1), SymmetricMatrix::identity(2)};
        const ObserverState s0{Vector{{0.5, -1.0}}, SymmetricMatrix::diagonal(Vector{{1.0, 2.0}}), 0.0};
        const auto s1 = observer_step(so, c2, s0, Vector{{0.2}}, Vector{{0.7}}, 1e-8);
        CHECK((s1.xhat - s0.xhat).norm() <= 1e-6);
        CHECK((s1.P.matrix() - s0.P.matrix()).norm() <= 1e-6);
        CHECK(s1.t == doctest::Approx(1e-8));
    }
    SUBCASE("zero innovation with no dynamics leaves the estimate alone") {
        const ObserverState s0{Vector{{0.4}}, scalar(2.0), 0.0};
        const auto s1 = observer_step(model, cfg, s0, Vector{{3.0}}, Vector{{0.4}}, 0.01);
        CHECK(s1.xhat(0) == 0.4);
    }
    SUBCASE("scalar Riccati p' = 1 - p^2 against closed form") {
        for (const double p0 : {1.0, 0.5, 3.0}) {
            ObserverState s{Vector{{0.0}}, scalar(p0), 0.0};
            for (int i = 0; i < 1000; ++i)
                s = observer_step(model, cfg, s, Vector{{0.0}}, Vector{{0.0}}, 1e-3);
            // tanh(t + atanh p0) for p0 < 1, coth(t + acoth p0) for p0 > 1
            double expected = 1.0;
            if (p0 < 1.0)
                expected = std::tanh(1.0 + std::atanh(p0));
            else if (p0 > 1.0)
                expected = 1.0 / std::tanh(1.0 + std::atanh(1.0 / p0));
            CHECK(std::abs(s.P(0, 0) - expected) <= 1e-6);
        }
    }
    SUBCASE("loss of definiteness throws") {
        ObserverConfig stiff{0.0, scalar(1e-6), scalar(1e-4), scalar(1.0)};
        const ObserverState s0{Vector{{0.0}}, scalar(1.0), 0.0};
        CHECK_THROWS_AS((void)observer_step(model, stiff, s0, Vector{{0.0}}, Vector{{0.0}}, 0.1), NotPositiveDefinite);
    }
}

TEST_CASE("P and S propagation stay mutually inverse over 5 s") {
    const auto m = second_order_system();
    const ObserverConfig cfg{0.1, SymmetricMatrix::identity(2), scalar(1.0), SymmetricMatrix::identity(2)};
    const Vector u{{0.0}};
    // y = [x (2), xhat (2), P (4), S (4)]
    auto rhs = [&](double, const Vector& y) {
        const Vector x = y.segment(0, 2);
        Vector xhat;
        SymmetricMatrix p;
        unpack_observer(y.segment(2, 6), 2, xhat, p);
        const SymmetricMatrix s(Eigen::Map<const Matrix>(y.data() + 8, 2, 2));
        const auto d = observer_derivative(m, cfg, xhat, p, u, m.output(x));
        const Matrix a = linearization_A(m, xhat, u);
        const Matrix c = m.output_jacobian(xhat);
        const auto sdot = riccati_s_rhs(s, a, c, cfg.Q, cfg.R, cfg.kappa);
        Vector out(12);
        out << m.dynamics(x, u), pack_observer(d.xhat_dot, d.p_dot), Eigen::Map<const Vector>(sdot.matrix().data(), 4);
        return out;
    };
    Vector y(12);
    y << -2.0, 0.5, pack_observer(Vector{{-2.0, 1.0}}, cfg.P0), Eigen::Map<const Vector>(cfg.P0.matrix().data(), 4);
    double worst = 0.0;
    double t = 0.0;
    for (int i = 0; i < 5000; ++i) {
        y = rk4_step(rhs, t, y, 1e-3);
        t += 1e-3;
        Vector xhat;
        SymmetricMatrix p;
        unpack_observer(y.segment(2, 6), 2, xhat, p);
        const Matrix s = Eigen::Map<const Matrix>(y.data() + 8, 2, 2);
        worst = std::max(worst, (s - spd_inverse(p).matrix()).norm());
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("predict_confidence") {
    const auto zero2 = SymmetricMatrix(Matrix::Zero(2, 2));
    const Matrix a0 = Matrix::Zero(2, 2);
    const auto i2 = SymmetricMatrix::identity(2);
    CHECK(predict_confidence(i2, a0, row({1.0, 0.0}), zero2, scalar(1.0), 0.0, 0.1).matrix() ==
          Matrix(Vector{{1.1, 1.0}}.asDiagonal()));

    std::mt19937_64 rng(4);
    const auto s = random_spd(rng, 2, 0.5, 2.0);
    const Matrix a = random_matrix(rng, 2, 2, -1, 1);
    const Matrix c = row({1.0, 0.0});
    const auto q = SymmetricMatrix::identity(2);
    CHECK(predict_confidence(s, a, c, q, scalar(0.1), 0.1, 0.0).matrix() == s.matrix());
    const SymmetricMatrix expected(s.matrix() + 0.05 * riccati_s_rhs(s, a, c, q, scalar(0.1), 0.1).matrix());
    CHECK(predict_confidence(s, a, c, q, scalar(0.1), 0.1, 0.05).matrix() == expected.matrix());
}

TEST_CASE("predicted confidence is affine in u") {
    std::mt19937_64 rng(9);
    const auto uni = unicycle_system();
    const auto so = second_order_system();
    for (const SystemModel* m : {&so, &uni}) {
        for (int trial = 0; trial < 50; ++trial) {
            const Vector xhat = random_vector(rng, m->n_x, -2, 2);
            const auto s = random_spd(rng, m->n_x, 0.2, 5.0);
            const auto q = SymmetricMatrix::identity(m->n_x);
            const auto r = SymmetricMatrix(0.1 * Matrix::Identity(m->n_z, m->n_z));
            const Matrix c = m->output_jacobian(xhat);
            const auto pred = [&](const Vector& u) {
                return predict_confidence(s, linearization_A(*m, xhat, u), c, q, r, 0.1, 0.01).matrix();
            };
            const Vector u1 = random_vector(rng, m->n_u, -3, 3);
            const Vector u2 = random_vector(rng, m->n_u, -3, 3);
            const Matrix lhs = pred(u1) + pred(u2) - pred(Vector::Zero(m->n_u));
            CHECK((lhs - pred(u1 + u2)).norm() <= 1e-12 * std::max(1.0, s.matrix().norm()));
        }
    }
}

TEST_CASE("P bounds monitor") {
    PBoundsMonitor mon;
    mon.update(0.0, SymmetricMatrix::diagonal(Vector{{1.0, 2.0}}));
    CHECK(mon.p_lo == 1.0);
    CHECK(mon.p_hi == 2.0);
    mon = monitor_update(mon, 0.1, SymmetricMatrix::diagonal(Vector{{0.5, 3.0}}));
    CHECK(mon.p_lo == 0.5);
    CHECK(mon.p_hi == 3.0);
    CHECK_FALSE(mon.assumption_violated);
    CHECK(mon.history.size() == 2);
    mon.update(0.2, SymmetricMatrix::diagonal(Vector{{-1e-3, 3.0}}));
    CHECK(mon.assumption_violated);
}

TEST_CASE("observer config validation") {
    const auto m = second_order_system();
    ObserverConfig bad{0.1, SymmetricMatrix::identity(2), scalar(0.1), SymmetricMatrix::identity(3)};
    CHECK_THROWS_AS(bad.validate(m), std::invalid_argument);
    ObserverConfig neg{-0.1, SymmetricMatrix::identity(2), scalar(0.1), SymmetricMatrix::identity(2)};
    CHECK_THROWS_AS(neg.validate(m), std::invalid_argument);
    ObserverConfig indefinite{0.1, SymmetricMatrix::identity(2), scalar(-1.0), SymmetricMatrix::identity(2)};
    CHECK_THROWS_AS(indefinite.validate(m), std::invalid_argument);
}
