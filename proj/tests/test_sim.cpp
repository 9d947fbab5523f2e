#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "confsafe/config.hpp"
#include "confsafe/episode_io.hpp"
#include "confsafe/sim.hpp"
#include "support.hpp"

using namespace confsafe;

namespace {

std::string csv_of(const EpisodeLog& log) {
    std::ostringstream out;
    write_trajectory_csv(out, log);
    return out.str();
}

EpisodeConfig second_order(double c1, double t_final) {
    auto c = default_config(Example::second_order);
    c.weights.c1 = c1;
    c.t_final = t_final;
    return c;
}

EpisodeConfig unicycle(double c1, std::uint64_t seed, double t_final) {
    auto c = default_config(Example::unicycle);
    c.weights.c1 = c1;
    c.seed = seed;
    c.t_final = t_final;
    return c;
}

}  // namespace

TEST_CASE("reruns are byte-identical") {
    const auto a = second_order(1000.0, 2.0);
    CHECK(csv_of(run_episode(a)) == csv_of(run_episode(a)));
    const auto b = unicycle(1000.0, 7, 3.0);
    const auto first = run_episode(b);
    CHECK(csv_of(first) == csv_of(run_episode(b)));
    REQUIRE(first.disturbance_sample.has_value());
    auto other = b;
    other.seed = 8;
    CHECK(run_episode(other).disturbance_sample != first.disturbance_sample);
}

TEST_CASE("row count and time grid") {
    const auto log = run_episode(second_order(0.0, 1.0));
    CHECK(log.termination == Termination::completed);
    REQUIRE(log.rows.size() == 1001);
    for (std::size_t i = 1; i < log.rows.size(); ++i)
        CHECK(log.rows[i].t > log.rows[i - 1].t);
    CHECK(log.rows.back().t == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("control is held between control instants") {
    auto c = unicycle(1000.0, 3, 2.0);
    const auto log = run_episode(c);
    const long long every = std::llround(c.dt_ctrl() / c.dt_int);
    REQUIRE(every == 10);
    int changes_inside = 0;
    for (std::size_t i = 1; i < log.rows.size(); ++i)
        if (i % static_cast<std::size_t>(every) != 0 && log.rows[i].u != log.rows[i - 1].u)
            ++changes_inside;
    CHECK(changes_inside == 0);
}

TEST_CASE("perfectly initialized observer never drifts") {
    for (const auto example : {Example::second_order, Example::unicycle}) {
        auto c = default_config(example);
        c.xhat0 = c.x0;
        c.disturbance.enabled = false;
        c.t_final = 5.0;
        c.weights.c1 = 1000.0;
        const auto log = run_episode(c);
        double worst = 0.0;
        for (const auto& row : log.rows)
            worst = std::max(worst, (row.x - row.xhat).norm());
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("halving the integration step barely moves the final state") {
    auto check = [](EpisodeConfig c) {
        const auto coarse = run_episode(c);
        c.dt_int /= 2.0;
        const auto fine = run_episode(c);
        REQUIRE(coarse.termination == fine.termination);
        const double diff = (coarse.rows.back().x - fine.rows.back().x).norm();
        MESSAGE("final state difference " << diff);
        CHECK(diff <= 1e-5);
    };
    check(second_order(0.0, 10.0));
    check(second_order(1000.0, 10.0));
    check(unicycle(0.0, 1, 15.0));
    check(unicycle(1000.0, 1, 15.0));
}

TEST_CASE("disturbance") {
    SUBCASE("degenerate range") {
        const DisturbanceSpec spec{true, 1.0, 2, 0.0, 0.0};
        std::mt19937_64 rng(1);
        const Vector x{{1.0, 2.0, 0.1}};
        CHECK(inject_disturbance(x, spec, rng) == x);
    }
    SUBCASE("additive jump") {
        const DisturbanceSpec spec{true, 1.0, 2, -0.5, 0.5};
        const Vector out = inject_disturbance(Vector{{1.0, 2.0, 0.1}}, spec, 0.3);
        CHECK(out(2) == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(out(0) == 1.0);
    }
    SUBCASE("seeded samples repeat and stay in range") {
        const DisturbanceSpec spec{true, 1.0, 2, -0.5, 0.5};
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            std::mt19937_64 a(seed);
            std::mt19937_64 b(seed);
            const double s = sample_disturbance(spec, a);
            CHECK(s == sample_disturbance(spec, b));
            CHECK(s >= -0.5);
            CHECK(s < 0.5);
        }
        std::mt19937_64 rng(42);
        const std::uint64_t raw = std::mt19937_64(42)();
        CHECK(sample_disturbance(spec, rng) == -0.5 + static_cast<double>(raw >> 11) * 0x1.0p-53);
    }
    SUBCASE("jump lands on the first step at or after the disturbance time") {
        auto with = unicycle(0.0, 5, 1.5);
        auto without = with;
        without.disturbance.enabled = false;
        const auto a = run_episode(with);
        const auto b = run_episode(without);
        REQUIRE(a.disturbance_sample.has_value());
        for (std::size_t i = 0; i < 1000; ++i)
            REQUIRE(a.rows[i].x == b.rows[i].x);
        CHECK(a.rows[1000].t == doctest::Approx(1.0));
        CHECK(a.rows[1000].x(2) - b.rows[1000].x(2) == doctest::Approx(*a.disturbance_sample).epsilon(1e-12));
        CHECK(a.rows[1000].xhat == b.rows[1000].xhat);
    }
}

TEST_CASE("episode-terminating failures return a partial log") {
    SUBCASE("infeasible barrier row") {
        auto c = second_order(0.0, 1.0);
        c.x0 = Vector{{-3.0, 0.0}};
        c.xhat0 = c.x0;
        c.sets.control_box = Box{Vector{{-0.01}}, Vector{{0.01}}};
        const auto log = run_episode(c);
        CHECK(log.termination == Termination::infeasible_cbf);
        CHECK(log.rows.size() == 1);
        CHECK_FALSE(log.message.empty());
    }
    SUBCASE("observer losing definiteness") {
        auto c = second_order(0.0, 1.0);
        c.dt_int = 0.05;
        c.weights.dt_ctrl = 0.05;
        c.observer.R = SymmetricMatrix(Matrix::Constant(1, 1, 1e-4));
        c.observer.Q = SymmetricMatrix(1e-6 * Matrix::Identity(2, 2));
        const auto log = run_episode(c);
        CHECK(log.termination == Termination::observer_failure);
        CHECK(log.rows.size() >= 1);
        CHECK(log.rows.size() < 21);
    }
}

TEST_CASE("config validation") {
    auto c = second_order(0.0, 1.0);
    c.weights.dt_ctrl = 0.0125;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = second_order(0.0, 0.0);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = second_order(0.0, 1.0);
    c.x0 = Vector{{9.0, 0.0}};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = second_order(0.0, 1.0);
    c.disturbance.enabled = true;
    c.disturbance.time = 2.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("settling time") {
    const std::vector<double> t{0, 1, 2, 3, 4};
    CHECK(settling_time(t, {5, 3, 0.5, 0.2, 0.1}, 1.0) == 2.0);
    CHECK(settling_time(t, {5, 0.5, 3, 0.2, 0.1}, 1.0) == 3.0);
    CHECK(settling_time(t, {0.5, 0.5, 0.5, 0.2, 0.1}, 1.0) == 0.0);
    CHECK(std::isinf(settling_time(t, {5, 0.5, 0.5, 0.2, 2.0}, 1.0)));
    CHECK(settling_time(t, {-5, -0.5, 0.5, 0.2, 0.1}, 1.0) == 1.0);
}

TEST_CASE("metrics agree with the raw log") {
    const auto log = run_episode(unicycle(1000.0, 2, 15.0));
    MetricsOptions opts;
    opts.goal = Eigen::Vector2d(6.0, 6.0);
    const auto m = compute_metrics(log, opts);
    double min_h = std::numeric_limits<double>::infinity();
    double max_u = 0.0;
    for (const auto& row : log.rows) {
        min_h = std::min(min_h, row.h_true);
        max_u = std::max(max_u, row.u.cwiseAbs().maxCoeff());
    }
    CHECK(m.min_h_true == min_h);
    CHECK(m.max_u_inf == max_u);
    CHECK(m.final_lambda_max == log.rows.back().eig_p(2));
    CHECK(m.final_lambda_min == log.rows.back().eig_p(0));
    CHECK(m.p_lo == log.monitor.p_lo);
    CHECK(m.time.size() == log.rows.size());
    CHECK(m.estimation_error.rows() == static_cast<Eigen::Index>(log.rows.size()));
    const auto& last = log.rows.back();
    REQUIRE(m.final_goal_distance.has_value());
    CHECK(*m.final_goal_distance == doctest::Approx(std::hypot(last.x(0) - 6.0, last.x(1) - 6.0)));
    CHECK(m.goal_reached == (*m.final_goal_distance <= 0.2));
    if (min_h >= 0.0)
        CHECK(m.min_h_true >= 0.0);
}

TEST_CASE("barrier stays nonnegative when every solve succeeds from a certified start") {
    std::mt19937_64 rng(99);
    const TheoryConstants consts{1.0, 1.0, 1.0, std::sqrt(1.25)};
    int certified = 0;
    for (int trial = 0; trial < 30; ++trial) {
        auto c = second_order(trial % 2 == 0 ? 0.0 : 1000.0, 4.0);
        c.x0 = confsafe::testing::random_vector(rng, 2, -2.5, 2.5);
        c.xhat0 = c.x0 + confsafe::testing::random_vector(rng, 2, -0.2, 0.2);
        const auto scenario = make_scenario(c);
        if (!validate_initial_conditions(consts, scenario.cbf, c.x0, c.xhat0).passed())
            continue;
        const auto log = run_episode(c);
        if (log.termination != Termination::completed || log.non_optimal_solves > 0)
            continue;
        ++certified;
        CHECK(compute_metrics(log).min_h_true >= -1e-6);
    }
    MESSAGE(certified << " certified episodes");
    CHECK(certified >= 5);
}
