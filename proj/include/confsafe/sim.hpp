#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "confsafe/controller.hpp"
#include "confsafe/observer.hpp"
#include "confsafe/safety.hpp"
#include "confsafe/systems.hpp"

namespace confsafe {

enum class Example { second_order, unicycle };
enum class Problem { p1, p2 };

[[nodiscard]] std::string to_string(Example example);
[[nodiscard]] std::string to_string(Problem problem);
[[nodiscard]] Example parse_example(const std::string& text);
[[nodiscard]] Problem parse_problem(const std::string& text);

/// Instantaneous jump x[coordinate] += U(min, max), applied once at the first
/// integration boundary at or after `time`.
struct DisturbanceSpec {
    bool enabled = false;
    double time = 1.0;
    int coordinate = 2;
    double min = -0.5;
    double max = 0.5;
};

struct EpisodeConfig {
    Example example = Example::second_order;
    Problem problem = Problem::p1;
    Vector x0;
    Vector xhat0;
    double t_final = 10.0;
    double dt_int = 1e-3;
    ObserverConfig observer;
    SolverWeights weights;  // weights.dt_ctrl is the control period
    double gamma = 1.0;
    double alpha = 1.0;
    UnicycleGains gains;
    CircularObstacle obstacle;
    AdmissibleSets sets;
    DisturbanceSpec disturbance;
    std::uint64_t seed = 0;
    double stop_radius = 0.05;  // unicycle early stop: distance to goal
    double stop_speed = 0.1;    // ... and |v| below this
    std::optional<TheoryConstants> theory;
    CuttingPlaneOptions solver;

    [[nodiscard]] double dt_ctrl() const { return weights.dt_ctrl; }
    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// The plant and the CLF/CBF pair an example runs with.
struct Scenario {
    SystemModel model;
    std::optional<StabilitySpec> clf;
    SafetySpec cbf;
};

[[nodiscard]] Scenario make_scenario(const EpisodeConfig& config);

struct EpisodeRow {
    double t = 0.0;
    Vector x;
    Vector xhat;
    Vector u;
    double delta = 0.0;
    Vector eig_p;  // ascending
    double h_true = 0.0;
    double h_hat = 0.0;
    double v_true = 0.0;  // NaN when the program has no CLF
    double metric_value = 0.0;
    SolverStatus solver_status = SolverStatus::optimal;
    int solver_iters = 0;
};

enum class Termination { completed, goal_reached, infeasible_cbf, observer_failure, numerical_failure };

[[nodiscard]] std::string to_string(Termination termination);

struct EpisodeLog {
    Eigen::Index n_x = 0;
    Eigen::Index n_u = 0;
    std::vector<EpisodeRow> rows;
    PBoundsMonitor monitor;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::optional<double> disturbance_sample;
    Termination termination = Termination::completed;
    std::string message;
    int near_degenerate_solves = 0;
    int non_optimal_solves = 0;
};

/// Closed-loop run with zero-order hold. At each control instant
/// S = P^{-1} is formed and P1 or P2 is solved; between instants the plant,
/// the estimate and P are integrated jointly by RK4 at dt_int with
/// z = q(x) at every stage. Episode-terminating failures (infeasible CBF row,
/// P losing definiteness, non-finite derivatives) end the run and return the
/// partial log with the termination reason set.
[[nodiscard]] EpisodeLog run_episode(const EpisodeConfig& config);

/// Draws the disturbance magnitude from U(min, max) using the low 53 bits of
/// one mt19937_64 output, which is identical across standard libraries.
[[nodiscard]] double sample_disturbance(const DisturbanceSpec& spec, std::mt19937_64& rng);

[[nodiscard]] Vector inject_disturbance(const Vector& x, const DisturbanceSpec& spec, double sample);
[[nodiscard]] Vector inject_disturbance(const Vector& x, const DisturbanceSpec& spec, std::mt19937_64& rng);

struct MetricsOptions {
    double error_fraction = 0.1;  // settling threshold relative to the initial error
    std::optional<Eigen::Vector2d> goal;
    double goal_tolerance = 0.2;
};

struct EpisodeSummary {
    Termination termination = Termination::completed;
    double final_time = 0.0;
    double min_h_true = 0.0;
    double max_u_inf = 0.0;
    Vector max_abs_u;  // per control coordinate
    double final_error_norm = 0.0;
    double final_lambda_max = 0.0;
    double final_lambda_min = 0.0;
    double final_state_norm = 0.0;
    double initial_state_norm = 0.0;
    double error_settling_time = 0.0;  // |x - xhat| stays below error_fraction * |x0 - xhat0|
    Vector coordinate_settling_time;   // same, per coordinate
    double p_lo = 0.0;
    double p_hi = 0.0;
    std::optional<double> final_goal_distance;
    bool goal_reached = false;

    std::vector<double> time;
    std::vector<double> lambda_max;
    std::vector<double> lambda_min;
    Matrix estimation_error;  // rows x n_x, x - xhat
};

[[nodiscard]] EpisodeSummary compute_metrics(const EpisodeLog& log, const MetricsOptions& options = {});

/// Earliest time after which |series| stays at or below threshold
/// (0 if it always does, +inf if the final value is above).
[[nodiscard]] double settling_time(const std::vector<double>& t, const std::vector<double>& series, double threshold);

}  // namespace confsafe
