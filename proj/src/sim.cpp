#include "confsafe/sim.hpp"

#include <cmath>
#include <limits>

#include "confsafe/config.hpp"

namespace confsafe {

std::string to_string(Example example) {
    return example == Example::second_order ? "second-order" : "unicycle";
}

std::string to_string(Problem problem) { return problem == Problem::p1 ? "P1" : "P2"; }

Example parse_example(const std::string& text) {
    if (text == "second-order" || text == "second_order")
        return Example::second_order;
    if (text == "unicycle")
        return Example::unicycle;
    throw std::invalid_argument("unknown example '" + text + "' (expected second-order or unicycle)");
}

Problem parse_problem(const std::string& text) {
    if (text == "P1" || text == "p1")
        return Problem::p1;
    if (text == "P2" || text == "p2")
        return Problem::p2;
    throw std::invalid_argument("unknown problem '" + text + "' (expected P1 or P2)");
}

std::string to_string(Termination termination) {
    switch (termination) {
    case Termination::completed: return "completed";
    case Termination::goal_reached: return "goal_reached";
    case Termination::infeasible_cbf: return "infeasible_cbf";
    case Termination::observer_failure: return "observer_failure";
    case Termination::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

namespace {

Eigen::Index state_dim(Example e) { return e == Example::second_order ? 2 : 3; }
Eigen::Index control_dim(Example e) { return e == Example::second_order ? 1 : 2; }

bool is_integer_multiple(double big, double small) {
    const double ratio = big / small;
    return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio) && std::round(ratio) >= 1.0;
}

}  // namespace

void EpisodeConfig::validate() const {
    const Eigen::Index n = state_dim(example);
    const Eigen::Index m = control_dim(example);
    if (x0.size() != n)
        throw std::invalid_argument("x0 must have " + std::to_string(n) + " entries");
    if (xhat0.size() != n)
        throw std::invalid_argument("xhat0 must have " + std::to_string(n) + " entries");
    if (!x0.allFinite() || !xhat0.allFinite())
        throw std::invalid_argument("x0/xhat0 must be finite");
    if (!(t_final > 0.0))
        throw std::invalid_argument("t_final must be > 0");
    if (!(dt_int > 0.0))
        throw std::invalid_argument("dt_int must be > 0");
    weights.validate();
    if (!is_integer_multiple(weights.dt_ctrl, dt_int))
        throw std::invalid_argument("dt_ctrl must be an integer multiple of dt_int");
    if (!is_integer_multiple(t_final, dt_int))
        throw std::invalid_argument("t_final must be an integer multiple of dt_int");
    if (!(gamma > 0.0))
        throw std::invalid_argument("gamma must be > 0");
    if (!(alpha > 0.0))
        throw std::invalid_argument("alpha must be > 0");
    if (example == Example::unicycle)
        gains.validate();
    if (!(obstacle.radius > 0.0))
        throw std::invalid_argument("obstacle_r must be > 0");

    sets.control_box.validate("control box");
    sets.state_box.validate("state box");
    if (sets.control_box.dim() != m)
        throw std::invalid_argument("control box must have " + std::to_string(m) + " coordinates");
    if (sets.state_box.dim() != n)
        throw std::invalid_argument("state box must have " + std::to_string(n) + " coordinates");
    if (!sets.state_box.contains(x0))
        throw std::invalid_argument("x0 lies outside the state box");

    if (disturbance.enabled) {
        if (disturbance.coordinate < 0 || disturbance.coordinate >= n)
            throw std::invalid_argument("disturbance coordinate out of range");
        if (disturbance.time < 0.0 || disturbance.time > t_final)
            throw std::invalid_argument("disturbance time must lie in [0, t_final]");
        if (!(disturbance.min <= disturbance.max))
            throw std::invalid_argument("disturbance range must satisfy min <= max");
    }
    if (theory)
        theory->validate();
    if (solver.max_cuts < 1)
        throw std::invalid_argument("max_cuts must be >= 1");
    if (!(solver.gap_tol > 0.0))
        throw std::invalid_argument("gap_tol must be > 0");

    ObserverConfig obs = observer;
    obs.validate(make_scenario(*this).model);
}

Scenario make_scenario(const EpisodeConfig& config) {
    if (config.example == Example::second_order) {
        Scenario s{second_order_system(), std::nullopt, second_order_cbf(config.alpha)};
        if (config.problem == Problem::p1)
            s.clf = second_order_clf(config.gamma);
        return s;
    }
    Scenario s{unicycle_system(), std::nullopt, obstacle_cbf(config.obstacle, config.alpha)};
    if (config.problem == Problem::p1)
        s.clf = goal_distance_clf(config.gains.goal_x, config.gains.goal_y, config.gamma);
    return s;
}

double sample_disturbance(const DisturbanceSpec& spec, std::mt19937_64& rng) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    return spec.min + (spec.max - spec.min) * unit;
}

Vector inject_disturbance(const Vector& x, const DisturbanceSpec& spec, double sample) {
    Vector out = x;
    out(spec.coordinate) += sample;
    return out;
}

Vector inject_disturbance(const Vector& x, const DisturbanceSpec& spec, std::mt19937_64& rng) {
    return inject_disturbance(x, spec, sample_disturbance(spec, rng));
}

EpisodeLog run_episode(const EpisodeConfig& config) {
    config.validate();
    const Scenario scenario = make_scenario(config);
    const SystemModel& model = scenario.model;
    const Eigen::Index n = model.n_x;

    EpisodeLog log;
    log.n_x = n;
    log.n_u = model.n_u;
    log.seed = config.seed;
    log.config_hash = config_hash(config);

    std::mt19937_64 rng(config.seed);
    double sample = 0.0;
    if (config.disturbance.enabled) {
        sample = sample_disturbance(config.disturbance, rng);
        log.disturbance_sample = sample;
    }
    bool disturbed = false;

    const long long n_steps = std::llround(config.t_final / config.dt_int);
    const long long ctrl_every = std::llround(config.dt_ctrl() / config.dt_int);
    log.rows.reserve(static_cast<size_t>(n_steps + 1));

    Vector x = config.x0;
    Vector xhat = config.xhat0;
    SymmetricMatrix p = config.observer.P0;
    Vector u = Vector::Zero(model.n_u);
    double delta = 0.0;
    double metric_value = std::numeric_limits<double>::quiet_NaN();
    SolverStatus status = SolverStatus::optimal;
    int iters = 0;

    auto log_row = [&](double t) {
        EpisodeRow row;
        row.t = t;
        row.x = x;
        row.xhat = xhat;
        row.u = u;
        row.delta = delta;
        row.eig_p = sym_eig(p).eigenvalues;
        row.h_true = scenario.cbf.h(x);
        row.h_hat = scenario.cbf.h(xhat);
        row.v_true = scenario.clf ? scenario.clf->V(x) : std::numeric_limits<double>::quiet_NaN();
        row.metric_value = metric_value;
        row.solver_status = status;
        row.solver_iters = iters;
        log.rows.push_back(std::move(row));
        log.monitor.update(t, p);
    };

    // Joint state [x, xhat, P] so that z = q(x) is exact at every RK4 stage.
    auto rhs = [&](double, const Vector& y) {
        const Vector xs = y.head(n);
        Vector xh;
        SymmetricMatrix ps;
        unpack_observer(y.tail(n + n * n), n, xh, ps);
        const auto d = observer_derivative(model, config.observer, xh, ps, u, model.output(xs));
        Vector dy(y.size());
        dy.head(n) = model.dynamics(xs, u);
        dy.tail(n + n * n) = pack_observer(d.xhat_dot, d.p_dot);
        return dy;
    };

    for (long long k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * config.dt_int;

        if (config.disturbance.enabled && !disturbed && t >= config.disturbance.time - 1e-9 * config.dt_int) {
            x = inject_disturbance(x, config.disturbance, sample);
            disturbed = true;
        }

        if (k % ctrl_every == 0) {
            try {
                const SymmetricMatrix s = spd_inverse(p);
                const Vector z = model.output(x);
                SolverResult res;
                if (config.problem == Problem::p1) {
                    res = solve_p1(model, *scenario.clf, scenario.cbf, xhat, z, s, config.observer, config.weights,
                                   config.sets.control_box, config.solver);
                } else {
                    const Vector nominal = config.example == Example::unicycle
                                               ? unicycle_nominal(xhat, config.gains)
                                               : Vector(Vector::Zero(model.n_u));
                    res = solve_p2(model, scenario.cbf, nominal, xhat, z, s, config.observer, config.weights,
                                   config.sets.control_box, config.solver);
                }
                u = res.u;
                delta = res.delta;
                metric_value = res.metric_value;
                status = res.status;
                iters = res.iterations;
                if (res.near_degenerate)
                    ++log.near_degenerate_solves;
                if (res.status != SolverStatus::optimal)
                    ++log.non_optimal_solves;
            } catch (const NotPositiveDefinite& e) {
                log.termination = Termination::observer_failure;
                log.message = e.what();
                log_row(t);
                return log;
            }
            if (status == SolverStatus::infeasible_cbf) {
                log.termination = Termination::infeasible_cbf;
                log.message = "CBF constraint infeasible within the control box at t = " + std::to_string(t);
                log_row(t);
                return log;
            }
            if (config.example == Example::unicycle) {
                const double dist = std::hypot(x(0) - config.gains.goal_x, x(1) - config.gains.goal_y);
                if (dist <= config.stop_radius && std::abs(u(0)) <= config.stop_speed) {
                    log_row(t);
                    log.termination = Termination::goal_reached;
                    return log;
                }
            }
        }

        log_row(t);
        if (k == n_steps)
            break;

        Vector y(n + n + n * n);
        y.head(n) = x;
        y.tail(n + n * n) = pack_observer(xhat, p);
        try {
            y = rk4_step(rhs, t, y, config.dt_int);
            x = y.head(n);
            unpack_observer(y.tail(n + n * n), n, xhat, p);
            require_positive_definite(p, kDefinitenessTolerance, "observer uncertainty P");
        } catch (const NotPositiveDefinite& e) {
            log.termination = Termination::observer_failure;
            log.message = e.what();
            return log;
        } catch (const NumericalError& e) {
            log.termination = Termination::numerical_failure;
            log.message = e.what();
            return log;
        }
    }
    return log;
}

double settling_time(const std::vector<double>& t, const std::vector<double>& series, double threshold) {
    for (size_t i = series.size(); i-- > 0;)
        if (std::abs(series[i]) > threshold)
            return i + 1 < t.size() ? t[i + 1] : std::numeric_limits<double>::infinity();
    return t.empty() ? 0.0 : t.front();
}

EpisodeSummary compute_metrics(const EpisodeLog& log, const MetricsOptions& options) {
    if (log.rows.empty())
        throw std::invalid_argument("compute_metrics: empty log");
    EpisodeSummary s;
    const auto& first = log.rows.front();
    const auto& last = log.rows.back();
    const Eigen::Index n = first.x.size();
    const Eigen::Index m = first.u.size();

    s.termination = log.termination;
    s.final_time = last.t;
    s.min_h_true = std::numeric_limits<double>::infinity();
    s.max_abs_u = Vector::Zero(m);
    s.estimation_error.resize(static_cast<Eigen::Index>(log.rows.size()), n);

    std::vector<double> err_norm;
    err_norm.reserve(log.rows.size());
    for (size_t i = 0; i < log.rows.size(); ++i) {
        const auto& r = log.rows[i];
        s.min_h_true = std::min(s.min_h_true, r.h_true);
        s.max_abs_u = s.max_abs_u.cwiseMax(r.u.cwiseAbs());
        s.time.push_back(r.t);
        s.lambda_min.push_back(r.eig_p(0));
        s.lambda_max.push_back(r.eig_p(r.eig_p.size() - 1));
        const Vector e = r.x - r.xhat;
        s.estimation_error.row(static_cast<Eigen::Index>(i)) = e.transpose();
        err_norm.push_back(e.norm());
    }
    s.max_u_inf = m > 0 ? s.max_abs_u.maxCoeff() : 0.0;
    s.final_error_norm = err_norm.back();
    s.final_lambda_max = s.lambda_max.back();
    s.final_lambda_min = s.lambda_min.back();
    s.final_state_norm = last.x.norm();
    s.initial_state_norm = first.x.norm();
    s.p_lo = log.monitor.p_lo;
    s.p_hi = log.monitor.p_hi;

    s.error_settling_time = settling_time(s.time, err_norm, options.error_fraction * err_norm.front());
    s.coordinate_settling_time.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        std::vector<double> col(log.rows.size());
        for (size_t i = 0; i < log.rows.size(); ++i)
            col[i] = s.estimation_error(static_cast<Eigen::Index>(i), j);
        s.coordinate_settling_time(j) = settling_time(s.time, col, options.error_fraction * std::abs(col.front()));
    }

    if (options.goal) {
        const double d = std::hypot(last.x(0) - (*options.goal)(0), last.x(1) - (*options.goal)(1));
        s.final_goal_distance = d;
        s.goal_reached = d <= options.goal_tolerance;
    }
    return s;
}

}  // namespace confsafe
