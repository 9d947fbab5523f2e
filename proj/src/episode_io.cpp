#include "confsafe/episode_io.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "confsafe/config.hpp"

namespace confsafe {

std::vector<std::string> csv_header(Eigen::Index n_x, Eigen::Index n_u) {
    std::vector<std::string> h{"t"};
    for (Eigen::Index i = 0; i < n_x; ++i)
        h.push_back("x" + std::to_string(i));
    for (Eigen::Index i = 0; i < n_x; ++i)
        h.push_back("xhat" + std::to_string(i));
    for (Eigen::Index i = 0; i < n_u; ++i)
        h.push_back("u" + std::to_string(i));
    h.push_back("delta");
    for (Eigen::Index i = 0; i < n_x; ++i)
        h.push_back("eigP_" + std::to_string(i));
    for (const char* name : {"h_true", "h_hat", "V_true", "metric_value", "solver_status", "solver_iters"})
        h.emplace_back(name);
    return h;
}

void write_trajectory_csv(std::ostream& out, const EpisodeLog& log) {
    out << "# artifact_version: " << kArtifactVersion << "\n";
    out << "# seed: " << log.seed << "\n";
    out << "# config_hash: " << log.config_hash << "\n";
    out << "# disturbance_sample: " << (log.disturbance_sample ? format_double(*log.disturbance_sample) : "none")
        << "\n";
    out << "# termination: " << to_string(log.termination) << "\n";

    const auto header = csv_header(log.n_x, log.n_u);
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";

    std::string line;
    for (const auto& r : log.rows) {
        line = format_double(r.t);
        auto add = [&](double v) {
            line += ',';
            line += format_double(v);
        };
        for (Eigen::Index i = 0; i < r.x.size(); ++i)
            add(r.x(i));
        for (Eigen::Index i = 0; i < r.xhat.size(); ++i)
            add(r.xhat(i));
        for (Eigen::Index i = 0; i < r.u.size(); ++i)
            add(r.u(i));
        add(r.delta);
        for (Eigen::Index i = 0; i < r.eig_p.size(); ++i)
            add(r.eig_p(i));
        add(r.h_true);
        add(r.h_hat);
        add(r.v_true);
        add(r.metric_value);
        line += ',';
        line += to_string(r.solver_status);
        line += ',';
        line += std::to_string(r.solver_iters);
        out << line << '\n';
    }
}

Eigen::Index CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return static_cast<Eigen::Index>(i);
    return -1;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(item);
    return out;
}

}  // namespace

CsvTable read_trajectory_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                auto value = line.substr(colon + 1);
                value.erase(0, value.find_first_not_of(' '));
                table.metadata[line.substr(2, colon - 2)] = value;
            }
            continue;
        }
        if (table.header.empty()) {
            table.header = split(line);
            continue;
        }
        auto cells = split(line);
        if (cells.size() != table.header.size())
            throw std::runtime_error("trajectory csv: row " + std::to_string(table.rows.size() + 1) + " has " +
                                     std::to_string(cells.size()) + " columns, expected " +
                                     std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

void write_metrics(std::ostream& out, const EpisodeSummary& s, const EpisodeLog& log) {
    auto kv = [&](const std::string& k, const std::string& v) { out << k << " = " << v << "\n"; };
    kv("termination", to_string(s.termination));
    if (!log.message.empty())
        kv("message", log.message);
    kv("seed", std::to_string(log.seed));
    kv("config_hash", log.config_hash);
    kv("disturbance_sample", log.disturbance_sample ? format_double(*log.disturbance_sample) : "none");
    kv("rows", std::to_string(log.rows.size()));
    kv("final_time", format_double(s.final_time));
    kv("min_h_true", format_double(s.min_h_true));
    kv("initial_state_norm", format_double(s.initial_state_norm));
    kv("final_state_norm", format_double(s.final_state_norm));
    kv("final_error_norm", format_double(s.final_error_norm));
    kv("final_lambda_max_P", format_double(s.final_lambda_max));
    kv("final_lambda_min_P", format_double(s.final_lambda_min));
    kv("p_lo", format_double(s.p_lo));
    kv("p_hi", format_double(s.p_hi));
    kv("assumption_violated", log.monitor.assumption_violated ? "true" : "false");
    kv("max_u_inf", format_double(s.max_u_inf));
    for (Eigen::Index k = 0; k < s.max_abs_u.size(); ++k)
        kv("max_abs_u" + std::to_string(k), format_double(s.max_abs_u(k)));
    kv("error_settling_time", format_double(s.error_settling_time));
    for (Eigen::Index k = 0; k < s.coordinate_settling_time.size(); ++k)
        kv("error_settling_time_x" + std::to_string(k), format_double(s.coordinate_settling_time(k)));
    if (s.final_goal_distance) {
        kv("final_goal_distance", format_double(*s.final_goal_distance));
        kv("goal_reached", s.goal_reached ? "true" : "false");
    }
    kv("non_optimal_solves", std::to_string(log.non_optimal_solves));
    kv("near_degenerate_solves", std::to_string(log.near_degenerate_solves));
}

}  // namespace confsafe
