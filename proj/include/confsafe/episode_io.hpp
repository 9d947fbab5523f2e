#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "confsafe/sim.hpp"

namespace confsafe {

inline constexpr const char* kArtifactVersion = "1.0.0";

/// t, x0..x{n-1}, xhat0..xhat{n-1}, u0..u{m-1}, delta, eigP_0..eigP_{n-1},
/// h_true, h_hat, V_true, metric_value, solver_status, solver_iters
[[nodiscard]] std::vector<std::string> csv_header(Eigen::Index n_x, Eigen::Index n_u);

/// '#'-prefixed metadata lines (seed, config hash, disturbance sample,
/// artifact version, termination) followed by the header and one row per
/// integration step. Reals use 17 significant digits.
void write_trajectory_csv(std::ostream& out, const EpisodeLog& log);

struct CsvTable {
    std::map<std::string, std::string> metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] Eigen::Index column(const std::string& name) const;  // -1 if absent
};

/// Reads a trajectory CSV back. Throws std::runtime_error on ragged rows.
[[nodiscard]] CsvTable read_trajectory_csv(std::istream& in);

/// key = value lines describing an episode summary.
void write_metrics(std::ostream& out, const EpisodeSummary& summary, const EpisodeLog& log);

}  // namespace confsafe
