#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace confsafe::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigInvalid = 2;
inline constexpr int kExitSolverInfeasible = 3;
inline constexpr int kExitObserverFailure = 4;
inline constexpr int kExitNumericalFailure = 5;

// Default output root when --out is not given.
inline constexpr const char* kOutputRootEnv = "CONFSAFE_OUTPUT_ROOT";

struct SimulateArgs {
    std::optional<std::string> example;
    std::optional<std::string> config_path;
    std::optional<double> c1;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> t_final;
    std::vector<std::string> set;  // raw key=value overrides
    std::optional<std::string> out_dir;
    bool quiet = false;
};

struct CompareArgs {
    std::optional<std::string> example;
    std::optional<std::string> config_path;
    std::vector<double> c1_values{0.0, 1000.0};
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> set;
    std::optional<std::string> out_dir;
    int jobs = 1;
    bool quiet = false;
};

struct ValidateArgs {
    std::optional<std::string> example;
    std::optional<std::string> config_path;
    std::vector<std::string> set;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace confsafe::cli
