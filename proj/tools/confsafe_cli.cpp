#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace confsafe::cli;

    CLI::App app{"Confidence-aware safe and stable output-feedback control"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run one closed-loop episode");
    simulate->add_option("--example", sim.example, "second-order | unicycle");
    simulate->add_option("--config", sim.config_path, "key = value config file");
    simulate->add_option("--c1", sim.c1, "confidence weight");
    simulate->add_option("--seed", sim.seed, "disturbance seed");
    simulate->add_option("--dt", sim.dt, "integration step dt_int");
    simulate->add_option("--t-final", sim.t_final, "episode length");
    simulate->add_option("--set", sim.set, "extra key=value override (repeatable)");
    simulate->add_option("--out", sim.out_dir, "output directory");
    simulate->add_flag("--quiet", sim.quiet, "print only the metrics summary");

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "run c1 x seed cross product and tabulate");
    compare->add_option("--example", cmp.example, "second-order | unicycle");
    compare->add_option("--config", cmp.config_path, "key = value config file");
    compare->add_option("--c1", cmp.c1_values, "confidence weights")->delimiter(',');
    compare->add_option("--seeds", cmp.seeds, "seeds")->delimiter(',');
    compare->add_option("--set", cmp.set, "extra key=value override (repeatable)");
    compare->add_option("--out", cmp.out_dir, "output directory");
    compare->add_option("--jobs", cmp.jobs, "concurrent runs");
    compare->add_flag("--quiet", cmp.quiet, "print only the comparison table");

    ValidateArgs val;
    auto* validate = app.add_subcommand("validate", "check initial conditions against the theory constants");
    validate->add_option("--example", val.example, "second-order | unicycle");
    validate->add_option("--config", val.config_path, "key = value config file");
    validate->add_option("--set", val.set, "extra key=value override (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (*simulate)
        return cmd_simulate(sim, std::cout, std::cerr);
    if (*compare)
        return cmd_compare(cmp, std::cout, std::cerr);
    return cmd_validate(val, std::cout, std::cerr);
}
