#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "dendi/commands.hpp"
#include "dendi/version.hpp"

namespace {

// --config is applied before flag parsing so explicit flags win.
bool preload_config(int argc, char** argv, dendi::RunConfig& config) {
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        std::string path;
        if (arg == "--config" && i + 1 < argc)
            path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            path = arg.substr(9);
        else
            continue;
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot open config file: " << path << "\n";
            return false;
        }
        nlohmann::json j;
        in >> j;
        config = dendi::config_from_json(j);
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    dendi::RunConfig config;
    if (!preload_config(argc, argv, config)) return 1;

    CLI::App app{"DENDI: detection of nonlinearity, discontinuity and interactions "
                 "in generalized regression models"};
    app.set_version_flag("--version", dendi::kVersion);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");
    app.add_option("--mode", config.mode, "analyze | simulate")->required();
    app.add_option("--input", config.input_path, "CSV input file (analyze)");
    app.add_option("--outcome", config.outcome_column, "outcome column name");
    app.add_option("--covariates", config.covariate_columns,
                   "comma-separated covariate column names")
        ->delimiter(',');
    app.add_option("--confounders", config.confounder_columns,
                   "comma-separated confounder column names")
        ->delimiter(',');
    app.add_option("--family", config.family, "gaussian | binomial | poisson");
    app.add_option("--grid-size", config.grid_size, "split candidates per covariate");
    app.add_option("--min-node", config.min_node, "minimum observations per node");
    app.add_option("--se-multiplier", config.se_multiplier,
                   "multiplier for the 1SE selection rule");
    app.add_option("--candidate-modifiers", config.candidate_modifiers,
                   "all | step1-selected");
    app.add_option("--scenario", config.scenario, "simulation scenario 1..6");
    app.add_option("--n", config.ns, "comma-separated sample sizes (simulate)")
        ->delimiter(',');
    app.add_option("--sigma", config.sigmas, "comma-separated noise levels (simulate)")
        ->delimiter(',');
    app.add_option("--replications", config.replications, "replications per cell");
    app.add_option("--seed", config.seed, "base RNG seed");
    app.add_option("--out", config.output_dir, "output directory");
    app.add_option("--workers", config.workers, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    if (config.mode == "analyze") return dendi::cmd_analyze(config);
    if (config.mode == "simulate") return dendi::cmd_simulate(config);
    std::cerr << "error: --mode must be 'analyze' or 'simulate'\n";
    return 1;
}
