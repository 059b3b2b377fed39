#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dendi {

// Everything the CLI needs for one run; loadable from flags or a JSON
// config file with the same field names.
struct RunConfig {
    std::string mode;  // "analyze" | "simulate"
    std::string input_path;
    std::string outcome_column;
    std::vector<std::string> covariate_columns;
    std::vector<std::string> confounder_columns;
    std::string family = "gaussian";
    int grid_size = 19;
    int min_node = 10;
    double se_multiplier = 1.0;
    std::string candidate_modifiers = "all";  // "all" | "step1-selected"
    int scenario = 0;
    std::vector<int> ns;
    std::vector<double> sigmas;
    int replications = 100;
    uint64_t seed = 1;
    std::string output_dir = ".";
    int workers = 0;  // 0 = all hardware threads
};

}  // namespace dendi
