#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dendi/engine.hpp"

namespace dendi {

// One simulated dataset: scenarios 1-5 are univariable, 6 is the
// five-covariate scenario with a varying coefficient and a two-covariate
// tree interaction. Covariates are iid standard normal, errors zero-mean
// normal with the given sigma, outcomes Gaussian.
struct ScenarioSpec {
    int id = 1;  // 1..6
    int n = 200;
    double sigma = 1.0;
    uint64_t seed = 1;
};

int scenario_covariate_count(int id);
std::vector<std::string> scenario_targets(int id);

Dataset generate(const ScenarioSpec& spec);

// True linear predictor of the scenario, used by sanity checks.
Eigen::VectorXd scenario_eta(int id, const Eigen::MatrixXd& X);

struct RunClassification {
    std::vector<FormKind> labels;   // per covariate
    std::vector<int> partner;       // modifier / second-split variable, -1 if none
    std::vector<bool> correct;      // per scenario target
};

RunClassification classify(const DendiReport& report, const ScenarioSpec& truth);

struct CellStats {
    int n = 0;
    double sigma = 0.0;
    std::vector<double> detection;                  // per target, in [0,1]
    std::vector<std::array<int, 6>> label_counts;   // [covariate][FormKind]
    std::vector<std::vector<double>> split_points;  // [covariate] first-split values
};

struct DetectionTable {
    int scenario = 0;
    int replications = 0;
    std::vector<std::string> targets;
    std::vector<CellStats> cells;  // ordered by (n, sigma) as given
};

// R seeded replications per (n, sigma) cell; replication seeds derive from
// (base_seed, scenario, n, sigma, rep) so cells are order-insensitive and
// reruns with any worker count reproduce the table exactly.
DetectionTable run_grid(int scenario_id, const std::vector<int>& ns,
                        const std::vector<double>& sigmas, int replications,
                        const DendiConfig& config, uint64_t base_seed);

}  // namespace dendi
