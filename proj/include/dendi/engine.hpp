#pragma once

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dendi/forms.hpp"

namespace dendi {

enum class ModifierPolicy { All, Step1Selected };

struct DendiConfig {
    int grid_size = 19;
    int min_node = 10;
    double se_multiplier = 1.0;
    ModifierPolicy candidate_modifiers = ModifierPolicy::All;
    int workers = 1;
};

// Per-observation predicted log-likelihoods from leave-one-out CV.
struct LoocvResult {
    Eigen::VectorXd per_obs;
    double mean = 0.0;
    double se = 0.0;  // sqrt(sample variance / n)
    int n_failed_folds = 0;
};

// A model fitted on some training set, with everything needed to score a
// held-out observation: the concrete form (splits resolved on the training
// data), the fixed adjustment terms and the coefficient fit.
struct FittedCandidate {
    FormSpec form;
    std::vector<FormSpec> adjust;
    FitResult fit;
};

// A fit recipe is rerun from scratch on every LOOCV training fold,
// including any split or modifier search it contains.
using Recipe = std::function<FittedCandidate(const Dataset&)>;

Recipe null_recipe();
Recipe fixed_form_recipe(FormSpec form, std::vector<FormSpec> adjust);

// Log-likelihood of observation i of `data` under a model fitted elsewhere.
double score_observation(const FittedCandidate& fitted, const Dataset& data, int i);

// Runs the recipe on each n-1 subset and scores the held-out observation.
// Folds whose recipe fails contribute the null-model fold prediction and
// are counted; more than 10% failed folds invalidate the candidate.
LoocvResult loocv_score(const Recipe& recipe, const Dataset& data,
                        const DendiConfig& config);

// The one-standard-error rule: strictly better than the reference mean plus
// se_multiplier times the reference's standard error.
bool one_se_gate(const LoocvResult& candidate, const LoocvResult& reference,
                 const DendiConfig& config);

struct StepOutcome {
    int covariate = -1;
    FormSpec selected = NullForm{};
    LoocvResult reference_loocv;
    std::map<FormKind, LoocvResult> candidate_loocvs;
    bool gate_passed = false;
};

// Step 1: linear vs piecewise constant for covariate j, gated against the
// null model (intercept + confounders). Pass the shared null LOOCV when
// running over several covariates to avoid recomputing it.
StepOutcome step1(int j, const Dataset& data, const DendiConfig& config,
                  const LoocvResult* shared_null = nullptr);

// Step 2: third-level forms for covariate j, adjusted for the step-1
// selections of all other covariates and gated against the step-1 form
// refitted with the same adjustment set.
StepOutcome step2(int j, const std::vector<StepOutcome>& step1_all, const Dataset& data,
                  const DendiConfig& config);

struct EffectCurve {
    int covariate;
    std::vector<double> x;
    std::vector<double> eta;
    std::vector<double> response;
};

struct DendiReport {
    std::vector<StepOutcome> step1;
    std::vector<std::optional<StepOutcome>> step2;
    std::vector<FormSpec> final_forms;          // per covariate
    DesignMatrix joint_design;                  // final joint specification
    FitResult joint_fit;                        // one full-data fit
    // The union of selected forms can be collinear (a tree pair detected
    // from both directions describes the same interaction cell, exactly or
    // through the adjustment span). Exactly duplicated columns collapse to a
    // shared coefficient; any remaining dependent column is aliased to zero,
    // which leaves the fitted predictor unchanged. Per covariate: joint
    // coefficient index per form column, -1 for aliased.
    std::vector<std::vector<int>> form_coefficient_columns;
    std::vector<std::vector<std::string>> form_column_labels;
    std::vector<std::pair<int, int>> interactions;  // unordered pairs, i < j
    std::vector<EffectCurve> curves;            // 101 points per covariate
};

DendiReport run_dendi(const Dataset& data, const DendiConfig& config);

}  // namespace dendi
