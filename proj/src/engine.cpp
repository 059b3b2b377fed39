#include "dendi/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dendi/parallel.hpp"

namespace dendi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FittedCandidate fit_fixed(const FormSpec& form, const std::vector<FormSpec>& adjust,
                          const Dataset& data) {
    DesignMatrix design = build_design(form, data, adjust);
    FitResult fit = fit_irls(design, data.y, data.family);
    return {form, adjust, std::move(fit)};
}

// Searches the free split of `form_template` over the training data's own
// quantile grid; the grid is rebuilt per call so LOOCV folds re-run the
// whole selection.
Recipe searched_split_recipe(FormSpec form_template, int split_var,
                             std::vector<FormSpec> adjust, DendiConfig config) {
    return [form_template, split_var, adjust = std::move(adjust),
            config](const Dataset& train) {
        SplitGrid grid = make_grid(train, split_var, config.grid_size, config.min_node);
        SearchResult r =
            search_single_split(form_template, train, adjust, grid, train.family);
        return FittedCandidate{r.best_form, adjust, std::move(r.fit)};
    };
}

// Deviance-minimizing multiplicative combination over all admissible
// modifiers; ties go to the smaller modifier index.
Recipe searched_modifier_recipe(int j, std::vector<int> modifiers,
                                std::vector<FormSpec> adjust, DendiConfig config) {
    return [j, modifiers = std::move(modifiers), adjust = std::move(adjust),
            config](const Dataset& train) {
        std::optional<SearchResult> best;
        for (int k : modifiers) {
            SplitGrid grid;
            try {
                grid = make_grid(train, k, config.grid_size, config.min_node);
            } catch (const EmptyGridError&) {
                continue;
            }
            SearchResult r;
            try {
                r = search_single_split(MultiplicativeCombo{j, k, kNaN}, train, adjust,
                                        grid, train.family);
            } catch (const AllCandidatesDegenerateError&) {
                continue;
            }
            if (!best || r.fit.deviance < best->fit.deviance) best = std::move(r);
        }
        if (!best)
            throw AllCandidatesDegenerateError("no admissible modifier split");
        return FittedCandidate{best->best_form, adjust, std::move(best->fit)};
    };
}

Recipe searched_tree_recipe(PiecewiseConstant base, std::vector<int> candidate_vars,
                            std::vector<FormSpec> adjust, DendiConfig config) {
    return [base, candidate_vars = std::move(candidate_vars), adjust = std::move(adjust),
            config](const Dataset& train) {
        SearchResult r = search_second_split(base, train, adjust, candidate_vars,
                                             config.grid_size, config.min_node,
                                             train.family);
        return FittedCandidate{r.best_form, adjust, std::move(r.fit)};
    };
}

void validate_config(const DendiConfig& config) {
    if (config.grid_size < 1) throw std::invalid_argument("grid_size must be >= 1");
    if (config.min_node < 2) throw std::invalid_argument("min_node must be >= 2");
    if (!(config.se_multiplier >= 0.0))
        throw std::invalid_argument("se_multiplier must be >= 0");
}

std::vector<int> modifier_set(const std::vector<StepOutcome>& step1_all, int j, int p,
                              ModifierPolicy policy) {
    std::vector<int> out;
    for (int k = 0; k < p; ++k) {
        if (policy == ModifierPolicy::All || k == j ||
            !is_null(step1_all[static_cast<size_t>(k)].selected))
            out.push_back(k);
    }
    return out;
}

}  // namespace

Recipe null_recipe() {
    return [](const Dataset& train) { return fit_fixed(NullForm{}, {}, train); };
}

Recipe fixed_form_recipe(FormSpec form, std::vector<FormSpec> adjust) {
    return [form = std::move(form), adjust = std::move(adjust)](const Dataset& train) {
        return fit_fixed(form, adjust, train);
    };
}

double score_observation(const FittedCandidate& fitted, const Dataset& data, int i) {
    Dataset row = single_row(data, i);
    DesignMatrix design = build_design(fitted.form, row, fitted.adjust);
    if (design.cols() != fitted.fit.coefficients.size())
        throw std::logic_error("design/coefficient size mismatch while scoring");
    const double eta = design.values.row(0).dot(fitted.fit.coefficients);
    return per_obs_loglik(data.family, data.y[i], eta, fitted.fit.dispersion);
}

LoocvResult loocv_score(const Recipe& recipe, const Dataset& data,
                        const DendiConfig& config) {
    const int n = data.n();
    if (n < 3) throw std::invalid_argument("LOOCV requires n >= 3");

    LoocvResult result;
    result.per_obs.resize(n);
    std::vector<uint8_t> failed(static_cast<size_t>(n), 0);

    parallel_for(n, config.workers, [&](int i) {
        Dataset train = remove_row(data, i);
        FittedCandidate fitted;
        bool ok = true;
        try {
            fitted = recipe(train);
        } catch (const DendiError&) {
            ok = false;
        }
        if (!ok) {
            // failed fold: fall back to the null-model prediction
            failed[static_cast<size_t>(i)] = 1;
            fitted = fit_fixed(NullForm{}, {}, train);
        }
        result.per_obs[i] = score_observation(fitted, data, i);
    });

    for (uint8_t f : failed) result.n_failed_folds += f;
    if (result.n_failed_folds * 10 > n)
        throw TooManyFailedFoldsError(std::to_string(result.n_failed_folds) + " of " +
                                      std::to_string(n) + " LOOCV folds failed");

    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += result.per_obs[i];
    result.mean = sum / n;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = result.per_obs[i] - result.mean;
        ss += d * d;
    }
    result.se = std::sqrt(ss / (n - 1) / n);
    return result;
}

bool one_se_gate(const LoocvResult& candidate, const LoocvResult& reference,
                 const DendiConfig& config) {
    if (candidate.per_obs.size() != reference.per_obs.size())
        throw std::invalid_argument("LOOCV results cover different observation sets");
    return candidate.mean > reference.mean + config.se_multiplier * reference.se;
}

StepOutcome step1(int j, const Dataset& data, const DendiConfig& config,
                  const LoocvResult* shared_null) {
    StepOutcome outcome;
    outcome.covariate = j;
    outcome.reference_loocv =
        shared_null ? *shared_null : loocv_score(null_recipe(), data, config);

    std::optional<FormSpec> linear_form, pc_form;
    try {
        Recipe rec = fixed_form_recipe(Linear{j}, {});
        rec(data);  // full-data fittability
        outcome.candidate_loocvs.emplace(FormKind::Linear, loocv_score(rec, data, config));
        linear_form = Linear{j};
    } catch (const DendiError&) {
    }
    try {
        Recipe rec = searched_split_recipe(PiecewiseConstant{j, kNaN}, j, {}, config);
        FittedCandidate full = rec(data);  // concrete split from the full data
        outcome.candidate_loocvs.emplace(FormKind::PiecewiseConstant,
                                         loocv_score(rec, data, config));
        pc_form = full.form;
    } catch (const DendiError&) {
    }

    if (outcome.candidate_loocvs.empty()) {
        outcome.selected = NullForm{};
        outcome.gate_passed = false;
        return outcome;
    }

    FormSpec winner;
    const LoocvResult* winner_cv = nullptr;
    const auto lin = outcome.candidate_loocvs.find(FormKind::Linear);
    const auto pc = outcome.candidate_loocvs.find(FormKind::PiecewiseConstant);
    if (lin != outcome.candidate_loocvs.end() && pc != outcome.candidate_loocvs.end()) {
        // tie goes to the simpler linear model
        if (pc->second.mean > lin->second.mean) {
            winner = *pc_form;
            winner_cv = &pc->second;
        } else {
            winner = *linear_form;
            winner_cv = &lin->second;
        }
    } else if (lin != outcome.candidate_loocvs.end()) {
        winner = *linear_form;
        winner_cv = &lin->second;
    } else {
        winner = *pc_form;
        winner_cv = &pc->second;
    }

    outcome.gate_passed = one_se_gate(*winner_cv, outcome.reference_loocv, config);
    outcome.selected = outcome.gate_passed ? winner : FormSpec{NullForm{}};
    return outcome;
}

StepOutcome step2(int j, const std::vector<StepOutcome>& step1_all, const Dataset& data,
                  const DendiConfig& config) {
    const StepOutcome& first = step1_all[static_cast<size_t>(j)];
    if (is_null(first.selected))
        throw std::invalid_argument("step2 requires a non-null step-1 selection");

    std::vector<FormSpec> adjust;
    for (int k = 0; k < data.p(); ++k) {
        if (k != j && !is_null(step1_all[static_cast<size_t>(k)].selected))
            adjust.push_back(step1_all[static_cast<size_t>(k)].selected);
    }

    StepOutcome outcome;
    outcome.covariate = j;
    // like-for-like reference: the step-1 form refitted with the step-2
    // adjustment set
    outcome.reference_loocv =
        loocv_score(fixed_form_recipe(first.selected, adjust), data, config);

    std::map<FormKind, Recipe> recipes;
    if (std::holds_alternative<Linear>(first.selected)) {
        recipes.emplace(FormKind::AdditiveCombo,
                        searched_split_recipe(AdditiveCombo{j, kNaN}, j, adjust, config));
        recipes.emplace(FormKind::MultiplicativeCombo,
                        searched_modifier_recipe(
                            j, modifier_set(step1_all, j, data.p(), config.candidate_modifiers),
                            adjust, config));
    } else {
        const auto& pc = std::get<PiecewiseConstant>(first.selected);
        recipes.emplace(FormKind::AdditiveCombo,
                        fixed_form_recipe(AdditiveCombo{j, pc.c}, adjust));
        recipes.emplace(FormKind::Tree,
                        searched_tree_recipe(
                            pc, modifier_set(step1_all, j, data.p(), config.candidate_modifiers),
                            adjust, config));
    }

    std::map<FormKind, FormSpec> full_forms;
    for (const auto& [kind, recipe] : recipes) {
        try {
            FittedCandidate full = recipe(data);
            outcome.candidate_loocvs.emplace(kind, loocv_score(recipe, data, config));
            full_forms.emplace(kind, full.form);
        } catch (const DendiError&) {
            // candidate kind has no admissible configuration
        }
    }

    if (outcome.candidate_loocvs.empty()) {
        outcome.selected = first.selected;
        outcome.gate_passed = false;
        return outcome;
    }

    FormKind best_kind = FormKind::Null;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& [kind, cv] : outcome.candidate_loocvs) {
        if (cv.mean > best_mean) {
            best_mean = cv.mean;
            best_kind = kind;
        }
    }

    outcome.gate_passed =
        one_se_gate(outcome.candidate_loocvs.at(best_kind), outcome.reference_loocv, config);
    outcome.selected = outcome.gate_passed ? full_forms.at(best_kind) : first.selected;
    return outcome;
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<std::pair<int, int>> interaction_of(const FormSpec& form) {
    if (const auto* m = std::get_if<MultiplicativeCombo>(&form)) {
        if (m->k != m->j) return std::make_pair(std::min(m->j, m->k), std::max(m->j, m->k));
    } else if (const auto* t = std::get_if<Tree>(&form)) {
        if (t->second.k != t->j)
            return std::make_pair(std::min(t->j, t->second.k),
                                  std::max(t->j, t->second.k));
    }
    return std::nullopt;
}

}  // namespace

DendiReport run_dendi(const Dataset& data, const DendiConfig& config) {
    validate_dataset(data);
    validate_config(config);
    const int p = data.p();

    DendiReport report;
    const LoocvResult null_cv = loocv_score(null_recipe(), data, config);

    report.step1.reserve(static_cast<size_t>(p));
    for (int j = 0; j < p; ++j)
        report.step1.push_back(step1(j, data, config, &null_cv));

    report.step2.resize(static_cast<size_t>(p));
    report.final_forms.resize(static_cast<size_t>(p), NullForm{});
    for (int j = 0; j < p; ++j) {
        if (is_null(report.step1[static_cast<size_t>(j)].selected)) continue;
        report.step2[static_cast<size_t>(j)] = step2(j, report.step1, data, config);
        report.final_forms[static_cast<size_t>(j)] =
            report.step2[static_cast<size_t>(j)]->selected;
    }

    // one full-data fit of the final joint specification; exact duplicate
    // columns collapse so the fit stays full rank when two selected forms
    // describe the same term
    std::vector<FormSpec> joint_terms;
    std::vector<int> term_covariate;
    for (int j = 0; j < p; ++j) {
        if (is_null(report.final_forms[static_cast<size_t>(j)])) continue;
        joint_terms.push_back(report.final_forms[static_cast<size_t>(j)]);
        term_covariate.push_back(j);
    }
    const DesignMatrix raw = build_design(NullForm{}, data, joint_terms);
    std::vector<int> kept;
    std::vector<int> raw_to_merged(static_cast<size_t>(raw.cols()));
    for (int c = 0; c < raw.cols(); ++c) {
        int duplicate = -1;
        for (size_t m = 0; m < kept.size() && duplicate < 0; ++m) {
            if (c > 0 && kept[m] > 0 && raw.values.col(c) == raw.values.col(kept[m]))
                duplicate = static_cast<int>(m);
        }
        if (duplicate >= 0) {
            raw_to_merged[static_cast<size_t>(c)] = duplicate;
            continue;
        }
        // alias any column that is linearly dependent on its predecessors;
        // constraining its coefficient to zero does not change the fit
        Eigen::MatrixXd probe(data.n(), kept.size() + 1);
        for (size_t m = 0; m < kept.size(); ++m)
            probe.col(static_cast<Eigen::Index>(m)) = raw.values.col(kept[m]);
        probe.col(static_cast<Eigen::Index>(kept.size())) = raw.values.col(c);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(probe);
        qr.setThreshold(1e-10);
        if (qr.rank() < static_cast<Eigen::Index>(kept.size()) + 1) {
            raw_to_merged[static_cast<size_t>(c)] = -1;
        } else {
            raw_to_merged[static_cast<size_t>(c)] = static_cast<int>(kept.size());
            kept.push_back(c);
        }
    }
    report.joint_design.values.resize(data.n(), static_cast<Eigen::Index>(kept.size()));
    report.joint_design.column_labels.clear();
    for (size_t m = 0; m < kept.size(); ++m) {
        report.joint_design.values.col(static_cast<Eigen::Index>(m)) =
            raw.values.col(kept[m]);
        report.joint_design.column_labels.push_back(
            raw.column_labels[static_cast<size_t>(kept[m])]);
    }
    report.joint_fit = fit_irls(report.joint_design, data.y, data.family);

    report.form_coefficient_columns.assign(static_cast<size_t>(p), {});
    report.form_column_labels.assign(static_cast<size_t>(p), {});
    {
        int raw_col = 1;  // after intercept
        for (size_t t = 0; t < joint_terms.size(); ++t) {
            const auto cov = static_cast<size_t>(term_covariate[t]);
            const int count = std::visit(
                [](const auto& f) -> int {
                    using T = std::decay_t<decltype(f)>;
                    if constexpr (std::is_same_v<T, NullForm>)
                        return 0;
                    else if constexpr (std::is_same_v<T, Linear> ||
                                       std::is_same_v<T, PiecewiseConstant>)
                        return 1;
                    else
                        return 2;
                },
                joint_terms[t]);
            for (int c = 0; c < count; ++c) {
                report.form_coefficient_columns[cov].push_back(
                    raw_to_merged[static_cast<size_t>(raw_col)]);
                report.form_column_labels[cov].push_back(
                    raw.column_labels[static_cast<size_t>(raw_col)]);
                ++raw_col;
            }
        }
    }

    std::set<std::pair<int, int>> pairs;
    for (const FormSpec& f : report.final_forms)
        if (auto pr = interaction_of(f)) pairs.insert(*pr);
    report.interactions.assign(pairs.begin(), pairs.end());

    // effect curves: vary one covariate over its range, others at medians,
    // confounders at zero
    Eigen::VectorXd medians(p);
    for (int j = 0; j < p; ++j) {
        std::vector<double> col(data.X.col(j).data(), data.X.col(j).data() + data.n());
        medians[j] = median_of(std::move(col));
    }
    for (int j = 0; j < p; ++j) {
        EffectCurve curve;
        curve.covariate = j;
        const double lo = data.X.col(j).minCoeff();
        const double hi = data.X.col(j).maxCoeff();
        Dataset point;
        point.family = data.family;
        point.x_names = data.x_names;
        point.z_names = data.z_names;
        point.y = Eigen::VectorXd::Zero(1);
        point.X = medians.transpose();
        point.Z = Eigen::MatrixXd::Zero(1, data.q());
        for (int t = 0; t <= 100; ++t) {
            const double x = lo + (hi - lo) * t / 100.0;
            point.X(0, j) = x;
            DesignMatrix row = build_design(NullForm{}, point, joint_terms);
            double eta = 0.0;
            for (size_t m = 0; m < kept.size(); ++m)
                eta += row.values(0, kept[m]) *
                       report.joint_fit.coefficients[static_cast<Eigen::Index>(m)];
            curve.x.push_back(x);
            curve.eta.push_back(eta);
            curve.response.push_back(inverse_link(data.family, eta));
        }
        report.curves.push_back(std::move(curve));
    }

    return report;
}

}  // namespace dendi
