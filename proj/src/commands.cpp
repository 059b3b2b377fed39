#include "dendi/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dendi/parallel.hpp"
#include "dendi/version.hpp"

namespace dendi {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string f4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const auto n = static_cast<long long>(sorted.size());
    const long long idx = std::clamp<long long>(
        static_cast<long long>(std::ceil(q * static_cast<double>(n))) - 1, 0, n - 1);
    return sorted[static_cast<size_t>(idx)];
}

double median_sorted(const std::vector<double>& sorted) {
    const size_t n = sorted.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

std::string kind_string(FormKind kind) {
    switch (kind) {
        case FormKind::Null: return "null";
        case FormKind::Linear: return "linear";
        case FormKind::PiecewiseConstant: return "piecewise_constant";
        case FormKind::AdditiveCombo: return "additive_combo";
        case FormKind::MultiplicativeCombo: return "multiplicative_combo";
        case FormKind::Tree: return "tree";
    }
    return "unknown";
}

nlohmann::json form_to_json(const FormSpec& form, const Dataset& data) {
    nlohmann::json j;
    j["kind"] = kind_string(kind_of(form));
    j["label"] = std::string(1, kind_letter(kind_of(form)));
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (!std::is_same_v<T, NullForm>) {
                j["covariate"] = data.x_name(f.j);
            }
            if constexpr (std::is_same_v<T, PiecewiseConstant> ||
                          std::is_same_v<T, AdditiveCombo>) {
                j["split"] = f.c;
            } else if constexpr (std::is_same_v<T, MultiplicativeCombo>) {
                j["modifier"] = data.x_name(f.k);
                j["split"] = f.c;
            } else if constexpr (std::is_same_v<T, Tree>) {
                j["split"] = f.c;
                j["second"] = {
                    {"node", f.second.node == Node::Left ? "left" : "right"},
                    {"variable", data.x_name(f.second.k)},
                    {"split", f.second.c2},
                };
            }
        },
        form);
    return j;
}

nlohmann::json loocv_to_json(const LoocvResult& cv) {
    return {{"mean", cv.mean}, {"se", cv.se}, {"failed_folds", cv.n_failed_folds}};
}

nlohmann::json step_to_json(const StepOutcome& step, const Dataset& data) {
    nlohmann::json candidates = nlohmann::json::object();
    for (const auto& [kind, cv] : step.candidate_loocvs)
        candidates[kind_string(kind)] = loocv_to_json(cv);
    return {{"selected", form_to_json(step.selected, data)},
            {"reference", loocv_to_json(step.reference_loocv)},
            {"candidates", candidates},
            {"gate_passed", step.gate_passed}};
}

std::vector<double> split_values_of(const FormSpec& form) {
    std::vector<double> out;
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PiecewiseConstant> ||
                          std::is_same_v<T, AdditiveCombo> ||
                          std::is_same_v<T, MultiplicativeCombo>) {
                out.push_back(f.c);
            } else if constexpr (std::is_same_v<T, Tree>) {
                out.push_back(f.c);
                out.push_back(f.second.c2);
            }
        },
        form);
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

DendiConfig engine_config(const RunConfig& config) {
    DendiConfig out;
    out.grid_size = config.grid_size;
    out.min_node = config.min_node;
    out.se_multiplier = config.se_multiplier;
    if (config.candidate_modifiers == "all")
        out.candidate_modifiers = ModifierPolicy::All;
    else if (config.candidate_modifiers == "step1-selected")
        out.candidate_modifiers = ModifierPolicy::Step1Selected;
    else
        throw std::invalid_argument("candidate_modifiers must be 'all' or 'step1-selected'");
    out.workers = config.workers > 0 ? config.workers : default_workers();
    return out;
}

nlohmann::json config_to_json(const RunConfig& c) {
    return {{"mode", c.mode},
            {"input", c.input_path},
            {"outcome", c.outcome_column},
            {"covariates", c.covariate_columns},
            {"confounders", c.confounder_columns},
            {"family", c.family},
            {"grid_size", c.grid_size},
            {"min_node", c.min_node},
            {"se_multiplier", c.se_multiplier},
            {"candidate_modifiers", c.candidate_modifiers},
            {"scenario", c.scenario},
            {"n", c.ns},
            {"sigma", c.sigmas},
            {"replications", c.replications},
            {"seed", c.seed},
            {"out", c.output_dir},
            {"workers", c.workers}};
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    j.at("mode").get_to(c.mode);
    if (j.contains("input")) j.at("input").get_to(c.input_path);
    if (j.contains("outcome")) j.at("outcome").get_to(c.outcome_column);
    if (j.contains("covariates")) j.at("covariates").get_to(c.covariate_columns);
    if (j.contains("confounders")) j.at("confounders").get_to(c.confounder_columns);
    if (j.contains("family")) j.at("family").get_to(c.family);
    if (j.contains("grid_size")) j.at("grid_size").get_to(c.grid_size);
    if (j.contains("min_node")) j.at("min_node").get_to(c.min_node);
    if (j.contains("se_multiplier")) j.at("se_multiplier").get_to(c.se_multiplier);
    if (j.contains("candidate_modifiers"))
        j.at("candidate_modifiers").get_to(c.candidate_modifiers);
    if (j.contains("scenario")) j.at("scenario").get_to(c.scenario);
    if (j.contains("n")) j.at("n").get_to(c.ns);
    if (j.contains("sigma")) j.at("sigma").get_to(c.sigmas);
    if (j.contains("replications")) j.at("replications").get_to(c.replications);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
    if (j.contains("out")) j.at("out").get_to(c.output_dir);
    if (j.contains("workers")) j.at("workers").get_to(c.workers);
    return c;
}

nlohmann::json report_to_json(const DendiReport& report, const Dataset& data,
                              const RunConfig& config, double wall_seconds,
                              int n_dropped) {
    nlohmann::json j;
    j["software"] = {{"name", "dendi"}, {"version", kVersion}};
    j["config"] = config_to_json(config);
    j["wall_time_seconds"] = wall_seconds;
    j["n"] = data.n();
    j["n_dropped"] = n_dropped;

    // joint-fit coefficient blocks: intercept | per-form columns | confounders
    nlohmann::json model;
    model["family"] = std::string(family_name(data.family));
    model["loglik"] = report.joint_fit.loglik;
    model["deviance"] = report.joint_fit.deviance;
    model["dispersion"] = report.joint_fit.dispersion;
    model["converged"] = report.joint_fit.converged;
    nlohmann::json coef = nlohmann::json::array();
    for (int c = 0; c < report.joint_design.cols(); ++c)
        coef.push_back({{"label", report.joint_design.column_labels[static_cast<size_t>(c)]},
                        {"value", report.joint_fit.coefficients[c]}});
    model["coefficients"] = coef;
    j["model"] = model;

    nlohmann::json covariates = nlohmann::json::array();
    for (size_t k = 0; k < report.final_forms.size(); ++k) {
        const FormSpec& form = report.final_forms[k];
        nlohmann::json cj;
        cj["name"] = data.x_name(static_cast<int>(k));
        cj["final_form"] = form_to_json(form, data);
        cj["description"] = describe(form, data);
        cj["split_points"] = split_values_of(form);
        nlohmann::json coefs = nlohmann::json::array();
        for (size_t c = 0; c < report.form_coefficient_columns[k].size(); ++c) {
            const int col = report.form_coefficient_columns[k][c];
            if (col >= 0) {
                coefs.push_back(
                    {{"label",
                      report.joint_design.column_labels[static_cast<size_t>(col)]},
                     {"value", report.joint_fit.coefficients[col]}});
            } else {
                // collinear with earlier terms; constrained to zero
                coefs.push_back({{"label", report.form_column_labels[k][c]},
                                 {"value", 0.0},
                                 {"aliased", true}});
            }
        }
        cj["coefficients"] = coefs;
        cj["step1"] = step_to_json(report.step1[k], data);
        cj["step2"] = report.step2[k] ? step_to_json(*report.step2[k], data)
                                      : nlohmann::json(nullptr);
        covariates.push_back(cj);
    }
    j["covariates"] = covariates;

    nlohmann::json inter = nlohmann::json::array();
    for (const auto& [a, b] : report.interactions)
        inter.push_back({data.x_name(a), data.x_name(b)});
    j["interactions"] = inter;
    return j;
}

std::string curves_tsv(const DendiReport& report, const Dataset& data) {
    std::string out = "covariate\tx\teta\tresponse\n";
    for (const EffectCurve& curve : report.curves) {
        const std::string name = data.x_name(curve.covariate);
        for (size_t t = 0; t < curve.x.size(); ++t) {
            out += name;
            out += '\t';
            out += g17(curve.x[t]);
            out += '\t';
            out += g17(curve.eta[t]);
            out += '\t';
            out += g17(curve.response[t]);
            out += '\n';
        }
    }
    return out;
}

std::string summary_text(const DendiReport& report, const Dataset& data) {
    std::string out = "DENDI summary (family " + std::string(family_name(data.family)) +
                      ", n = " + std::to_string(data.n()) + ")\n";
    for (size_t k = 0; k < report.final_forms.size(); ++k) {
        out += "  " + data.x_name(static_cast<int>(k)) + ": " +
               describe(report.final_forms[k], data) + "\n";
    }
    if (report.interactions.empty()) {
        out += "interactions: none\n";
    } else {
        out += "interactions:";
        for (const auto& [a, b] : report.interactions)
            out += " {" + data.x_name(a) + ", " + data.x_name(b) + "}";
        out += "\n";
    }
    return out;
}

std::string detection_tsv(const DetectionTable& table) {
    std::string out = "effect";
    for (const CellStats& cell : table.cells)
        out += "\tn=" + std::to_string(cell.n) + ",sigma=" + g6(cell.sigma);
    out += '\n';
    for (size_t t = 0; t < table.targets.size(); ++t) {
        out += table.targets[t];
        for (const CellStats& cell : table.cells) out += '\t' + f4(cell.detection[t]);
        out += '\n';
    }
    return out;
}

std::string labels_tsv(const DetectionTable& table) {
    std::string out = "scenario\tn\tsigma\tcovariate\tlabel\tcount\tproportion\n";
    for (const CellStats& cell : table.cells) {
        for (size_t j = 0; j < cell.label_counts.size(); ++j) {
            for (int kind = 0; kind < 6; ++kind) {
                out += std::to_string(table.scenario) + '\t' + std::to_string(cell.n) +
                       '\t' + g6(cell.sigma) + '\t' + "x" + std::to_string(j + 1) + '\t' +
                       kind_letter(static_cast<FormKind>(kind)) + std::string("\t") +
                       std::to_string(cell.label_counts[j][static_cast<size_t>(kind)]) +
                       '\t' +
                       f4(static_cast<double>(cell.label_counts[j][static_cast<size_t>(kind)]) /
                          table.replications) +
                       '\n';
            }
        }
    }
    return out;
}

std::string splits_tsv(const DetectionTable& table) {
    std::string out = "scenario\tn\tsigma\tcovariate\tcount\tmin\tq1\tmedian\tmean\tq3\tmax\n";
    for (const CellStats& cell : table.cells) {
        for (size_t j = 0; j < cell.split_points.size(); ++j) {
            std::vector<double> sorted = cell.split_points[j];
            std::sort(sorted.begin(), sorted.end());
            out += std::to_string(table.scenario) + '\t' + std::to_string(cell.n) + '\t' +
                   g6(cell.sigma) + '\t' + "x" + std::to_string(j + 1) + '\t' +
                   std::to_string(sorted.size());
            if (sorted.empty()) {
                out += "\tNA\tNA\tNA\tNA\tNA\tNA\n";
                continue;
            }
            double mean = 0.0;
            for (double v : sorted) mean += v;
            mean /= static_cast<double>(sorted.size());
            out += '\t' + g6(sorted.front()) + '\t' + g6(quantile_sorted(sorted, 0.25)) +
                   '\t' + g6(median_sorted(sorted)) + '\t' + g6(mean) + '\t' +
                   g6(quantile_sorted(sorted, 0.75)) + '\t' + g6(sorted.back()) + '\n';
        }
    }
    return out;
}

int cmd_analyze(const RunConfig& config) {
    try {
        const auto t0 = std::chrono::steady_clock::now();
        LoadResult loaded = load_csv(config.input_path, config);
        for (const std::string& note : loaded.notes) std::cerr << "note: " << note << "\n";
        const DendiConfig engine = engine_config(config);
        DendiReport report = run_dendi(loaded.data, engine);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::filesystem::path out_dir(config.output_dir);
        std::filesystem::create_directories(out_dir);
        const nlohmann::json j =
            report_to_json(report, loaded.data, config, wall, loaded.n_dropped);
        write_text_file(out_dir / "report.json", j.dump(2) + "\n");
        write_text_file(out_dir / "curves.tsv", curves_tsv(report, loaded.data));
        const std::string summary = summary_text(report, loaded.data);
        write_text_file(out_dir / "summary.txt", summary);
        std::cout << summary;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_simulate(const RunConfig& config) {
    try {
        if (config.scenario < 1 || config.scenario > 6)
            throw std::invalid_argument("--scenario must be 1..6");
        if (config.replications < 1)
            throw std::invalid_argument("--replications must be >= 1");
        std::vector<int> ns = config.ns.empty() ? std::vector<int>{200, 500, 800} : config.ns;
        std::vector<double> sigmas =
            config.sigmas.empty() ? std::vector<double>{1.0, 1.5, 2.0} : config.sigmas;

        DendiConfig engine = engine_config(config);
        const DetectionTable table = run_grid(config.scenario, ns, sigmas,
                                              config.replications, engine, config.seed);

        const std::filesystem::path out_dir(config.output_dir);
        std::filesystem::create_directories(out_dir);
        const std::string detection = detection_tsv(table);
        write_text_file(out_dir / "detection.tsv", detection);
        write_text_file(out_dir / "labels.tsv", labels_tsv(table));
        write_text_file(out_dir / "splits.tsv", splits_tsv(table));
        std::cout << detection;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dendi
