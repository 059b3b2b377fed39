#include "dendi/simlab.hpp"

#include <stdexcept>

#include "dendi/parallel.hpp"
#include "dendi/rng.hpp"

namespace dendi {

int scenario_covariate_count(int id) {
    if (id < 1 || id > 6) throw std::invalid_argument("scenario id must be 1..6");
    return id == 6 ? 5 : 1;
}

std::vector<std::string> scenario_targets(int id) {
    switch (id) {
        case 1: return {"x1:L"};
        case 2: return {"x1:P"};
        case 3: return {"x1:A"};
        case 4: return {"x1:M"};
        case 5: return {"x1:T"};
        case 6: return {"x1(x2):M", "x3,x4:T", "x5:N"};
    }
    throw std::invalid_argument("scenario id must be 1..6");
}

Eigen::VectorXd scenario_eta(int id, const Eigen::MatrixXd& X) {
    const auto x1 = X.col(0).array();
    switch (id) {
        case 1: return 0.5 * x1;
        case 2: return (x1 > 0.0).cast<double>();
        case 3: return 0.7 * x1 + 1.4 * (x1 > 0.0).cast<double>();
        case 4: return 0.6 * x1 + 1.2 * (x1 > 0.0).cast<double>() * x1;
        case 5:
            return 1.0 - (x1 <= 0.0).cast<double>() + 2.0 * (x1 > 0.675).cast<double>();
        case 6: {
            const auto x2 = X.col(1).array();
            const auto x3 = X.col(2).array();
            const auto x4 = X.col(3).array();
            return 0.6 * x1 + 1.2 * (x2 > 0.0).cast<double>() * x1 +
                   1.0 * (x3 > 0.0).cast<double>() +
                   2.0 * (x3 > 0.0 && x4 > 0.0).cast<double>();
        }
    }
    throw std::invalid_argument("scenario id must be 1..6");
}

Dataset generate(const ScenarioSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("scenario n must be positive");
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("scenario sigma must be positive");
    const int p = scenario_covariate_count(spec.id);

    Rng rng(spec.seed);
    Dataset data;
    data.family = Family::Gaussian;
    data.X.resize(spec.n, p);
    for (int i = 0; i < spec.n; ++i)
        for (int j = 0; j < p; ++j) data.X(i, j) = rng.next_normal();
    data.y = scenario_eta(spec.id, data.X);
    for (int i = 0; i < spec.n; ++i) data.y[i] += spec.sigma * rng.next_normal();
    data.Z.resize(spec.n, 0);
    return data;
}

RunClassification classify(const DendiReport& report, const ScenarioSpec& truth) {
    RunClassification cls;
    const size_t p = report.final_forms.size();
    cls.labels.resize(p, FormKind::Null);
    cls.partner.resize(p, -1);
    for (size_t j = 0; j < p; ++j) {
        const FormSpec& form = report.final_forms[j];
        cls.labels[j] = kind_of(form);
        if (const auto* m = std::get_if<MultiplicativeCombo>(&form))
            cls.partner[j] = m->k;
        else if (const auto* t = std::get_if<Tree>(&form))
            cls.partner[j] = t->second.k;
    }

    if (truth.id >= 1 && truth.id <= 5) {
        constexpr FormKind expected[] = {FormKind::Linear, FormKind::PiecewiseConstant,
                                         FormKind::AdditiveCombo,
                                         FormKind::MultiplicativeCombo, FormKind::Tree};
        cls.correct = {cls.labels[0] == expected[truth.id - 1]};
    } else {
        // x1 modified by x2; unordered tree pair {x3, x4}; x5 null
        const bool x1x2 =
            cls.labels[0] == FormKind::MultiplicativeCombo && cls.partner[0] == 1;
        const bool x3x4 =
            (cls.labels[2] == FormKind::Tree && cls.partner[2] == 3) ||
            (cls.labels[3] == FormKind::Tree && cls.partner[3] == 2);
        const bool x5 = cls.labels[4] == FormKind::Null;
        cls.correct = {x1x2, x3x4, x5};
    }
    return cls;
}

namespace {

// First split placed in the covariate itself, when the form has one.
std::optional<double> own_split_of(const FormSpec& form) {
    if (const auto* pc = std::get_if<PiecewiseConstant>(&form)) return pc->c;
    if (const auto* a = std::get_if<AdditiveCombo>(&form)) return a->c;
    if (const auto* t = std::get_if<Tree>(&form)) return t->c;
    if (const auto* m = std::get_if<MultiplicativeCombo>(&form)) {
        if (m->k == m->j) return m->c;
    }
    return std::nullopt;
}

}  // namespace

DetectionTable run_grid(int scenario_id, const std::vector<int>& ns,
                        const std::vector<double>& sigmas, int replications,
                        const DendiConfig& config, uint64_t base_seed) {
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (ns.empty() || sigmas.empty())
        throw std::invalid_argument("need at least one n and one sigma");

    const int p = scenario_covariate_count(scenario_id);
    DetectionTable table;
    table.scenario = scenario_id;
    table.replications = replications;
    table.targets = scenario_targets(scenario_id);

    struct Cell {
        int n;
        double sigma;
    };
    std::vector<Cell> cells;
    for (int n : ns)
        for (double sigma : sigmas) cells.push_back({n, sigma});

    struct RepOutcome {
        RunClassification cls;
        std::vector<std::optional<double>> splits;
    };
    const int total = static_cast<int>(cells.size()) * replications;
    std::vector<RepOutcome> outcomes(static_cast<size_t>(total));

    DendiConfig rep_config = config;
    rep_config.workers = 1;

    parallel_for(total, config.workers, [&](int t) {
        const Cell& cell = cells[static_cast<size_t>(t / replications)];
        const int rep = t % replications;
        uint64_t seed = derive_seed(base_seed, static_cast<uint64_t>(scenario_id));
        seed = derive_seed(seed, static_cast<uint64_t>(cell.n));
        seed = derive_seed(seed, double_bits(cell.sigma));
        seed = derive_seed(seed, static_cast<uint64_t>(rep));

        const ScenarioSpec spec{scenario_id, cell.n, cell.sigma, seed};
        const Dataset data = generate(spec);
        const DendiReport report = run_dendi(data, rep_config);

        RepOutcome& out = outcomes[static_cast<size_t>(t)];
        out.cls = classify(report, spec);
        out.splits.reserve(report.final_forms.size());
        for (const FormSpec& f : report.final_forms)
            out.splits.push_back(own_split_of(f));
    });

    for (size_t c = 0; c < cells.size(); ++c) {
        CellStats stats;
        stats.n = cells[c].n;
        stats.sigma = cells[c].sigma;
        stats.detection.assign(table.targets.size(), 0.0);
        stats.label_counts.assign(static_cast<size_t>(p), {0, 0, 0, 0, 0, 0});
        stats.split_points.assign(static_cast<size_t>(p), {});
        for (int rep = 0; rep < replications; ++rep) {
            const RepOutcome& out = outcomes[c * static_cast<size_t>(replications) +
                                             static_cast<size_t>(rep)];
            for (size_t tt = 0; tt < table.targets.size(); ++tt)
                if (out.cls.correct[tt]) stats.detection[tt] += 1.0;
            for (int j = 0; j < p; ++j) {
                stats.label_counts[static_cast<size_t>(j)]
                                  [static_cast<int>(out.cls.labels[static_cast<size_t>(j)])]++;
                if (out.splits[static_cast<size_t>(j)])
                    stats.split_points[static_cast<size_t>(j)].push_back(
                        *out.splits[static_cast<size_t>(j)]);
            }
        }
        for (double& d : stats.detection) d /= replications;
        table.cells.push_back(std::move(stats));
    }
    return table;
}

}  // namespace dendi
