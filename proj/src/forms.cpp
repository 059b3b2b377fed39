#include "dendi/forms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace dendi {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct LabeledColumn {
    std::string label;
    Eigen::VectorXd values;
};

Eigen::VectorXd indicator_gt(const Eigen::VectorXd& x, double c) {
    return (x.array() > c).cast<double>();
}

// Column recipes for one form. The intercept and confounders are appended
// by build_design, not here.
void append_form_columns(const FormSpec& form, const Dataset& data,
                         std::vector<LabeledColumn>& cols) {
    const Eigen::MatrixXd& X = data.X;
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, NullForm>) {
                // no columns
            } else if constexpr (std::is_same_v<T, Linear>) {
                cols.push_back({data.x_name(f.j), X.col(f.j)});
            } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
                cols.push_back({"I(" + data.x_name(f.j) + ">" + num(f.c) + ")",
                                indicator_gt(X.col(f.j), f.c)});
            } else if constexpr (std::is_same_v<T, AdditiveCombo>) {
                cols.push_back({data.x_name(f.j), X.col(f.j)});
                cols.push_back({"I(" + data.x_name(f.j) + ">" + num(f.c) + ")",
                                indicator_gt(X.col(f.j), f.c)});
            } else if constexpr (std::is_same_v<T, MultiplicativeCombo>) {
                cols.push_back({data.x_name(f.j), X.col(f.j)});
                if (f.k == f.j) {
                    // hinge term keeps the fitted predictor continuous at c
                    Eigen::VectorXd hinge =
                        indicator_gt(X.col(f.j), f.c).array() * (X.col(f.j).array() - f.c);
                    cols.push_back({"I(" + data.x_name(f.j) + ">" + num(f.c) + ")*(" +
                                        data.x_name(f.j) + "-" + num(f.c) + ")",
                                    std::move(hinge)});
                } else {
                    Eigen::VectorXd inter =
                        indicator_gt(X.col(f.k), f.c).array() * X.col(f.j).array();
                    cols.push_back({"I(" + data.x_name(f.k) + ">" + num(f.c) + ")*" +
                                        data.x_name(f.j),
                                    std::move(inter)});
                }
            } else if constexpr (std::is_same_v<T, Tree>) {
                const Eigen::VectorXd xj = X.col(f.j);
                const Eigen::VectorXd xk = X.col(f.second.k);
                const double c = f.c;
                const double c2 = f.second.c2;
                const std::string nj = data.x_name(f.j);
                const std::string nk = data.x_name(f.second.k);
                if (f.second.node == Node::Left) {
                    cols.push_back({"I(" + nj + ">" + num(c) + ")", indicator_gt(xj, c)});
                    Eigen::VectorXd second =
                        (xj.array() <= c && xk.array() > c2).cast<double>();
                    cols.push_back({"I(" + nj + "<=" + num(c) + " & " + nk + ">" +
                                        num(c2) + ")",
                                    std::move(second)});
                } else {
                    cols.push_back({"I(" + nj + "<=" + num(c) + ")",
                                    (xj.array() <= c).cast<double>()});
                    Eigen::VectorXd second =
                        (xj.array() > c && xk.array() > c2).cast<double>();
                    cols.push_back({"I(" + nj + ">" + num(c) + " & " + nk + ">" +
                                        num(c2) + ")",
                                    std::move(second)});
                }
            }
        },
        form);
}

bool column_is_constant(const Eigen::VectorXd& v) {
    return (v.array() == v[0]).all();
}

}  // namespace

FormKind kind_of(const FormSpec& form) {
    return static_cast<FormKind>(form.index());
}

char kind_letter(FormKind kind) {
    constexpr char letters[] = {'N', 'L', 'P', 'A', 'M', 'T'};
    return letters[static_cast<int>(kind)];
}

FormKind kind_from_letter(char letter) {
    switch (letter) {
        case 'N': return FormKind::Null;
        case 'L': return FormKind::Linear;
        case 'P': return FormKind::PiecewiseConstant;
        case 'A': return FormKind::AdditiveCombo;
        case 'M': return FormKind::MultiplicativeCombo;
        case 'T': return FormKind::Tree;
    }
    throw std::invalid_argument("unknown form letter");
}

int covariate_of(const FormSpec& form) {
    return std::visit(
        [](const auto& f) -> int {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, NullForm>)
                return -1;
            else
                return f.j;
        },
        form);
}

bool is_null(const FormSpec& form) {
    return std::holds_alternative<NullForm>(form);
}

std::string describe(const FormSpec& form, const Dataset& data) {
    return std::visit(
        [&](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, NullForm>) {
                return "no effect detected";
            } else if constexpr (std::is_same_v<T, Linear>) {
                return "linear";
            } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
                return "piecewise constant with split at " + num(f.c);
            } else if constexpr (std::is_same_v<T, AdditiveCombo>) {
                return "linear with an intercept shift at " + num(f.c);
            } else if constexpr (std::is_same_v<T, MultiplicativeCombo>) {
                if (f.k == f.j)
                    return "linear with a slope change at " + num(f.c);
                return "linear effect modified by " + data.x_name(f.k) +
                       " (split at " + num(f.c) + ")";
            } else {
                std::string node = f.second.node == Node::Left ? "left" : "right";
                return "tree: first split at " + num(f.c) + ", second split in the " +
                       node + " node on " + data.x_name(f.second.k) + " at " +
                       num(f.second.c2);
            }
        },
        form);
}

std::string form_tag(const FormSpec& form, const Dataset& data) {
    return std::visit(
        [&](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, NullForm>) {
                return "N";
            } else if constexpr (std::is_same_v<T, Linear>) {
                return "L(" + data.x_name(f.j) + ")";
            } else if constexpr (std::is_same_v<T, PiecewiseConstant>) {
                return "P(" + data.x_name(f.j) + "@" + num(f.c) + ")";
            } else if constexpr (std::is_same_v<T, AdditiveCombo>) {
                return "A(" + data.x_name(f.j) + "@" + num(f.c) + ")";
            } else if constexpr (std::is_same_v<T, MultiplicativeCombo>) {
                return "M(" + data.x_name(f.j) + "|" + data.x_name(f.k) + "@" + num(f.c) +
                       ")";
            } else {
                std::string node = f.second.node == Node::Left ? "L" : "R";
                return "T(" + data.x_name(f.j) + "@" + num(f.c) + ";" + node + ":" +
                       data.x_name(f.second.k) + "@" + num(f.second.c2) + ")";
            }
        },
        form);
}

DesignMatrix build_design(const FormSpec& form, const Dataset& data,
                          std::span<const FormSpec> adjust) {
    const int n = data.n();
    std::vector<LabeledColumn> cols;
    append_form_columns(form, data, cols);
    const size_t own = cols.size();
    for (const FormSpec& a : adjust) append_form_columns(a, data, cols);

    // Drop exact duplicates among adjustment columns (shared intercepts are
    // never emitted here, so collisions are rare).
    std::vector<LabeledColumn> kept;
    kept.reserve(cols.size());
    for (size_t c = 0; c < cols.size(); ++c) {
        bool duplicate = false;
        if (c >= own) {
            for (const auto& k : kept) {
                if (k.label == cols[c].label && k.values == cols[c].values) {
                    duplicate = true;
                    break;
                }
            }
        }
        if (!duplicate) kept.push_back(std::move(cols[c]));
    }

    if (n > 1) {
        for (const auto& col : kept) {
            if (column_is_constant(col.values))
                throw DegenerateColumnError("constant design column: " + col.label);
        }
    }

    DesignMatrix design;
    design.values.resize(n, 1 + static_cast<Eigen::Index>(kept.size()) + data.q());
    design.column_labels.reserve(1 + kept.size() + static_cast<size_t>(data.q()));
    design.values.col(0).setOnes();
    design.column_labels.push_back("intercept");
    Eigen::Index c = 1;
    for (auto& col : kept) {
        design.values.col(c++) = col.values;
        design.column_labels.push_back(std::move(col.label));
    }
    for (int k = 0; k < data.q(); ++k) {
        design.values.col(c++) = data.Z.col(k);
        design.column_labels.push_back(data.z_name(k));
    }
    return design;
}

SplitGrid make_grid_values(const Eigen::VectorXd& values, int variable, int grid_size,
                           int min_node) {
    if (grid_size < 1) throw std::invalid_argument("grid_size must be >= 1");
    const int n = static_cast<int>(values.size());
    std::vector<double> sorted(values.data(), values.data() + n);
    std::sort(sorted.begin(), sorted.end());

    SplitGrid grid;
    grid.variable = variable;
    double last = std::numeric_limits<double>::quiet_NaN();
    for (int i = 1; i <= grid_size; ++i) {
        // lower-interpolation order statistic at level i/(grid_size+1)
        const long long idx =
            (static_cast<long long>(i) * n + grid_size) / (grid_size + 1) - 1;
        const double t = sorted[static_cast<size_t>(std::clamp<long long>(idx, 0, n - 1))];
        if (!grid.thresholds.empty() && t == last) continue;
        const auto below =
            std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        if (below < min_node || n - below < min_node) continue;
        grid.thresholds.push_back(t);
        last = t;
    }
    if (grid.thresholds.empty())
        throw EmptyGridError("no admissible split threshold for variable index " +
                             std::to_string(variable));
    return grid;
}

SplitGrid make_grid(const Dataset& data, int j, int grid_size, int min_node) {
    return make_grid_values(data.X.col(j), j, grid_size, min_node);
}

namespace {

FormSpec with_split(const FormSpec& form_template, double c) {
    FormSpec out = form_template;
    std::visit(
        [&](auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PiecewiseConstant> ||
                          std::is_same_v<T, AdditiveCombo> ||
                          std::is_same_v<T, MultiplicativeCombo>) {
                f.c = c;
            } else {
                throw std::invalid_argument("form template has no free split");
            }
        },
        out);
    return out;
}

int split_variable_of(const FormSpec& form_template) {
    return std::visit(
        [](const auto& f) -> int {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, PiecewiseConstant> ||
                          std::is_same_v<T, AdditiveCombo>) {
                return f.j;
            } else if constexpr (std::is_same_v<T, MultiplicativeCombo>) {
                return f.k;
            } else {
                throw std::invalid_argument("form template has no free split");
            }
        },
        form_template);
}

}  // namespace

SearchResult search_single_split(const FormSpec& form_template, const Dataset& data,
                                 std::span<const FormSpec> adjust, const SplitGrid& grid,
                                 Family family) {
    if (grid.thresholds.empty()) throw EmptyGridError("empty split grid");
    if (grid.variable != split_variable_of(form_template))
        throw std::invalid_argument("grid variable does not match the form's split variable");

    SearchResult result;
    result.trace.reserve(grid.thresholds.size());
    std::optional<double> best_deviance;
    for (double t : grid.thresholds) {
        FormSpec candidate = with_split(form_template, t);
        FitResult fit;
        try {
            DesignMatrix design = build_design(candidate, data, adjust);
            fit = fit_irls(design, data.y, family);
        } catch (const DendiError&) {
            result.trace.push_back(
                {candidate, std::numeric_limits<double>::infinity()});
            continue;
        }
        result.trace.push_back({candidate, fit.deviance});
        if (!best_deviance || fit.deviance < *best_deviance) {
            best_deviance = fit.deviance;
            result.best_form = candidate;
            result.fit = std::move(fit);
        }
    }
    if (!best_deviance)
        throw AllCandidatesDegenerateError("every split candidate was degenerate");
    return result;
}

SearchResult search_second_split(const PiecewiseConstant& base, const Dataset& data,
                                 std::span<const FormSpec> adjust,
                                 std::span<const int> candidate_vars, int grid_size,
                                 int min_node, Family family) {
    std::vector<int> vars(candidate_vars.begin(), candidate_vars.end());
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());

    std::vector<int> left_rows, right_rows;
    for (int i = 0; i < data.n(); ++i) {
        (data.X(i, base.j) <= base.c ? left_rows : right_rows).push_back(i);
    }

    SearchResult result;
    std::optional<double> best_deviance;
    for (int k : vars) {
        for (Node node : {Node::Left, Node::Right}) {
            const std::vector<int>& rows = node == Node::Left ? left_rows : right_rows;
            if (static_cast<int>(rows.size()) < 2 * min_node) continue;
            Eigen::VectorXd node_values(rows.size());
            for (size_t r = 0; r < rows.size(); ++r) node_values[static_cast<Eigen::Index>(r)] = data.X(rows[r], k);
            SplitGrid grid;
            try {
                grid = make_grid_values(node_values, k, grid_size, min_node);
            } catch (const EmptyGridError&) {
                continue;
            }
            for (double c2 : grid.thresholds) {
                if (k == base.j) {
                    // same-variable second splits must fall strictly inside
                    // the node; node-restricted grids already guarantee this
                    if (node == Node::Left && !(c2 < base.c)) continue;
                    if (node == Node::Right && !(c2 > base.c)) continue;
                }
                FormSpec candidate = Tree{base.j, base.c, SecondSplit{node, k, c2}};
                FitResult fit;
                try {
                    DesignMatrix design = build_design(candidate, data, adjust);
                    fit = fit_irls(design, data.y, family);
                } catch (const DendiError&) {
                    result.trace.push_back(
                        {candidate, std::numeric_limits<double>::infinity()});
                    continue;
                }
                result.trace.push_back({candidate, fit.deviance});
                if (!best_deviance || fit.deviance < *best_deviance) {
                    best_deviance = fit.deviance;
                    result.best_form = candidate;
                    result.fit = std::move(fit);
                }
            }
        }
    }
    if (!best_deviance)
        throw AllCandidatesDegenerateError("no admissible second split");
    return result;
}

}  // namespace dendi
