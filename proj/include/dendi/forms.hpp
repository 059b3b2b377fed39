#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dendi/glm.hpp"

namespace dendi {

// ---------------------------------------------------------------------------
// Predictor forms. Each alternative describes how one covariate enters the
// linear predictor; build_design turns a form plus adjustment terms into
// design-matrix columns.
// ---------------------------------------------------------------------------

enum class Node { Left, Right };

struct NullForm {};

struct Linear {
    int j;
};

// gamma * I(x_j > c)
struct PiecewiseConstant {
    int j;
    double c;
};

// beta * x_j + gamma * I(x_j > c): a structural break in the intercept.
struct AdditiveCombo {
    int j;
    double c;
};

// Varying slope of x_j. k == j gives the continuous hinge
// beta1 * x_j + beta2 * I(x_j > c)(x_j - c); k != j gives the interaction
// beta1 * x_j + beta2 * I(x_k > c) x_j with modifier x_k.
struct MultiplicativeCombo {
    int j;
    int k;
    double c;
};

struct SecondSplit {
    Node node;  // which child of the first split is divided again
    int k;      // split variable of the second split
    double c2;
};

// Two tree splits: first in x_j at c, second inside one node. For k == j the
// constraints c2 < c (left) / c2 > c (right) hold by construction.
struct Tree {
    int j;
    double c;
    SecondSplit second;
};

using FormSpec = std::variant<NullForm, Linear, PiecewiseConstant, AdditiveCombo,
                              MultiplicativeCombo, Tree>;

enum class FormKind { Null = 0, Linear, PiecewiseConstant, AdditiveCombo,
                      MultiplicativeCombo, Tree };

FormKind kind_of(const FormSpec& form);
char kind_letter(FormKind kind);  // N L P A M T
FormKind kind_from_letter(char letter);
int covariate_of(const FormSpec& form);  // -1 for NullForm
bool is_null(const FormSpec& form);

// Human-readable description, e.g. "piecewise constant with split at 0.53".
std::string describe(const FormSpec& form, const Dataset& data);
// Compact machine tag, e.g. "M(x1|x2@0.53)".
std::string form_tag(const FormSpec& form, const Dataset& data);

// ---------------------------------------------------------------------------

struct SplitGrid {
    int variable;
    std::vector<double> thresholds;  // ascending, admissibility-screened
};

struct SearchCandidate {
    FormSpec form;
    double deviance;  // +inf when the candidate was skipped as degenerate
};

struct SearchResult {
    FormSpec best_form;
    FitResult fit;
    std::vector<SearchCandidate> trace;
};

// Columns: intercept | form columns | adjustment-form columns | confounders.
// Throws DegenerateColumnError if a constructed column is constant (only
// checked for n > 1; single-row designs are built for held-out scoring).
DesignMatrix build_design(const FormSpec& form, const Dataset& data,
                          std::span<const FormSpec> adjust = {});

// Candidate thresholds at the empirical quantiles i/(grid_size+1),
// i = 1..grid_size (lower-interpolation order statistic), deduplicated, and
// screened so both sides keep at least min_node observations.
SplitGrid make_grid(const Dataset& data, int j, int grid_size, int min_node);
SplitGrid make_grid_values(const Eigen::VectorXd& values, int variable, int grid_size,
                           int min_node);

// Fits the template at every grid threshold and returns the deviance argmin;
// ties break toward the smaller threshold. The template's split value is
// ignored. Degenerate candidates are recorded with deviance +inf.
SearchResult search_single_split(const FormSpec& form_template, const Dataset& data,
                                 std::span<const FormSpec> adjust, const SplitGrid& grid,
                                 Family family);

// Second-split search for the tree form: candidates range over
// variable x node x admissible node-restricted thresholds, with same-variable
// candidates constrained to c2 < c (left) / c2 > c (right). Ties break by
// smaller variable, left node first, then smaller threshold.
SearchResult search_second_split(const PiecewiseConstant& base, const Dataset& data,
                                 std::span<const FormSpec> adjust,
                                 std::span<const int> candidate_vars, int grid_size,
                                 int min_node, Family family);

}  // namespace dendi
