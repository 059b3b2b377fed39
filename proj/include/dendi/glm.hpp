#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "dendi/errors.hpp"

namespace dendi {

enum class Family { Gaussian, Bernoulli, Poisson };

std::string_view family_name(Family f);
// Accepts "gaussian", "binomial"/"bernoulli", "poisson".
Family family_from_name(std::string_view name);

double link_of(Family f, double mu);
double inverse_link(Family f, double eta);

// Log-density of one observation at linear predictor eta. The bernoulli
// mean is clamped to [1e-12, 1-1e-12] so quasi-separated fits still yield
// finite cross-validation scores.
double per_obs_loglik(Family f, double y, double eta, double dispersion);

// The unit every fit consumes: outcome, covariates, always-adjusted
// confounders and the outcome family. Z may have zero columns.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;  // n x p
    Eigen::MatrixXd Z;  // n x q
    Family family = Family::Gaussian;
    std::vector<std::string> x_names;  // optional; defaults to x1..xp
    std::vector<std::string> z_names;

    int n() const { return static_cast<int>(y.size()); }
    int p() const { return static_cast<int>(X.cols()); }
    int q() const { return static_cast<int>(Z.cols()); }
    std::string x_name(int j) const;
    std::string z_name(int k) const;
};

// Pipeline-entry validation: finite values, outcome domain per family,
// n >= 2(q + 6) so every candidate form stays estimable.
void validate_dataset(const Dataset& data);

Dataset remove_row(const Dataset& data, int i);
Dataset single_row(const Dataset& data, int i);

struct DesignMatrix {
    Eigen::MatrixXd values;                  // n x m, first column all ones
    std::vector<std::string> column_labels;  // size m

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
};

struct FitResult {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd eta;
    Eigen::VectorXd per_obs_loglik;
    double loglik = 0.0;
    double deviance = 0.0;  // -2 * loglik
    double dispersion = 1.0;
    bool converged = false;
    int iterations = 0;
};

// Maximum-likelihood fit by iteratively reweighted least squares.
// Gaussian-identity solves in a single step and equals ordinary least
// squares; the other families iterate until the relative deviance change
// drops below 1e-8 (at most 50 iterations). Rank deficiency is detected by
// a column-pivoted QR with relative pivot threshold 1e-10 and reported as
// an error: a degenerate candidate must be rejected, not repaired.
FitResult fit_irls(const DesignMatrix& design, const Eigen::VectorXd& y, Family family);

double deviance_of(const FitResult& fit);

}  // namespace dendi
