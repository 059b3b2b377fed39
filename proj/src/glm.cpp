#include "dendi/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dendi {

namespace {

constexpr double kMeanClamp = 1e-12;        // bernoulli mean guard
constexpr double kDispersionFloor = 1e-12;  // keeps log-densities finite when RSS = 0
constexpr double kPivotThreshold = 1e-10;
constexpr double kIrlsTol = 1e-8;
constexpr int kMaxIterations = 50;

double logistic(double eta) {
    if (eta >= 0.0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

}  // namespace

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Gaussian: return "gaussian";
        case Family::Bernoulli: return "binomial";
        case Family::Poisson: return "poisson";
    }
    return "unknown";
}

Family family_from_name(std::string_view name) {
    if (name == "gaussian" || name == "normal") return Family::Gaussian;
    if (name == "binomial" || name == "bernoulli" || name == "logistic")
        return Family::Bernoulli;
    if (name == "poisson") return Family::Poisson;
    throw std::invalid_argument("unknown family: " + std::string(name));
}

double link_of(Family f, double mu) {
    switch (f) {
        case Family::Gaussian: return mu;
        case Family::Bernoulli: return std::log(mu / (1.0 - mu));
        case Family::Poisson: return std::log(mu);
    }
    return mu;
}

double inverse_link(Family f, double eta) {
    switch (f) {
        case Family::Gaussian: return eta;
        case Family::Bernoulli: return logistic(eta);
        case Family::Poisson: return std::exp(eta);
    }
    return eta;
}

double per_obs_loglik(Family f, double y, double eta, double dispersion) {
    switch (f) {
        case Family::Gaussian: {
            const double phi = std::max(dispersion, kDispersionFloor);
            const double r = y - eta;
            return -0.5 * (std::log(2.0 * M_PI * phi) + r * r / phi);
        }
        case Family::Bernoulli: {
            const double mu =
                std::clamp(logistic(eta), kMeanClamp, 1.0 - kMeanClamp);
            return y * std::log(mu) + (1.0 - y) * std::log(1.0 - mu);
        }
        case Family::Poisson: {
            return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
        }
    }
    return 0.0;
}

std::string Dataset::x_name(int j) const {
    if (j >= 0 && j < static_cast<int>(x_names.size())) return x_names[j];
    return "x" + std::to_string(j + 1);
}

std::string Dataset::z_name(int k) const {
    if (k >= 0 && k < static_cast<int>(z_names.size())) return z_names[k];
    return "z" + std::to_string(k + 1);
}

void validate_dataset(const Dataset& data) {
    const int n = data.n();
    if (n == 0) throw std::invalid_argument("dataset is empty");
    if (data.X.rows() != n || (data.q() > 0 && data.Z.rows() != n))
        throw std::invalid_argument("outcome/covariate/confounder row counts differ");
    if (!data.y.allFinite() || !data.X.allFinite() ||
        (data.q() > 0 && !data.Z.allFinite()))
        throw std::invalid_argument("dataset contains missing or non-finite values");
    if (n < 2 * (data.q() + 6))
        throw std::invalid_argument(
            "too few observations: need n >= 2(q + 6) = " +
            std::to_string(2 * (data.q() + 6)) + ", have " + std::to_string(n));
    if (data.family == Family::Bernoulli) {
        for (int i = 0; i < n; ++i) {
            if (data.y[i] != 0.0 && data.y[i] != 1.0)
                throw std::invalid_argument(
                    "binomial outcome must be 0/1, found " + std::to_string(data.y[i]));
        }
    } else if (data.family == Family::Poisson) {
        for (int i = 0; i < n; ++i) {
            if (data.y[i] < 0.0 || data.y[i] != std::floor(data.y[i]))
                throw std::invalid_argument(
                    "poisson outcome must be a nonnegative integer, found " +
                    std::to_string(data.y[i]));
        }
    }
}

Dataset remove_row(const Dataset& data, int i) {
    const int n = data.n();
    Dataset out;
    out.family = data.family;
    out.x_names = data.x_names;
    out.z_names = data.z_names;
    out.y.resize(n - 1);
    out.y.head(i) = data.y.head(i);
    out.y.tail(n - 1 - i) = data.y.tail(n - 1 - i);
    out.X.resize(n - 1, data.X.cols());
    out.X.topRows(i) = data.X.topRows(i);
    out.X.bottomRows(n - 1 - i) = data.X.bottomRows(n - 1 - i);
    out.Z.resize(n - 1, data.Z.cols());
    if (data.q() > 0) {
        out.Z.topRows(i) = data.Z.topRows(i);
        out.Z.bottomRows(n - 1 - i) = data.Z.bottomRows(n - 1 - i);
    }
    return out;
}

Dataset single_row(const Dataset& data, int i) {
    Dataset out;
    out.family = data.family;
    out.x_names = data.x_names;
    out.z_names = data.z_names;
    out.y = data.y.segment(i, 1);
    out.X = data.X.row(i);
    out.Z.resize(1, data.Z.cols());
    if (data.q() > 0) out.Z = data.Z.row(i);
    return out;
}

namespace {

struct LoglikParts {
    Eigen::VectorXd per_obs;
    double total;
};

LoglikParts loglik_at(Family family, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                      double dispersion) {
    LoglikParts parts;
    parts.per_obs.resize(y.size());
    double total = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        parts.per_obs[i] = per_obs_loglik(family, y[i], eta[i], dispersion);
        total += parts.per_obs[i];
    }
    parts.total = total;
    return parts;
}

Eigen::VectorXd solve_weighted_ls(const Eigen::MatrixXd& design, const Eigen::VectorXd& z,
                                  const Eigen::VectorXd& sqrt_w) {
    const Eigen::MatrixXd wx = sqrt_w.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
    qr.setThreshold(kPivotThreshold);
    if (qr.rank() < design.cols())
        throw RankDeficientError("design matrix is rank deficient (rank " +
                                 std::to_string(qr.rank()) + " < " +
                                 std::to_string(design.cols()) + " columns)");
    return qr.solve((sqrt_w.array() * z.array()).matrix());
}

FitResult finish_fit(Family family, const Eigen::VectorXd& y, Eigen::VectorXd coef,
                     Eigen::VectorXd eta, bool converged, int iterations) {
    FitResult fit;
    fit.coefficients = std::move(coef);
    fit.eta = std::move(eta);
    if (family == Family::Gaussian) {
        const double rss = (y - fit.eta).squaredNorm();
        fit.dispersion = std::max(rss / static_cast<double>(y.size()), kDispersionFloor);
    } else {
        fit.dispersion = 1.0;
    }
    auto parts = loglik_at(family, y, fit.eta, fit.dispersion);
    fit.per_obs_loglik = std::move(parts.per_obs);
    fit.loglik = parts.total;
    fit.deviance = -2.0 * fit.loglik;
    fit.converged = converged;
    fit.iterations = iterations;
    return fit;
}

}  // namespace

FitResult fit_irls(const DesignMatrix& design, const Eigen::VectorXd& y, Family family) {
    const int n = static_cast<int>(y.size());
    const int m = design.cols();
    if (design.rows() != n)
        throw std::invalid_argument("design rows do not match outcome length");
    if (n < m) throw RankDeficientError("fewer observations than columns");

    if (family == Family::Gaussian) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        Eigen::VectorXd coef = solve_weighted_ls(design.values, y, ones);
        Eigen::VectorXd eta = design.values * coef;
        return finish_fit(family, y, std::move(coef), std::move(eta), true, 1);
    }

    // Working response start values follow the usual GLM initialization.
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i)
        mu[i] = family == Family::Bernoulli ? (y[i] + 0.5) / 2.0 : y[i] + 0.5;
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) eta[i] = link_of(family, mu[i]);

    Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sqrt_w(n), z(n);
    double previous_deviance = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iterations = 0;

    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        iterations = iter;
        for (int i = 0; i < n; ++i) {
            double w;
            if (family == Family::Bernoulli) {
                const double m_i = std::clamp(mu[i], 1e-10, 1.0 - 1e-10);
                w = m_i * (1.0 - m_i);
                z[i] = eta[i] + (y[i] - m_i) / w;
            } else {  // Poisson
                const double m_i = std::max(mu[i], 1e-10);
                w = m_i;
                z[i] = eta[i] + (y[i] - m_i) / m_i;
            }
            if (!std::isfinite(w) || !std::isfinite(z[i]) || w <= 0.0)
                throw NonFiniteWeightsError("non-finite IRLS weights (separation or overflow)");
            sqrt_w[i] = std::sqrt(w);
        }
        coef = solve_weighted_ls(design.values, z, sqrt_w);
        eta = design.values * coef;
        if (!eta.allFinite())
            throw NonFiniteWeightsError("non-finite linear predictor");
        for (int i = 0; i < n; ++i) mu[i] = inverse_link(family, eta[i]);

        double deviance = 0.0;
        for (int i = 0; i < n; ++i)
            deviance -= 2.0 * per_obs_loglik(family, y[i], eta[i], 1.0);
        if (iter > 1) {
            const double change =
                std::abs(deviance - previous_deviance) / (0.1 + std::abs(deviance));
            if (change < kIrlsTol) {
                converged = true;
                break;
            }
        }
        previous_deviance = deviance;
    }

    return finish_fit(family, y, std::move(coef), std::move(eta), converged, iterations);
}

double deviance_of(const FitResult& fit) { return -2.0 * fit.loglik; }

}  // namespace dendi
