#include "dpgs/gaussian_estimation.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "dpgs/errors.hpp"
#include "dpgs/mechanisms.hpp"

namespace dpgs {

void EstimatorConfig::validate() const {
    if (!(clip_radius > 0.0)) throw ContractError("EstimatorConfig: clip_radius must be positive");
    if (cov_clip_radius < 0.0)
        throw ContractError("EstimatorConfig: cov_clip_radius must be nonnegative");
    if (!(variance_floor > 0.0))
        throw ContractError("EstimatorConfig: variance_floor must be positive");
}

namespace {

// Deviations about the center, each clipped to the l2 ball of the radius.
Matrix clipped_deviations(const Matrix& points, const Vector& center, double radius) {
    Matrix dev = points.rowwise() - center.transpose();
    for (Eigen::Index i = 0; i < dev.rows(); ++i) {
        double norm = dev.row(i).norm();
        if (norm > radius) dev.row(i) *= radius / norm;
    }
    return dev;
}

void check_cluster(const EmbeddingDataset& cluster, const Vector& center, const char* who) {
    if (cluster.rows() > 0) {
        if (!cluster.points.allFinite())
            throw ContractError(std::string(who) + ": cluster entries must be finite");
        if (cluster.dim() != center.size())
            throw ContractError(std::string(who) + ": center dimension mismatch");
    }
    if (!center.allFinite()) throw ContractError(std::string(who) + ": center must be finite");
    if (center.size() < 1) throw ContractError(std::string(who) + ": empty center");
}

} // namespace

MeanEstimate dp_mean(const EmbeddingDataset& cluster, const Vector& center,
                     const EstimatorConfig& cfg, const PrivacyBudget& budget, RngStream& rng) {
    cfg.validate();
    budget.validate();
    check_cluster(cluster, center, "dp_mean");

    if (cluster.rows() == 0) return {center, 0.0, true};

    Matrix dev = clipped_deviations(cluster.points, center, cfg.clip_radius);
    Vector sum = dev.colwise().sum();
    double count = static_cast<double>(cluster.rows());

    if (budget.is_non_private()) {
        return {center + sum / count, count, false};
    }

    PrivacyBudget sum_budget{budget.epsilon * 0.8, budget.delta};
    PrivacyBudget count_budget{budget.epsilon * 0.2, 0.0};
    Vector noisy_sum = gaussian_mechanism(sum, cfg.clip_radius, sum_budget, rng);
    double noisy_count = laplace_mechanism(count, 1.0, count_budget, rng);
    return {center + noisy_sum / std::max(1.0, noisy_count), noisy_count, false};
}

CovarianceEstimate dp_covariance(const EmbeddingDataset& cluster, const Vector& mean_estimate,
                                 const EstimatorConfig& cfg, const PrivacyBudget& budget,
                                 RngStream& rng, std::optional<double> shared_noisy_count) {
    cfg.validate();
    budget.validate();
    check_cluster(cluster, mean_estimate, "dp_covariance");

    Eigen::Index d = mean_estimate.size();
    double floor = cfg.variance_floor;
    if (cluster.rows() == 0) {
        if (cfg.covariance_model == CovarianceModel::diagonal)
            return {Covariance::diagonal(Vector::Constant(d, floor)), true};
        return {Covariance::full(Matrix(floor * Matrix::Identity(d, d))), true};
    }

    double clip = cfg.cov_clip();
    Matrix dev = clipped_deviations(cluster.points, mean_estimate, clip);
    double sensitivity = clip * clip;

    PrivacyBudget release_budget = budget;
    double denominator;
    if (budget.is_non_private()) {
        denominator = static_cast<double>(cluster.rows());
    } else if (shared_noisy_count) {
        denominator = std::max(1.0, *shared_noisy_count);
    } else {
        release_budget = {budget.epsilon * 0.8, budget.delta};
        PrivacyBudget count_budget{budget.epsilon * 0.2, 0.0};
        double noisy_count =
            laplace_mechanism(static_cast<double>(cluster.rows()), 1.0, count_budget, rng);
        denominator = std::max(1.0, noisy_count);
    }

    if (cfg.covariance_model == CovarianceModel::diagonal) {
        Vector sq_sum = dev.array().square().matrix().colwise().sum();
        Vector noisy = gaussian_mechanism(sq_sum, sensitivity, release_budget, rng);
        Vector variances = (noisy / denominator).cwiseMax(floor);
        return {Covariance::diagonal(std::move(variances)), false};
    }

    Matrix outer = dev.transpose() * dev; // d x d sum of v v^T
    Eigen::Map<Vector> flat(outer.data(), outer.size());
    Vector noisy_flat = gaussian_mechanism(flat, sensitivity, release_budget, rng);
    Eigen::Map<Matrix> noisy(noisy_flat.data(), d, d);
    Matrix sym = (noisy + noisy.transpose()) / 2.0 / denominator;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(floor);
    Eigen::MatrixXd rebuilt =
        es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    return {Covariance::full(Matrix(0.5 * (rebuilt + rebuilt.transpose()))), false};
}

Vector dp_weights(const Vector& noisy_counts) {
    if (noisy_counts.size() < 1) throw ContractError("dp_weights: empty counts");
    if (!noisy_counts.allFinite()) throw ContractError("dp_weights: counts must be finite");
    Vector w = noisy_counts.cwiseMax(0.0);
    double total = w.sum();
    if (total <= 0.0)
        return Vector::Constant(noisy_counts.size(), 1.0 / static_cast<double>(noisy_counts.size()));
    return w / total;
}

} // namespace dpgs
