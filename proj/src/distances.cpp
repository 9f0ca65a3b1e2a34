#include "dpgs/distances.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dpgs/errors.hpp"

namespace dpgs {

double w2_gaussian(const Vector& mu1, const Covariance& c1, const Vector& mu2,
                   const Covariance& c2) {
    if (mu1.size() != mu2.size() || c1.dim() != mu1.size() || c2.dim() != mu2.size())
        throw ContractError("w2_gaussian: dimension mismatch");
    double mean_sq = (mu1 - mu2).squaredNorm();
    double cov_sq;
    if (c1.model == CovarianceModel::diagonal && c2.model == CovarianceModel::diagonal) {
        cov_sq = (c1.diag.array().sqrt() - c2.diag.array().sqrt()).matrix().squaredNorm();
    } else {
        double f = c1.sqrt().frobenius_distance(c2.sqrt());
        cov_sq = f * f;
    }
    return std::sqrt(mean_sq + cov_sq);
}

std::vector<Eigen::Index> match_components(const GmmModel& truth, const GmmModel& estimate) {
    truth.validate();
    estimate.validate();
    if (truth.components() != estimate.components())
        throw ContractError("match_components: component counts differ");
    if (truth.dim() != estimate.dim())
        throw ContractError("match_components: dimensions differ");

    Eigen::Index k = truth.components();
    Matrix cost(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            cost(i, j) = (truth.means.row(i) - estimate.means.row(j)).norm();

    std::vector<Eigen::Index> match(static_cast<std::size_t>(k), -1);
    std::vector<bool> truth_done(static_cast<std::size_t>(k), false);
    std::vector<bool> est_done(static_cast<std::size_t>(k), false);
    for (Eigen::Index round = 0; round < k; ++round) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bi = -1, bj = -1;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (truth_done[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (est_done[static_cast<std::size_t>(j)]) continue;
                if (cost(i, j) < best) {
                    best = cost(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        match[static_cast<std::size_t>(bi)] = bj;
        truth_done[static_cast<std::size_t>(bi)] = true;
        est_done[static_cast<std::size_t>(bj)] = true;
    }
    return match;
}

double gmm_wasserstein_bound(const GmmModel& truth, const GmmModel& estimate,
                             const SeparationSpec& sep, double z) {
    sep.validate();
    if (!(z >= 1.0)) throw ContractError("gmm_wasserstein_bound: z must be at least 1");
    auto match = match_components(truth, estimate);

    double gamma = 0.0, alpha_mean = 0.0, alpha_cov = 0.0;
    for (Eigen::Index i = 0; i < truth.components(); ++i) {
        Eigen::Index j = match[static_cast<std::size_t>(i)];
        gamma += std::abs(truth.weights[i] - estimate.weights[j]);
        alpha_mean = std::max(alpha_mean, (truth.means.row(i) - estimate.means.row(j)).norm());
        alpha_cov =
            std::max(alpha_cov, truth.covariances[static_cast<std::size_t>(i)].frobenius_distance(
                                    estimate.covariances[static_cast<std::size_t>(j)]));
    }

    double d = static_cast<double>(truth.dim());
    double r = sep.mean_diameter;
    double sigma = sep.sigma_max;
    return std::exp2(1.5 * z - 2.0) * gamma * std::pow(r, z) +
           std::exp2(2.5 * z - 2.0) * gamma * std::pow(d, 0.5 * z) * std::pow(sigma, z) +
           std::exp2(1.5 * z - 2.0) * std::pow(alpha_mean, z) +
           std::exp2(1.5 * z - 2.0) * std::pow(d, 0.25 * z) * std::pow(alpha_cov, 0.5 * z);
}

double tv_bound_gaussians(const Vector& mu1, const Covariance& c1, const Vector& mu2,
                          const Covariance& c2, double sigma_min) {
    if (!(sigma_min > 0.0)) throw ContractError("tv_bound_gaussians: sigma_min must be positive");
    if (mu1.size() != mu2.size() || c1.dim() != mu1.size() || c2.dim() != mu2.size())
        throw ContractError("tv_bound_gaussians: dimension mismatch");

    double floor = sigma_min * sigma_min;
    Eigen::Index d = mu1.size();
    double kl;
    if (c1.model == CovarianceModel::diagonal && c2.model == CovarianceModel::diagonal) {
        if (c1.diag.minCoeff() < floor * (1.0 - 1e-12) || c2.diag.minCoeff() < floor * (1.0 - 1e-12))
            throw ContractError("tv_bound_gaussians: covariance below sigma_min^2");
        double trace = (c1.diag.array() / c2.diag.array()).sum();
        double maha = ((mu2 - mu1).array().square() / c2.diag.array()).sum();
        double logdet = (c2.diag.array().log() - c1.diag.array().log()).sum();
        kl = 0.5 * (trace + maha - static_cast<double>(d) + logdet);
    } else {
        Eigen::MatrixXd s1 = c1.to_matrix();
        Eigen::MatrixXd s2 = c2.to_matrix();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(s1), e2(s2);
        if (e1.eigenvalues().minCoeff() < floor * (1.0 - 1e-12) ||
            e2.eigenvalues().minCoeff() < floor * (1.0 - 1e-12))
            throw ContractError("tv_bound_gaussians: covariance below sigma_min^2");
        Eigen::LLT<Eigen::MatrixXd> llt2(s2);
        double trace = llt2.solve(s1).trace();
        Eigen::VectorXd diff = mu2 - mu1;
        double maha = diff.dot(llt2.solve(diff));
        double logdet = e2.eigenvalues().array().log().sum() - e1.eigenvalues().array().log().sum();
        kl = 0.5 * (trace + maha - static_cast<double>(d) + logdet);
    }
    double tv = std::sqrt(std::max(0.0, kl) / 2.0);
    return std::min(tv, 1.0);
}

} // namespace dpgs
