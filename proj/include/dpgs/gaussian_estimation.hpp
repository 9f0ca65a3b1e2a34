#pragma once

#include <optional>

#include "dpgs/budget.hpp"
#include "dpgs/covariance.hpp"
#include "dpgs/dataset.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

struct EstimatorConfig {
    // Deviation clipping radius for the mean stage. Deviations are taken
    // about the supplied (already released) center, so this must cover the
    // center's own error plus the point spread.
    double clip_radius = 1.0;

    // Deviation clipping radius for the covariance stage, taken about the
    // much tighter dp_mean output; 0 means "use clip_radius".
    double cov_clip_radius = 0.0;

    CovarianceModel covariance_model = CovarianceModel::diagonal;
    double variance_floor = 1e-6;

    double cov_clip() const { return cov_clip_radius > 0.0 ? cov_clip_radius : clip_radius; }
    void validate() const;
};

struct MeanEstimate {
    Vector mean;
    // Laplace count released next to the sum; downstream covariance reuses it
    // so the denominator is only bought once.
    double noisy_count = 0.0;
    bool degenerate = false; // empty cluster: mean fell back to the center
};

// DP mean of a cluster about a public center: deviations are clipped to
// cfg.clip_radius, their sum released with the Gaussian mechanism
// (l2 sensitivity = clip_radius), the count with the Laplace mechanism
// (l1 sensitivity = 1), epsilon split 4:1 sum:count with all delta on the
// Gaussian. mean = center + noisy_sum / max(1, noisy_count). Non-private
// budgets give the exact clipped-deviation mean.
MeanEstimate dp_mean(const EmbeddingDataset& cluster, const Vector& center,
                     const EstimatorConfig& cfg, const PrivacyBudget& budget, RngStream& rng);

struct CovarianceEstimate {
    Covariance covariance;
    bool degenerate = false; // empty cluster: isotropic floor
};

// DP covariance of a cluster about a released mean. Deviations are clipped to
// cfg.cov_clip(). Diagonal model: one Gaussian release of the d-vector of
// squared-deviation sums (l2 sensitivity = clip^2), entries floored at
// cfg.variance_floor. Full model: Gaussian release of the outer-product sum
// in Frobenius norm (sensitivity clip^2), symmetrized, eigenvalues clamped to
// the floor. When shared_noisy_count is given the whole budget funds the
// Gaussian release; otherwise a count is bought here with the same 4:1 split.
CovarianceEstimate dp_covariance(const EmbeddingDataset& cluster, const Vector& mean_estimate,
                                 const EstimatorConfig& cfg, const PrivacyBudget& budget,
                                 RngStream& rng,
                                 std::optional<double> shared_noisy_count = std::nullopt);

// Mixture weights from noisy counts: negatives clamp to zero, an all-zero
// vector falls back to uniform, then the result is normalized.
Vector dp_weights(const Vector& noisy_counts);

} // namespace dpgs
