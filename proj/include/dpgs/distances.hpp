#pragma once

#include <vector>

#include "dpgs/gmm_model.hpp"

namespace dpgs {

// 2-Wasserstein distance between Gaussians,
//   W2^2 = |mu1 - mu2|^2 + ||Sigma1^(1/2) - Sigma2^(1/2)||_F^2,
// exact whenever the covariances commute (diagonal models always do); the
// same square-root formula is applied in the full case.
double w2_gaussian(const Vector& mu1, const Covariance& c1, const Vector& mu2,
                   const Covariance& c2);

// Greedy min-cost matching of estimate components onto truth components by
// mean distance: repeatedly takes the globally closest unmatched pair.
// Returns match[i] = estimate index assigned to truth component i.
// Component counts must agree.
std::vector<Eigen::Index> match_components(const GmmModel& truth, const GmmModel& estimate);

// Closed-form upper bound on W_z^z between a reference mixture and an
// estimate of it, built from the matched-component errors:
//   gamma = l1 weight error, alpha_mean = max matched mean distance,
//   alpha_cov = max matched covariance Frobenius error,
//   R = mean diameter, sigma = sep.sigma_max:
//   2^(3z/2-2) gamma R^z + 2^(5z/2-2) gamma d^(z/2) sigma^z
//     + 2^(3z/2-2) alpha_mean^z + 2^(3z/2-2) d^(z/4) alpha_cov^(z/2).
// Identical models give exactly zero. Requires z >= 1 and matching component
// counts.
double gmm_wasserstein_bound(const GmmModel& truth, const GmmModel& estimate,
                             const SeparationSpec& sep, double z);

// Pinsker bound on total variation between two Gaussians via the closed-form
// KL divergence, clamped to [0, 1]. Both covariances must dominate
// sigma_min^2 I; sigma_min must be positive.
double tv_bound_gaussians(const Vector& mu1, const Covariance& c1, const Vector& mu2,
                          const Covariance& c2, double sigma_min);

} // namespace dpgs
