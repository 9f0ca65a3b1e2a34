#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dpgs/budget.hpp"
#include "dpgs/dataset.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

// Black-box clustering quality promise: cost <= zeta * OPT + eta.
struct ApproxGuarantee {
    double zeta = 1.0;
    double eta = 0.0;

    void validate() const;
};

struct KMeansConfig {
    int k = 1;
    double clip_radius = 1.0;
    int lloyd_iterations = 5;

    enum class Init {
        // k centers uniform in the clip ball; consumes no budget.
        random_from_ball,
        // Private runs: oversample * k uniform candidates share the usual
        // per-iteration releases, then the k with the best noisy support
        // survive a count-weighted farthest-point pruning. Non-private runs:
        // distance-squared seeding on the data.
        noisy_sample,
    };
    Init init = Init::random_from_ball;

    // Within one iteration, epsilon goes to noisy sums vs noisy counts at
    // this ratio (delta all to the Gaussian sums; counts are pure Laplace).
    double sum_count_ratio = 4.0;

    // noisy_sample candidates per requested center.
    int oversample = 8;

    // Independent runs keeping the lowest exact cost; non-private only.
    int restarts = 1;

    void validate() const;
};

struct ClusteringResult {
    Matrix centers;                       // k x d, inside the clip ball
    Vector noisy_counts;                  // k, last released count per cluster
    std::vector<std::int32_t> assignment; // exact nearest final center per row
    int reseeds = 0;                      // empty-cluster reseed events
};

// Exact nearest-center assignment (lowest index wins ties) and per-center
// occupancy counts. No noise.
std::pair<std::vector<std::int32_t>, Vector> assign_and_count(const EmbeddingDataset& ds,
                                                              const Matrix& centers);

// Noisy Lloyd clustering. Points are clipped to the l2 ball of
// cfg.clip_radius about the origin; each of the T iterations spends
// (epsilon/T, delta/T) on one Gaussian release of the per-cluster clipped
// sums (l2 sensitivity = clip_radius) and one Laplace release of the
// per-cluster counts (l1 sensitivity = 1), epsilon split sums:counts at
// cfg.sum_count_ratio. Clusters whose noisy count drops below 1/2 are
// re-seeded uniformly in the clip ball (counted in ClusteringResult.reseeds).
// A non-private budget turns this into exact Lloyd. Throws ContractError when
// k > n; restarts > 1 with a finite budget is a ConfigError.
ClusteringResult dp_kmeans(const EmbeddingDataset& ds, const KMeansConfig& cfg,
                           const PrivacyBudget& budget, RngStream& rng);

// Exact clustering cost: sum of squared distances to the assigned center.
double kmeans_cost(const Matrix& points, const Matrix& centers,
                   const std::vector<std::int32_t>& assignment);

} // namespace dpgs
