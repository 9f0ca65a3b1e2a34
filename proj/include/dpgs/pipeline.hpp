#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpgs/budget.hpp"
#include "dpgs/dataset.hpp"
#include "dpgs/gaussian_estimation.hpp"
#include "dpgs/gmm_model.hpp"
#include "dpgs/kmeans.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

struct PipelineConfig {
    // Full per-class budget; classes are disjoint, so the whole budget is
    // available to every class under parallel composition.
    PrivacyBudget budget;

    // Five-way split: cluster, mean, covariance, vote filter, and a reserved
    // share for downstream stages this library does not run.
    std::vector<double> shares = {1.0, 1.0, 1.0, 1.0, 1.0};

    KMeansConfig kmeans;
    EstimatorConfig estimator;

    Eigen::Index generations = 0;       // m: synthetic target per class; 0 fits without sampling
    double generation_multiplier = 6.0; // sample multiplier * m, filter down
    bool filtering = true;
    double vote_threshold = 6.0;
    int jobs = 1;

    void validate() const;
};

// Private GMM fit of one unlabeled dataset: dp_kmeans on the cluster share,
// then per cluster dp_mean and dp_covariance on their shares (clusters are
// disjoint, so every cluster gets the full stage share), weights from the
// clustering's noisy counts. Exactly three ledger entries are written:
// sequential when partition_tag is empty, else parallel entries under the
// stage partitions (used by run_pipeline for per-class disjointness).
// clustering_out, when given, receives the underlying clustering.
GmmModel fit_private_gmm(const EmbeddingDataset& ds, const PipelineConfig& cfg, RngStream& rng,
                         BudgetLedger& ledger, const std::string& partition_tag = {},
                         ClusteringResult* clustering_out = nullptr);

struct FilterResult {
    EmbeddingDataset survivors; // possibly zero rows; generation order kept
    Vector noisy_votes;         // one per generated row
    bool empty_warning = false; // no row cleared the threshold
};

// Private nearest-neighbor vote filter. Each original point votes for its
// nearest generated point (lowest index on ties); per-bin Laplace noise
// (l1 sensitivity = 1, pure epsilon) is added and rows with noisy vote >=
// threshold survive in their original order. Zero survivors come back with
// empty_warning instead of an error.
FilterResult dp_filter_embeddings(const EmbeddingDataset& generated,
                                  const EmbeddingDataset& original, double threshold,
                                  const PrivacyBudget& budget, RngStream& rng);

struct ClassReport {
    std::int32_t label = 0;
    GmmModel model;
    Eigen::Index generated = 0;
    Eigen::Index survivors = 0;
    bool filter_empty = false;
    int reseeds = 0;
};

struct SyntheticReport {
    EmbeddingDataset synthetic; // labeled with class ids; zero rows possible when filtering empties every class
    std::vector<ClassReport> classes;
    BudgetLedger ledger;
    std::uint64_t seed = 0;
};

// Labeled end-to-end run: splits by class, fits one private GMM per class
// (parallel composition across the disjoint classes), samples
// generation_multiplier * generations rows per class, optionally filters them
// against the class's original rows on the filter share, and reports models,
// counts and the audited ledger. Unused shares are still recorded so the
// ledger composes to exactly the declared budget. Classes must cover
// 0..num_classes-1; a missing class is a ContractError naming it.
SyntheticReport run_pipeline(const EmbeddingDataset& labeled, const PipelineConfig& cfg,
                             RngStream& rng);

} // namespace dpgs
