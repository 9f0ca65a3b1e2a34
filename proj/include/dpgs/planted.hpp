#pragma once

#include <cstdint>
#include <vector>

#include "dpgs/gmm_model.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

// Ground-truth mixture generator used by the bench harness: classes * k
// isotropic components with a guaranteed minimum mean separation.
struct PlantedGmmSpec {
    int classes = 1;
    int k = 1;
    int d = 1;
    Eigen::Index n_per_class = 1;
    Vector weights; // k entries on the simplex; empty means uniform

    enum class Placement {
        // Joint regular simplex over all classes * k means with edge length
        // delta_sep, centered at the origin; needs classes * k <= d + 1.
        simplex_scaled,
        // Uniform draws in the ball of mean_radius, redrawn until every
        // pairwise distance reaches delta_sep (at most 100 attempts).
        random_ball,
    };
    Placement placement = Placement::simplex_scaled;

    double delta_sep = 0.0;
    double mean_radius = 1.0;
    double sigma = 1.0; // every component is sigma^2 I
    std::uint64_t seed = 1;

    void validate() const;

    // Two classes of three well-separated components in eight dimensions,
    // 30000 rows per class; runs in seconds and keeps every cluster pure.
    static PlantedGmmSpec desk_reference();
};

struct PlantedInstance {
    std::vector<GmmModel> truths; // one per class
    EmbeddingDataset data;        // rows grouped by class, labels = class ids
    std::vector<std::int32_t> components; // generating component within the row's class
    SeparationSpec separation;            // over the joint mean set
    // Some per-component sample count fell outside its concentration window
    // (3 sqrt(3 n w (1-w) ln 2000) around n w); the draw is usable but tagged.
    bool count_flagged = false;
};

// Places the means, builds one truth model per class, and samples
// n_per_class labeled rows from each. Infeasible placements (simplex needing
// more than d + 1 points, or 100 failed ball draws) are ConfigErrors.
PlantedInstance plant_gmm(const PlantedGmmSpec& spec, RngStream& rng);

struct EstimationErrors {
    double weight_l1 = 0.0;
    double mean_l2_max = 0.0;
    double cov_frobenius_max = 0.0;
    double purity = 0.0;
    double wasserstein_bound = 0.0;
    // Component counts differ; the error fields are NaN in that case.
    bool structural_failure = false;
};

// Matched-component recovery errors of a fitted mixture against its planted
// truth. assignment holds each row's fitted cluster, component_labels its
// generating truth component; purity is the fraction of rows whose cluster
// matches back to their own component.
EstimationErrors measure_recovery(const GmmModel& truth, const GmmModel& fitted,
                                  const std::vector<std::int32_t>& assignment,
                                  const std::vector<std::int32_t>& component_labels);

} // namespace dpgs
