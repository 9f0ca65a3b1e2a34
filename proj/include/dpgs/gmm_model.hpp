#pragma once

#include <cstdint>
#include <vector>

#include "dpgs/covariance.hpp"
#include "dpgs/dataset.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

// k-component Gaussian mixture over R^d.
struct GmmModel {
    Vector weights;                       // k, nonnegative, sums to 1
    Matrix means;                         // k x d
    std::vector<Covariance> covariances;  // k entries of dimension d
    std::vector<std::uint8_t> degenerate; // optional per-component fit flags (empty cluster)

    Eigen::Index components() const { return means.rows(); }
    Eigen::Index dim() const { return means.cols(); }

    // Throws ContractError on shape mismatch, non-finite values, negative
    // weights, or weights that miss 1 by more than 1e-9.
    void validate() const;
};

// Geometry summary of a reference mixture; feeds the mixture distance bound.
struct SeparationSpec {
    double delta_sep = 0.0;     // min pairwise mean distance
    double sigma_max = 0.0;     // largest component scale, sup_i ||Sigma_i||_2^(1/2)
    double mean_diameter = 0.0; // max pairwise mean distance
    double w_min = 0.0;         // smallest component weight

    // Positive scales and weight, delta_sep <= mean_diameter, w_min <= 1.
    // Single-component mixtures carry zero pairwise distances.
    void validate() const;

    static SeparationSpec from_model(const GmmModel& model);
};

// Draws m rows; the component index comes from one inverse-CDF lookup over
// the weights, then x = mu + sqrt(Sigma) g with g standard normal.
EmbeddingDataset sample_gmm(const GmmModel& model, Eigen::Index m, RngStream& rng);

// Same draw, also reporting the generating component of each row.
EmbeddingDataset sample_gmm(const GmmModel& model, Eigen::Index m, RngStream& rng,
                            std::vector<std::int32_t>& components_out);

} // namespace dpgs
