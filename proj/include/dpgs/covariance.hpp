#pragma once

#include "dpgs/dataset.hpp"

namespace dpgs {

enum class CovarianceModel { diagonal, full };

// Component covariance in a diagonal or full symmetric PSD representation.
// Entries are kept positive by construction in the fitting code (variance
// floor); the distance helpers below work across mixed representations by
// densifying the diagonal side.
struct Covariance {
    CovarianceModel model = CovarianceModel::diagonal;
    Vector diag;   // diagonal model: d per-coordinate variances
    Matrix dense;  // full model: d x d symmetric PSD

    static Covariance diagonal(Vector variances);
    static Covariance full(Matrix m);

    Eigen::Index dim() const;
    void validate() const;

    Matrix to_matrix() const;
    Vector diagonal_entries() const;
    double trace() const;
    double max_eigenvalue() const;

    // PSD square root, same representation.
    Covariance sqrt() const;

    // ||A - B||_F, densifying when the representations differ.
    double frobenius_distance(const Covariance& other) const;
};

} // namespace dpgs
