#include "dpgs/covariance.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "dpgs/errors.hpp"

namespace dpgs {

Covariance Covariance::diagonal(Vector variances) {
    Covariance c;
    c.model = CovarianceModel::diagonal;
    c.diag = std::move(variances);
    c.validate();
    return c;
}

Covariance Covariance::full(Matrix m) {
    Covariance c;
    c.model = CovarianceModel::full;
    c.dense = std::move(m);
    c.validate();
    return c;
}

Eigen::Index Covariance::dim() const {
    return model == CovarianceModel::diagonal ? diag.size() : dense.rows();
}

void Covariance::validate() const {
    if (model == CovarianceModel::diagonal) {
        if (diag.size() < 1) throw ContractError("Covariance: empty diagonal");
        if (!diag.allFinite() || (diag.array() < 0.0).any())
            throw ContractError("Covariance: diagonal entries must be finite and nonnegative");
        return;
    }
    if (dense.rows() < 1 || dense.rows() != dense.cols())
        throw ContractError("Covariance: full matrix must be square and nonempty");
    if (!dense.allFinite()) throw ContractError("Covariance: entries must be finite");
    if ((dense - dense.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + dense.cwiseAbs().maxCoeff()))
        throw ContractError("Covariance: full matrix must be symmetric");
}

Matrix Covariance::to_matrix() const {
    if (model == CovarianceModel::full) return dense;
    Matrix m = Matrix::Zero(diag.size(), diag.size());
    m.diagonal() = diag;
    return m;
}

Vector Covariance::diagonal_entries() const {
    return model == CovarianceModel::diagonal ? diag : Vector(dense.diagonal());
}

double Covariance::trace() const {
    return model == CovarianceModel::diagonal ? diag.sum() : dense.trace();
}

double Covariance::max_eigenvalue() const {
    if (model == CovarianceModel::diagonal) return diag.maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    return es.eigenvalues().maxCoeff();
}

Covariance Covariance::sqrt() const {
    if (model == CovarianceModel::diagonal) {
        return Covariance::diagonal(diag.array().sqrt().matrix());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd m = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
    return Covariance::full(Matrix(0.5 * (m + m.transpose())));
}

double Covariance::frobenius_distance(const Covariance& other) const {
    if (dim() != other.dim())
        throw ContractError("Covariance: dimension mismatch in frobenius_distance");
    if (model == CovarianceModel::diagonal && other.model == CovarianceModel::diagonal)
        return (diag - other.diag).norm();
    return (to_matrix() - other.to_matrix()).norm();
}

} // namespace dpgs
