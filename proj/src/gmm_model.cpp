#include "dpgs/gmm_model.hpp"

#include <cmath>

#include "dpgs/errors.hpp"

namespace dpgs {

void GmmModel::validate() const {
    Eigen::Index k = components();
    if (k < 1 || dim() < 1) throw ContractError("GmmModel: needs at least one component");
    if (weights.size() != k) throw ContractError("GmmModel: weight count != component count");
    if (static_cast<Eigen::Index>(covariances.size()) != k)
        throw ContractError("GmmModel: covariance count != component count");
    if (!weights.allFinite() || (weights.array() < 0.0).any())
        throw ContractError("GmmModel: weights must be finite and nonnegative");
    if (std::abs(weights.sum() - 1.0) > 1e-9)
        throw ContractError("GmmModel: weights must sum to 1");
    if (!means.allFinite()) throw ContractError("GmmModel: means must be finite");
    for (const auto& c : covariances) {
        c.validate();
        if (c.dim() != dim()) throw ContractError("GmmModel: covariance dimension mismatch");
    }
    if (!degenerate.empty() && static_cast<Eigen::Index>(degenerate.size()) != k)
        throw ContractError("GmmModel: degenerate flag count != component count");
}

void SeparationSpec::validate() const {
    if (!(sigma_max > 0.0)) throw ContractError("SeparationSpec: sigma_max must be positive");
    if (!(w_min > 0.0 && w_min <= 1.0))
        throw ContractError("SeparationSpec: w_min must lie in (0, 1]");
    if (delta_sep < 0.0 || mean_diameter < 0.0)
        throw ContractError("SeparationSpec: distances must be nonnegative");
    if (delta_sep > mean_diameter + 1e-12 * (1.0 + mean_diameter))
        throw ContractError("SeparationSpec: delta_sep cannot exceed mean_diameter");
}

SeparationSpec SeparationSpec::from_model(const GmmModel& model) {
    model.validate();
    SeparationSpec s;
    Eigen::Index k = model.components();
    double min_d = 0.0, max_d = 0.0;
    bool first = true;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = i + 1; j < k; ++j) {
            double d = (model.means.row(i) - model.means.row(j)).norm();
            min_d = first ? d : std::min(min_d, d);
            max_d = std::max(max_d, d);
            first = false;
        }
    }
    s.delta_sep = min_d;
    s.mean_diameter = max_d;
    s.w_min = model.weights.minCoeff();
    double var = 0.0;
    for (const auto& c : model.covariances) var = std::max(var, c.max_eigenvalue());
    s.sigma_max = std::sqrt(var);
    s.validate();
    return s;
}

namespace {

Eigen::Index pick_component(const Vector& weights, double u) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
        acc += weights[j];
        if (u < acc) return j;
    }
    return weights.size() - 1;
}

} // namespace

EmbeddingDataset sample_gmm(const GmmModel& model, Eigen::Index m, RngStream& rng,
                            std::vector<std::int32_t>& components_out) {
    model.validate();
    if (m < 1) throw ContractError("sample_gmm: m must be positive");

    Eigen::Index d = model.dim();
    std::vector<Matrix> transforms;
    transforms.reserve(static_cast<std::size_t>(model.components()));
    for (const auto& c : model.covariances) transforms.push_back(c.sqrt().to_matrix());

    EmbeddingDataset out;
    out.points.resize(m, d);
    components_out.assign(static_cast<std::size_t>(m), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index j = pick_component(model.weights, rng.uniform01());
        components_out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(j);
        Vector g = rng.normal_vector(d);
        out.points.row(i) =
            model.means.row(j) + (transforms[static_cast<std::size_t>(j)] * g).transpose();
    }
    return out;
}

EmbeddingDataset sample_gmm(const GmmModel& model, Eigen::Index m, RngStream& rng) {
    std::vector<std::int32_t> ignored;
    return sample_gmm(model, m, rng, ignored);
}

} // namespace dpgs
