#include "dpgs/planted.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dpgs/distances.hpp"
#include "dpgs/errors.hpp"

namespace dpgs {

namespace {

double min_pairwise(const Matrix& means) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < means.rows(); ++i)
        for (Eigen::Index j = i + 1; j < means.rows(); ++j)
            best = std::min(best, (means.row(i) - means.row(j)).norm());
    return best;
}

double max_pairwise(const Matrix& means) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < means.rows(); ++i)
        for (Eigen::Index j = i + 1; j < means.rows(); ++j)
            best = std::max(best, (means.row(i) - means.row(j)).norm());
    return best;
}

// m vertices with pairwise distance edge, centered at the origin, sitting in
// the first m-1 coordinates: e_1..e_{m-1} plus ((1 - sqrt(m)) / (m - 1)) * 1,
// all scaled by edge / sqrt(2).
Matrix simplex_means(int m, int d, double edge) {
    Matrix means = Matrix::Zero(m, d);
    if (m == 1) return means;
    const double scale = edge / std::sqrt(2.0);
    for (int i = 0; i + 1 < m; ++i) means(i, i) = scale;
    const double a =
        scale * (1.0 - std::sqrt(static_cast<double>(m))) / static_cast<double>(m - 1);
    for (int j = 0; j + 1 < m; ++j) means(m - 1, j) = a;
    Vector centroid = means.colwise().mean();
    means.rowwise() -= centroid.transpose();
    return means;
}

Matrix place_means(const PlantedGmmSpec& spec, RngStream& rng) {
    const int m = spec.classes * spec.k;
    if (spec.placement == PlantedGmmSpec::Placement::simplex_scaled) {
        if (m > spec.d + 1)
            throw ConfigError("plant_gmm: simplex placement of " + std::to_string(m) +
                              " means needs dimension >= " + std::to_string(m - 1));
        return simplex_means(m, spec.d, spec.delta_sep);
    }
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix means(m, spec.d);
        for (int i = 0; i < m; ++i)
            means.row(i) = rng.uniform_in_ball(spec.d, spec.mean_radius).transpose();
        if (m == 1 || min_pairwise(means) >= spec.delta_sep) return means;
    }
    throw ConfigError("plant_gmm: no ball placement reached separation " +
                      std::to_string(spec.delta_sep) + " in 100 attempts");
}

} // namespace

void PlantedGmmSpec::validate() const {
    if (classes < 1) throw ContractError("planted spec: classes must be positive");
    if (k < 1) throw ContractError("planted spec: k must be positive");
    if (d < 1) throw ContractError("planted spec: dimension must be positive");
    if (n_per_class < 1) throw ContractError("planted spec: n_per_class must be positive");
    if (weights.size() != 0) {
        if (weights.size() != k)
            throw ContractError("planted spec: weights must have k entries");
        if ((weights.array() <= 0.0).any() || !weights.allFinite())
            throw ContractError("planted spec: weights must be positive");
        if (std::abs(weights.sum() - 1.0) > 1e-9)
            throw ContractError("planted spec: weights must sum to 1");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ContractError("planted spec: sigma must be positive and finite");
    if (!(delta_sep >= 0.0) || !std::isfinite(delta_sep))
        throw ContractError("planted spec: delta_sep must be non-negative and finite");
    if (placement == Placement::random_ball && (!(mean_radius > 0.0) || !std::isfinite(mean_radius)))
        throw ContractError("planted spec: mean_radius must be positive and finite");
}

PlantedGmmSpec PlantedGmmSpec::desk_reference() {
    PlantedGmmSpec spec;
    spec.classes = 2;
    spec.k = 3;
    spec.d = 8;
    spec.n_per_class = 30000;
    spec.weights = Vector(3);
    spec.weights << 0.5, 0.3, 0.2;
    spec.sigma = 0.5;
    spec.delta_sep = 30.0 * spec.sigma * std::sqrt(8.0);
    spec.placement = Placement::simplex_scaled;
    return spec;
}

PlantedInstance plant_gmm(const PlantedGmmSpec& spec, RngStream& rng) {
    spec.validate();

    Vector weights = spec.weights;
    if (weights.size() == 0)
        weights = Vector::Constant(spec.k, 1.0 / static_cast<double>(spec.k));

    Matrix all_means = place_means(spec, rng);

    PlantedInstance out;
    out.truths.reserve(static_cast<std::size_t>(spec.classes));
    const auto n = spec.n_per_class;
    out.data.points.resize(static_cast<Eigen::Index>(spec.classes) * n, spec.d);
    out.data.labels.emplace(static_cast<std::size_t>(out.data.points.rows()));
    out.components.resize(static_cast<std::size_t>(out.data.points.rows()));

    const double window_ln = 3.0 * std::log(2.0 / 1e-3);
    for (int ci = 0; ci < spec.classes; ++ci) {
        GmmModel truth;
        truth.weights = weights;
        truth.means = all_means.middleRows(static_cast<Eigen::Index>(ci) * spec.k, spec.k);
        truth.covariances.assign(
            static_cast<std::size_t>(spec.k),
            Covariance::diagonal(Vector::Constant(spec.d, spec.sigma * spec.sigma)));
        truth.validate();

        std::vector<std::int32_t> comps;
        EmbeddingDataset draw = sample_gmm(truth, n, rng, comps);

        Vector counts = Vector::Zero(spec.k);
        for (auto c : comps) counts[c] += 1.0;
        for (int j = 0; j < spec.k; ++j) {
            const double expected = static_cast<double>(n) * weights[j];
            const double window =
                3.0 * std::sqrt(static_cast<double>(n) * weights[j] * (1.0 - weights[j]) *
                                window_ln);
            if (std::abs(counts[j] - expected) > window) out.count_flagged = true;
        }

        const auto base = static_cast<Eigen::Index>(ci) * n;
        out.data.points.middleRows(base, n) = draw.points;
        for (Eigen::Index r = 0; r < n; ++r) {
            (*out.data.labels)[static_cast<std::size_t>(base + r)] = ci;
            out.components[static_cast<std::size_t>(base + r)] =
                comps[static_cast<std::size_t>(r)];
        }
        out.truths.push_back(std::move(truth));
    }

    out.separation.sigma_max = spec.sigma;
    out.separation.w_min = weights.minCoeff();
    out.separation.delta_sep = all_means.rows() > 1 ? min_pairwise(all_means) : 0.0;
    out.separation.mean_diameter = all_means.rows() > 1 ? max_pairwise(all_means) : 0.0;
    out.separation.validate();
    out.data.validate();
    return out;
}

EstimationErrors measure_recovery(const GmmModel& truth, const GmmModel& fitted,
                                  const std::vector<std::int32_t>& assignment,
                                  const std::vector<std::int32_t>& component_labels) {
    truth.validate();
    fitted.validate();
    if (assignment.size() != component_labels.size())
        throw ContractError("measure_recovery: assignment and component labels differ in size");
    if (assignment.empty()) throw ContractError("measure_recovery: no rows");

    EstimationErrors errs;
    if (truth.components() != fitted.components()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        errs.weight_l1 = errs.mean_l2_max = errs.cov_frobenius_max = nan;
        errs.purity = errs.wasserstein_bound = nan;
        errs.structural_failure = true;
        return errs;
    }

    const auto k = truth.components();
    const auto match = match_components(truth, fitted);
    std::vector<Eigen::Index> back(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) back[static_cast<std::size_t>(match[i])] = i;

    for (Eigen::Index i = 0; i < k; ++i) {
        const auto j = match[static_cast<std::size_t>(i)];
        errs.weight_l1 += std::abs(truth.weights[i] - fitted.weights[j]);
        errs.mean_l2_max =
            std::max(errs.mean_l2_max, (truth.means.row(i) - fitted.means.row(j)).norm());
        errs.cov_frobenius_max =
            std::max(errs.cov_frobenius_max,
                     truth.covariances[static_cast<std::size_t>(i)].frobenius_distance(
                         fitted.covariances[static_cast<std::size_t>(j)]));
    }

    std::size_t pure = 0;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        const auto cluster = assignment[r];
        if (cluster < 0 || cluster >= k)
            throw ContractError("measure_recovery: assignment index out of range");
        const auto comp = component_labels[r];
        if (comp < 0 || comp >= k)
            throw ContractError("measure_recovery: component label out of range");
        if (back[static_cast<std::size_t>(cluster)] == comp) ++pure;
    }
    errs.purity = static_cast<double>(pure) / static_cast<double>(assignment.size());
    errs.wasserstein_bound =
        gmm_wasserstein_bound(truth, fitted, SeparationSpec::from_model(truth), 2.0);
    return errs;
}

} // namespace dpgs
