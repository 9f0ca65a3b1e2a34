#include "dpgs/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpgs/errors.hpp"
#include "dpgs/mechanisms.hpp"

namespace dpgs {

void ApproxGuarantee::validate() const {
    if (!(zeta >= 1.0)) throw ContractError("ApproxGuarantee: zeta must be at least 1");
    if (!(eta >= 0.0)) throw ContractError("ApproxGuarantee: eta must be nonnegative");
}

void KMeansConfig::validate() const {
    if (k < 1) throw ContractError("KMeansConfig: k must be positive");
    if (!(clip_radius > 0.0)) throw ContractError("KMeansConfig: clip_radius must be positive");
    if (lloyd_iterations < 1) throw ContractError("KMeansConfig: needs at least one iteration");
    if (!(sum_count_ratio > 0.0)) throw ContractError("KMeansConfig: sum_count_ratio must be positive");
    if (oversample < 1) throw ContractError("KMeansConfig: oversample must be positive");
    if (restarts < 1) throw ContractError("KMeansConfig: restarts must be positive");
}

namespace {

Matrix clip_rows(const Matrix& points, double radius) {
    Matrix out = points;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double norm = out.row(i).norm();
        if (norm > radius) out.row(i) *= radius / norm;
    }
    return out;
}

void assign_rows(const Matrix& points, const Matrix& centers,
                 std::vector<std::int32_t>& assignment) {
    // Row block of ||x||^2 - 2 x.c + ||c||^2 per candidate; argmin per row with
    // the lowest index winning ties exactly (strict less-than scan).
    Eigen::Index n = points.rows();
    Eigen::Index k = centers.rows();
    assignment.assign(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd center_sq(k);
    for (Eigen::Index j = 0; j < k; ++j) center_sq[j] = centers.row(j).squaredNorm();

    constexpr Eigen::Index kBlock = 4096;
    for (Eigen::Index start = 0; start < n; start += kBlock) {
        Eigen::Index len = std::min(kBlock, n - start);
        Matrix cross = points.middleRows(start, len) * centers.transpose(); // len x k
        for (Eigen::Index r = 0; r < len; ++r) {
            double best = std::numeric_limits<double>::infinity();
            std::int32_t arg = 0;
            for (Eigen::Index j = 0; j < k; ++j) {
                double dist = center_sq[j] - 2.0 * cross(r, j);
                if (dist < best) {
                    best = dist;
                    arg = static_cast<std::int32_t>(j);
                }
            }
            assignment[static_cast<std::size_t>(start + r)] = arg;
        }
    }
}

struct IterationStats {
    Matrix sums;   // k x d
    Vector counts; // k
};

IterationStats exact_stats(const Matrix& points, const std::vector<std::int32_t>& assignment,
                           Eigen::Index k) {
    IterationStats s;
    s.sums = Matrix::Zero(k, points.cols());
    s.counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        auto j = assignment[static_cast<std::size_t>(i)];
        s.sums.row(j) += points.row(i);
        s.counts[j] += 1.0;
    }
    return s;
}

void clamp_into_ball(Eigen::Ref<Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>> row,
                     double radius) {
    double norm = row.norm();
    if (norm > radius) row *= radius / norm;
}

// Distance-squared-weighted seeding on the clipped data (non-private only).
Matrix dsq_seed(const Matrix& points, int k, RngStream& rng) {
    Eigen::Index n = points.rows();
    Matrix centers(k, points.cols());
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd dsq(n);
    for (Eigen::Index i = 0; i < n; ++i)
        dsq[i] = (points.row(i) - centers.row(0)).squaredNorm();
    for (int j = 1; j < k; ++j) {
        double total = dsq.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform01() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dsq[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        }
        centers.row(j) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            dsq[i] = std::min(dsq[i], (points.row(i) - centers.row(j)).squaredNorm());
    }
    return centers;
}

// Keeps k candidates: highest noisy support first, then greedily the
// candidate maximizing (support) * (squared distance to those already kept),
// so empty floaters and duplicate blob-splitters both lose.
void prune_candidates(Matrix& centers, Vector& noisy_counts, int k) {
    Eigen::Index total = centers.rows();
    Vector score = noisy_counts.cwiseMax(1e-9);
    std::vector<Eigen::Index> kept;
    std::vector<bool> used(static_cast<std::size_t>(total), false);

    Eigen::Index first = 0;
    score.maxCoeff(&first);
    kept.push_back(first);
    used[static_cast<std::size_t>(first)] = true;
    while (static_cast<int>(kept.size()) < k) {
        double best = -1.0;
        Eigen::Index arg = -1;
        for (Eigen::Index j = 0; j < total; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            double min_dsq = std::numeric_limits<double>::infinity();
            for (Eigen::Index c : kept)
                min_dsq = std::min(min_dsq, (centers.row(j) - centers.row(c)).squaredNorm());
            double s = score[j] * min_dsq;
            if (s > best) {
                best = s;
                arg = j;
            }
        }
        kept.push_back(arg);
        used[static_cast<std::size_t>(arg)] = true;
    }

    Matrix pruned(k, centers.cols());
    Vector counts(k);
    for (int r = 0; r < k; ++r) {
        pruned.row(r) = centers.row(kept[static_cast<std::size_t>(r)]);
        counts[r] = noisy_counts[kept[static_cast<std::size_t>(r)]];
    }
    centers = std::move(pruned);
    noisy_counts = std::move(counts);
}

struct RunResult {
    Matrix centers;
    Vector noisy_counts;
    int reseeds = 0;
};

RunResult run_noisy_lloyd(const Matrix& clipped, const KMeansConfig& cfg,
                          const PrivacyBudget& budget, RngStream& rng) {
    const bool private_run = !budget.is_non_private();
    const double t = static_cast<double>(cfg.lloyd_iterations);
    const double ratio = cfg.sum_count_ratio;
    PrivacyBudget sums_budget = PrivacyBudget::non_private();
    PrivacyBudget counts_budget = PrivacyBudget::non_private();
    if (private_run) {
        double eps_it = budget.epsilon / t;
        double delta_it = budget.delta / t;
        sums_budget = {eps_it * ratio / (ratio + 1.0), delta_it};
        counts_budget = {eps_it / (ratio + 1.0), 0.0};
    }

    const bool oversampled = private_run && cfg.init == KMeansConfig::Init::noisy_sample;
    Eigen::Index candidates = cfg.k;
    if (oversampled)
        candidates = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.oversample) * cfg.k,
                                            std::max<Eigen::Index>(clipped.rows(), cfg.k));
    const int prune_iter =
        oversampled ? std::max(1, cfg.lloyd_iterations - 2) : cfg.lloyd_iterations + 1;

    Matrix centers(candidates, clipped.cols());
    if (!private_run && cfg.init == KMeansConfig::Init::noisy_sample) {
        centers = dsq_seed(clipped, cfg.k, rng);
        candidates = cfg.k;
    } else {
        for (Eigen::Index j = 0; j < candidates; ++j)
            centers.row(j) = rng.uniform_in_ball(clipped.cols(), cfg.clip_radius).transpose();
    }

    RunResult out;
    std::vector<std::int32_t> assignment;
    Vector noisy_counts;
    for (int it = 1; it <= cfg.lloyd_iterations; ++it) {
        assign_rows(clipped, centers, assignment);
        IterationStats stats = exact_stats(clipped, assignment, centers.rows());

        Eigen::Map<Vector> sums_flat(stats.sums.data(), stats.sums.size());
        Vector noisy_sums_flat =
            gaussian_mechanism(sums_flat, cfg.clip_radius, sums_budget, rng);
        Eigen::Map<Matrix> noisy_sums(noisy_sums_flat.data(), stats.sums.rows(),
                                      stats.sums.cols());
        noisy_counts = laplace_mechanism(stats.counts, 1.0, counts_budget, rng);

        for (Eigen::Index j = 0; j < centers.rows(); ++j) {
            if (noisy_counts[j] < 0.5) {
                centers.row(j) =
                    rng.uniform_in_ball(clipped.cols(), cfg.clip_radius).transpose();
                ++out.reseeds;
            } else {
                centers.row(j) = noisy_sums.row(j) / std::max(1.0, noisy_counts[j]);
                clamp_into_ball(centers.row(j), cfg.clip_radius);
            }
        }
        if (it == prune_iter && centers.rows() > cfg.k)
            prune_candidates(centers, noisy_counts, cfg.k);
    }

    out.centers = std::move(centers);
    out.noisy_counts = std::move(noisy_counts);
    return out;
}

} // namespace

std::pair<std::vector<std::int32_t>, Vector> assign_and_count(const EmbeddingDataset& ds,
                                                              const Matrix& centers) {
    ds.validate();
    if (centers.rows() < 1 || centers.cols() != ds.dim())
        throw ContractError("assign_and_count: center shape mismatch");
    std::vector<std::int32_t> assignment;
    assign_rows(ds.points, centers, assignment);
    Vector counts = Vector::Zero(centers.rows());
    for (auto j : assignment) counts[j] += 1.0;
    return {std::move(assignment), std::move(counts)};
}

double kmeans_cost(const Matrix& points, const Matrix& centers,
                   const std::vector<std::int32_t>& assignment) {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        cost += (points.row(i) - centers.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
    return cost;
}

ClusteringResult dp_kmeans(const EmbeddingDataset& ds, const KMeansConfig& cfg,
                           const PrivacyBudget& budget, RngStream& rng) {
    ds.validate();
    cfg.validate();
    budget.validate();
    if (static_cast<Eigen::Index>(cfg.k) > ds.rows())
        throw ContractError("dp_kmeans: k exceeds the number of points");
    if (cfg.restarts > 1 && !budget.is_non_private())
        throw ConfigError("dp_kmeans: restarts require a non-private budget");

    Matrix clipped = clip_rows(ds.points, cfg.clip_radius);

    RunResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<std::int32_t> scratch;
    for (int r = 0; r < cfg.restarts; ++r) {
        RngStream run_rng = rng.derive("restart-" + std::to_string(r));
        RunResult run = run_noisy_lloyd(clipped, cfg, budget, run_rng);
        if (cfg.restarts == 1) {
            best = std::move(run);
            break;
        }
        assign_rows(clipped, run.centers, scratch);
        double cost = kmeans_cost(clipped, run.centers, scratch);
        if (cost < best_cost) {
            best_cost = cost;
            best = std::move(run);
        }
    }

    ClusteringResult result;
    result.centers = std::move(best.centers);
    result.noisy_counts = std::move(best.noisy_counts);
    result.reseeds = best.reseeds;
    assign_rows(clipped, result.centers, result.assignment);
    return result;
}

} // namespace dpgs
