#include "dpgs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "dpgs/errors.hpp"
#include "dpgs/mechanisms.hpp"

namespace dpgs {

void PipelineConfig::validate() const {
    budget.validate();
    if (shares.size() != 5)
        throw ContractError("PipelineConfig: expected five budget shares "
                            "(cluster, mean, covariance, filter, reserved)");
    kmeans.validate();
    estimator.validate();
    if (generations < 0) throw ContractError("PipelineConfig: generations must be non-negative");
    if (!(generation_multiplier >= 1.0))
        throw ContractError("PipelineConfig: generation_multiplier must be at least 1");
    if (!std::isfinite(vote_threshold))
        throw ContractError("PipelineConfig: vote_threshold must be finite");
    if (jobs < 1) throw ContractError("PipelineConfig: jobs must be positive");
}

namespace {

EmbeddingDataset select_rows(const EmbeddingDataset& ds, const std::vector<std::int32_t>& assignment,
                             std::int32_t cluster) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < ds.rows(); ++i)
        if (assignment[static_cast<std::size_t>(i)] == cluster) idx.push_back(i);
    EmbeddingDataset out;
    out.points.resize(static_cast<Eigen::Index>(idx.size()), ds.dim());
    for (std::size_t r = 0; r < idx.size(); ++r)
        out.points.row(static_cast<Eigen::Index>(r)) = ds.points.row(idx[r]);
    return out;
}

void record_stage(BudgetLedger& ledger, const std::string& stage, const PrivacyBudget& share,
                  const std::string& partition_tag) {
    if (partition_tag.empty()) {
        ledger.record(stage, share);
    } else {
        ledger.record(stage + "[" + partition_tag + "]", share, Composition::parallel, stage);
    }
}

// Nearest generated row per original row, both matrices blocked so the cross
// product stays small when the generated side is large.
std::vector<Eigen::Index> nearest_generated(const Matrix& original, const Matrix& generated) {
    Eigen::Index n = original.rows(), g = generated.rows();
    std::vector<Eigen::Index> nearest(static_cast<std::size_t>(n), 0);
    std::vector<double> best(static_cast<std::size_t>(n),
                             std::numeric_limits<double>::infinity());
    Eigen::VectorXd gen_sq(g);
    for (Eigen::Index j = 0; j < g; ++j) gen_sq[j] = generated.row(j).squaredNorm();

    constexpr Eigen::Index kRowBlock = 1024;
    constexpr Eigen::Index kGenBlock = 4096;
    for (Eigen::Index r0 = 0; r0 < n; r0 += kRowBlock) {
        Eigen::Index rl = std::min(kRowBlock, n - r0);
        for (Eigen::Index g0 = 0; g0 < g; g0 += kGenBlock) {
            Eigen::Index gl = std::min(kGenBlock, g - g0);
            Matrix cross = original.middleRows(r0, rl) * generated.middleRows(g0, gl).transpose();
            for (Eigen::Index r = 0; r < rl; ++r) {
                auto& b = best[static_cast<std::size_t>(r0 + r)];
                auto& arg = nearest[static_cast<std::size_t>(r0 + r)];
                for (Eigen::Index j = 0; j < gl; ++j) {
                    double dist = gen_sq[g0 + j] - 2.0 * cross(r, j);
                    if (dist < b) {
                        b = dist;
                        arg = g0 + j;
                    }
                }
            }
        }
    }
    return nearest;
}

} // namespace

GmmModel fit_private_gmm(const EmbeddingDataset& ds, const PipelineConfig& cfg, RngStream& rng,
                         BudgetLedger& ledger, const std::string& partition_tag,
                         ClusteringResult* clustering_out) {
    ds.validate();
    cfg.validate();
    auto shares = split_budget(cfg.budget, cfg.shares);

    RngStream cluster_rng = rng.derive("dp-cluster");
    ClusteringResult clustering = dp_kmeans(ds, cfg.kmeans, shares[0], cluster_rng);
    record_stage(ledger, "dp-cluster", shares[0], partition_tag);

    Eigen::Index k = clustering.centers.rows();
    Eigen::Index d = ds.dim();
    GmmModel model;
    model.means.resize(k, d);
    model.covariances.reserve(static_cast<std::size_t>(k));
    model.degenerate.assign(static_cast<std::size_t>(k), 0);

    for (Eigen::Index j = 0; j < k; ++j) {
        EmbeddingDataset cluster = select_rows(ds, clustering.assignment,
                                               static_cast<std::int32_t>(j));
        RngStream mean_rng = rng.derive("dp-mean-" + std::to_string(j));
        MeanEstimate mean = dp_mean(cluster, clustering.centers.row(j).transpose(),
                                    cfg.estimator, shares[1], mean_rng);
        RngStream cov_rng = rng.derive("dp-covariance-" + std::to_string(j));
        CovarianceEstimate cov =
            dp_covariance(cluster, mean.mean, cfg.estimator, shares[2], cov_rng,
                          mean.degenerate ? std::nullopt : std::optional<double>(mean.noisy_count));
        model.means.row(j) = mean.mean.transpose();
        model.covariances.push_back(std::move(cov.covariance));
        model.degenerate[static_cast<std::size_t>(j)] = mean.degenerate ? 1 : 0;
    }
    record_stage(ledger, "dp-mean", shares[1], partition_tag);
    record_stage(ledger, "dp-covariance", shares[2], partition_tag);

    if (std::all_of(model.degenerate.begin(), model.degenerate.end(),
                    [](std::uint8_t f) { return f != 0; }))
        throw ContractError("fit_private_gmm: every cluster came back empty");

    model.weights = dp_weights(clustering.noisy_counts);
    model.validate();
    if (clustering_out) *clustering_out = std::move(clustering);
    return model;
}

FilterResult dp_filter_embeddings(const EmbeddingDataset& generated,
                                  const EmbeddingDataset& original, double threshold,
                                  const PrivacyBudget& budget, RngStream& rng) {
    original.validate();
    budget.validate();
    if (!std::isfinite(threshold))
        throw ContractError("dp_filter_embeddings: threshold must be finite");
    FilterResult out;
    if (generated.rows() == 0) {
        out.empty_warning = true;
        out.noisy_votes = Vector::Zero(0);
        out.survivors.points.resize(0, original.dim());
        return out;
    }
    generated.validate();
    if (generated.dim() != original.dim())
        throw ContractError("dp_filter_embeddings: dimension mismatch");

    Vector votes = Vector::Zero(generated.rows());
    for (Eigen::Index idx : nearest_generated(original.points, generated.points))
        votes[idx] += 1.0;

    PrivacyBudget vote_budget = budget;
    vote_budget.delta = 0.0; // pure Laplace release; delta share stays unspent
    out.noisy_votes = laplace_mechanism(votes, 1.0, vote_budget, rng);

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < generated.rows(); ++i)
        if (out.noisy_votes[i] >= threshold) keep.push_back(i);

    out.survivors.points.resize(static_cast<Eigen::Index>(keep.size()), generated.dim());
    for (std::size_t r = 0; r < keep.size(); ++r)
        out.survivors.points.row(static_cast<Eigen::Index>(r)) = generated.points.row(keep[r]);
    out.empty_warning = keep.empty();
    return out;
}

SyntheticReport run_pipeline(const EmbeddingDataset& labeled, const PipelineConfig& cfg,
                             RngStream& rng) {
    labeled.validate();
    cfg.validate();
    if (!labeled.has_labels()) throw ContractError("run_pipeline: dataset must be labeled");

    auto parts = split_by_label(labeled);
    std::int32_t num_classes = labeled.num_classes();
    if (static_cast<std::int32_t>(parts.size()) != num_classes) {
        std::int32_t expect = 0;
        for (const auto& [label, part] : parts) {
            if (label != expect) break;
            ++expect;
        }
        throw ContractError("run_pipeline: class " + std::to_string(expect) + " has no rows");
    }

    auto shares = split_budget(cfg.budget, cfg.shares);
    SyntheticReport report{.synthetic = {}, .classes = {}, .ledger = BudgetLedger(cfg.budget),
                           .seed = rng.seed()};

    struct ClassOutput {
        ClassReport report;
        EmbeddingDataset rows;
        std::vector<LedgerEntry> entries;
    };

    auto run_class = [&](std::size_t index) -> ClassOutput {
        const auto& [label, data] = parts[index];
        std::string tag = "class-" + std::to_string(label);
        RngStream class_rng = rng.derive(tag);
        ClassOutput out;
        out.report.label = label;
        BudgetLedger class_ledger(cfg.budget);

        ClusteringResult clustering;
        out.report.model = fit_private_gmm(data, cfg, class_rng, class_ledger, tag, &clustering);
        out.report.reseeds = clustering.reseeds;

        auto generate_n = static_cast<Eigen::Index>(
            std::llround(static_cast<double>(cfg.generations) * cfg.generation_multiplier));
        RngStream sample_rng = class_rng.derive("sample");
        EmbeddingDataset synth;
        if (generate_n > 0) {
            synth = sample_gmm(out.report.model, generate_n, sample_rng);
        } else {
            synth.points.resize(0, data.dim());
        }
        out.report.generated = synth.rows();

        if (cfg.filtering) {
            RngStream filter_rng = class_rng.derive("dp-filter");
            FilterResult filtered =
                dp_filter_embeddings(synth, data, cfg.vote_threshold, shares[3], filter_rng);
            class_ledger.record("dp-filter[" + tag + "]", shares[3], Composition::parallel,
                                "dp-filter");
            out.report.filter_empty = filtered.empty_warning;
            out.rows = std::move(filtered.survivors);
        } else {
            out.rows = std::move(synth);
        }
        out.report.survivors = out.rows.rows();
        out.entries = class_ledger.entries();
        return out;
    };

    std::vector<ClassOutput> outputs(parts.size());
    if (cfg.jobs > 1 && parts.size() > 1) {
        std::vector<std::future<ClassOutput>> futures;
        futures.reserve(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i)
            futures.push_back(std::async(std::launch::async, run_class, i));
        for (std::size_t i = 0; i < parts.size(); ++i) outputs[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < parts.size(); ++i) outputs[i] = run_class(i);
    }

    Eigen::Index total = 0;
    for (const auto& o : outputs) total += o.rows.rows();
    report.synthetic.points.resize(total, labeled.dim());
    std::vector<std::int32_t> labels;
    labels.reserve(static_cast<std::size_t>(total));
    Eigen::Index at = 0;
    for (auto& o : outputs) {
        for (const auto& entry : o.entries)
            report.ledger.record(entry.subroutine, entry.spent, entry.kind, entry.partition);
        if (o.rows.rows() > 0) {
            report.synthetic.points.middleRows(at, o.rows.rows()) = o.rows.points;
            at += o.rows.rows();
            labels.insert(labels.end(), static_cast<std::size_t>(o.rows.rows()), o.report.label);
        }
        report.classes.push_back(std::move(o.report));
    }
    report.synthetic.labels = std::move(labels);

    if (!cfg.filtering)
        report.ledger.record("dp-filter-unused", shares[3]);
    report.ledger.record("image-stage-reserved", shares[4]);
    report.ledger.verify();
    return report;
}

} // namespace dpgs
