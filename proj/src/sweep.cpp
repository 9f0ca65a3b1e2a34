#include "dpgs/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <limits>

#include "dpgs/errors.hpp"

namespace dpgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Cell {
    int k;
    double clip;
    double epsilon;
    std::uint64_t seed;
};

EmbeddingDataset take_rows(const Matrix& points, Eigen::Index start, Eigen::Index count,
                           std::int32_t label) {
    EmbeddingDataset out;
    out.points = points.middleRows(start, count);
    out.labels.emplace(static_cast<std::size_t>(count), label);
    return out;
}

void append_labeled(EmbeddingDataset& into, const EmbeddingDataset& part) {
    if (into.points.rows() == 0) {
        into = part;
        return;
    }
    const auto old = into.points.rows();
    Matrix merged(old + part.points.rows(), into.points.cols());
    merged.topRows(old) = into.points;
    merged.bottomRows(part.points.rows()) = part.points;
    into.points = std::move(merged);
    into.labels->insert(into.labels->end(), part.labels->begin(), part.labels->end());
}

SweepRow run_cell(const Cell& cell, const SweepOptions& opt) {
    SweepRow row;
    row.k = cell.k;
    row.clip = cell.clip;
    row.epsilon = cell.epsilon;
    row.seed = cell.seed;
    row.acc_synth = row.acc_real = kNaN;
    try {
        RngStream root(cell.seed);
        PlantedGmmSpec spec = opt.spec;
        spec.seed = cell.seed;
        auto plant_rng = root.derive("plant");
        PlantedInstance inst = plant_gmm(spec, plant_rng);

        PipelineConfig cfg;
        cfg.budget = std::isinf(cell.epsilon) ? PrivacyBudget::non_private()
                                              : PrivacyBudget{cell.epsilon, opt.delta};
        cfg.kmeans.k = cell.k;
        double mean_norm = 0.0;
        for (const auto& truth : inst.truths)
            mean_norm = std::max(mean_norm, truth.means.rowwise().norm().maxCoeff());
        cfg.kmeans.clip_radius =
            mean_norm + spec.sigma * (std::sqrt(static_cast<double>(spec.d)) + 3.0);
        cfg.kmeans.lloyd_iterations = opt.lloyd_iterations;
        cfg.kmeans.init = KMeansConfig::Init::noisy_sample;
        cfg.estimator.clip_radius = cell.clip;
        cfg.estimator.cov_clip_radius = opt.cov_clip;
        cfg.generations = opt.generations > 0 ? opt.generations : spec.n_per_class;
        cfg.generation_multiplier = opt.filtering ? opt.generation_multiplier : 1.0;
        cfg.filtering = opt.filtering;
        cfg.vote_threshold = opt.vote_threshold;
        cfg.validate();
        const auto stage_budgets = split_budget(cfg.budget, cfg.shares);

        auto parts = split_by_label(inst.data);
        bool structural = false;
        double purity_sum = 0.0;
        EstimationErrors agg;
        EmbeddingDataset synth, real_train;
        auto fit_rng = root.derive("fit");
        for (std::size_t ci = 0; ci < parts.size(); ++ci) {
            const auto& classds = parts[ci].second;
            auto class_rng = fit_rng.derive("class-" + std::to_string(parts[ci].first));
            BudgetLedger ledger(cfg.budget);
            ClusteringResult clustering;
            GmmModel fitted = fit_private_gmm(classds, cfg, class_rng, ledger, "", &clustering);

            const auto base = static_cast<Eigen::Index>(ci) * spec.n_per_class;
            std::vector<std::int32_t> comps(
                inst.components.begin() + base,
                inst.components.begin() + base + spec.n_per_class);
            EstimationErrors errs =
                measure_recovery(inst.truths[ci], fitted, clustering.assignment, comps);
            if (errs.structural_failure) {
                structural = true;
            } else {
                agg.weight_l1 = std::max(agg.weight_l1, errs.weight_l1);
                agg.mean_l2_max = std::max(agg.mean_l2_max, errs.mean_l2_max);
                agg.cov_frobenius_max = std::max(agg.cov_frobenius_max, errs.cov_frobenius_max);
                agg.wasserstein_bound = std::max(agg.wasserstein_bound, errs.wasserstein_bound);
                purity_sum += errs.purity;
            }

            if (opt.train_classifiers) {
                auto sample_rng = class_rng.derive("sample");
                const auto want = cfg.generations;
                auto generated = sample_gmm(
                    fitted,
                    static_cast<Eigen::Index>(std::llround(
                        static_cast<double>(want) * cfg.generation_multiplier)),
                    sample_rng);
                if (opt.filtering) {
                    auto filter_rng = class_rng.derive("dp-filter");
                    FilterResult fr = dp_filter_embeddings(generated, classds,
                                                           cfg.vote_threshold,
                                                           stage_budgets[3], filter_rng);
                    generated = std::move(fr.survivors);
                }
                const auto kept = std::min(want, generated.points.rows());
                append_labeled(synth, take_rows(generated.points, 0, kept, parts[ci].first));
                auto sub_rng = class_rng.derive("real-subsample");
                EmbeddingDataset real_part = subsample_rows(classds, kept, sub_rng);
                real_part.labels.emplace(static_cast<std::size_t>(kept), parts[ci].first);
                append_labeled(real_train, real_part);
            }
        }

        if (structural) {
            agg.weight_l1 = agg.mean_l2_max = agg.cov_frobenius_max = kNaN;
            agg.purity = agg.wasserstein_bound = kNaN;
            agg.structural_failure = true;
        } else {
            agg.purity = purity_sum / static_cast<double>(parts.size());
        }
        row.errors = agg;

        if (opt.train_classifiers) {
            EmbeddingDataset test;
            for (std::size_t ci = 0; ci < inst.truths.size(); ++ci) {
                auto test_rng = root.derive("test-" + std::to_string(ci));
                EmbeddingDataset part = sample_gmm(inst.truths[ci], opt.test_per_class, test_rng);
                part.labels.emplace(static_cast<std::size_t>(opt.test_per_class),
                                    static_cast<std::int32_t>(ci));
                append_labeled(test, part);
            }
            auto synth_rng = root.derive("mlp-synth");
            auto real_rng = root.derive("mlp-real");
            row.acc_synth = evaluate(train_mlp(synth, opt.mlp, synth_rng), test);
            row.acc_real = evaluate(train_mlp(real_train, opt.mlp, real_rng), test);
        }
    } catch (const std::exception& e) {
        row.failed = true;
        row.message = e.what();
        row.errors.weight_l1 = row.errors.mean_l2_max = row.errors.cov_frobenius_max = kNaN;
        row.errors.purity = row.errors.wasserstein_bound = kNaN;
        row.acc_synth = row.acc_real = kNaN;
    }
    return row;
}

std::vector<double> finite_values(const std::vector<SweepRow>& rows, std::size_t lo,
                                  std::size_t hi, double (*field)(const SweepRow&)) {
    std::vector<double> vals;
    for (std::size_t i = lo; i < hi; ++i) {
        const double v = field(rows[i]);
        if (std::isfinite(v)) vals.push_back(v);
    }
    return vals;
}

SweepStats stats_from(const std::vector<SweepRow>& rows, std::size_t lo, std::size_t hi,
                      bool deviation) {
    using Field = double (*)(const SweepRow&);
    const Field fields[] = {
        [](const SweepRow& r) { return r.errors.weight_l1; },
        [](const SweepRow& r) { return r.errors.mean_l2_max; },
        [](const SweepRow& r) { return r.errors.cov_frobenius_max; },
        [](const SweepRow& r) { return r.errors.purity; },
        [](const SweepRow& r) { return r.errors.wasserstein_bound; },
        [](const SweepRow& r) { return r.acc_synth; },
        [](const SweepRow& r) { return r.acc_real; },
    };
    double out[7];
    for (int f = 0; f < 7; ++f) {
        auto vals = finite_values(rows, lo, hi, fields[f]);
        const double med = median_of(vals);
        if (!deviation) {
            out[f] = med;
        } else {
            for (auto& v : vals) v = std::abs(v - med);
            out[f] = median_of(vals);
        }
    }
    return SweepStats{out[0], out[1], out[2], out[3], out[4], out[5], out[6]};
}

void append_stats_row(std::string& text, const SweepConfigSummary& s, const char* stat,
                      const SweepStats& v) {
    text += std::to_string(s.k) + '\t' + fmt(s.clip) + '\t' + fmt(s.epsilon) + '\t' + stat +
            '\t' + std::to_string(s.seeds_used) + '\t' + fmt(v.weight_l1) + '\t' +
            fmt(v.mean_l2_max) + '\t' + fmt(v.cov_fro_max) + '\t' + fmt(v.purity) + '\t' +
            fmt(v.w_bound) + '\t' + fmt(v.acc_synth) + '\t' + fmt(v.acc_real) + '\n';
}

} // namespace

void SweepGrid::validate() const {
    if (ks.empty() || clips.empty() || epsilons.empty() || seeds.empty())
        throw ContractError("sweep: every grid axis needs at least one value");
    for (int k : ks)
        if (k < 1) throw ContractError("sweep: k must be positive");
    for (double c : clips)
        if (!(c > 0.0) || !std::isfinite(c))
            throw ContractError("sweep: clip radii must be positive and finite");
    for (double e : epsilons)
        if (!(e > 0.0)) throw ContractError("sweep: epsilon must be positive");
}

SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opt) {
    grid.validate();
    opt.spec.validate();
    opt.mlp.validate();
    if (opt.test_per_class < 1) throw ContractError("sweep: test_per_class must be positive");
    if (opt.jobs < 1) throw ContractError("sweep: jobs must be positive");

    std::vector<Cell> cells;
    for (int k : grid.ks)
        for (double clip : grid.clips)
            for (double eps : grid.epsilons)
                for (auto seed : grid.seeds) cells.push_back({k, clip, eps, seed});

    SweepResult result;
    result.rows.resize(cells.size());
    if (opt.jobs <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) result.rows[i] = run_cell(cells[i], opt);
    } else {
        std::vector<std::future<SweepRow>> futures(cells.size());
        std::size_t next = 0;
        while (next < cells.size()) {
            const auto batch =
                std::min<std::size_t>(static_cast<std::size_t>(opt.jobs), cells.size() - next);
            for (std::size_t i = 0; i < batch; ++i)
                futures[next + i] = std::async(std::launch::async, run_cell, cells[next + i],
                                               std::cref(opt));
            for (std::size_t i = 0; i < batch; ++i)
                result.rows[next + i] = futures[next + i].get();
            next += batch;
        }
    }

    const auto per_config = grid.seeds.size();
    for (std::size_t lo = 0; lo < result.rows.size(); lo += per_config) {
        const auto hi = lo + per_config;
        SweepConfigSummary s;
        s.k = result.rows[lo].k;
        s.clip = result.rows[lo].clip;
        s.epsilon = result.rows[lo].epsilon;
        for (std::size_t i = lo; i < hi; ++i)
            if (!result.rows[i].failed) ++s.seeds_used;
        s.median = stats_from(result.rows, lo, hi, false);
        s.deviation = stats_from(result.rows, lo, hi, true);
        result.summaries.push_back(s);
    }
    return result;
}

std::string format_sweep_tsv(const SweepResult& result) {
    std::string text =
        "k\tclip\tepsilon\tseed\tweight_l1\tmean_l2_max\tcov_fro_max\tpurity\tw_bound\tacc_"
        "synth\tacc_real\n";
    for (const auto& r : result.rows) {
        text += std::to_string(r.k) + '\t' + fmt(r.clip) + '\t' + fmt(r.epsilon) + '\t' +
                std::to_string(r.seed) + '\t' + fmt(r.errors.weight_l1) + '\t' +
                fmt(r.errors.mean_l2_max) + '\t' + fmt(r.errors.cov_frobenius_max) + '\t' +
                fmt(r.errors.purity) + '\t' + fmt(r.errors.wasserstein_bound) + '\t' +
                fmt(r.acc_synth) + '\t' + fmt(r.acc_real) + '\n';
    }
    return text;
}

std::string format_sweep_summary(const SweepResult& result) {
    std::string text =
        "k\tclip\tepsilon\tstat\tseeds\tweight_l1\tmean_l2_max\tcov_fro_max\tpurity\tw_bound\tacc_"
        "synth\tacc_real\n";
    for (const auto& s : result.summaries) {
        append_stats_row(text, s, "median", s.median);
        append_stats_row(text, s, "mad", s.deviation);
    }
    return text;
}

} // namespace dpgs
