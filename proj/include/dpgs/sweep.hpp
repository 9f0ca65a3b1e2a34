#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpgs/mlp.hpp"
#include "dpgs/pipeline.hpp"
#include "dpgs/planted.hpp"

namespace dpgs {

// Grid axes; every combination times every seed becomes one run. clip sets
// the estimator clipping norms, epsilon the total per-class budget
// (+infinity = noise off).
struct SweepGrid {
    std::vector<int> ks;
    std::vector<double> clips;
    std::vector<double> epsilons;
    std::vector<std::uint64_t> seeds;

    void validate() const;
};

struct SweepOptions {
    PlantedGmmSpec spec = PlantedGmmSpec::desk_reference();
    double delta = 1e-5;
    // Covariance-stage deviation clip; it hugs the released mean, so it can
    // sit far below the grid's mean-stage clip. 0 follows the grid value.
    double cov_clip = 0.0;
    int lloyd_iterations = 5;
    bool filtering = false;
    double vote_threshold = 6.0;
    double generation_multiplier = 6.0;
    Eigen::Index generations = 0;    // synthetic rows per class; 0 = n_per_class
    Eigen::Index test_per_class = 5000; // fresh holdout rows drawn from the truth
    bool train_classifiers = true;   // accuracy columns become NaN when off
    MlpConfig mlp;
    int jobs = 1;
};

struct SweepRow {
    int k = 0;
    double clip = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    EstimationErrors errors; // worst class; purity averaged over classes
    double acc_synth = 0.0;
    double acc_real = 0.0;
    bool failed = false; // the run threw; numeric fields are NaN
    std::string message;
};

// One value per numeric table column.
struct SweepStats {
    double weight_l1 = 0.0;
    double mean_l2_max = 0.0;
    double cov_fro_max = 0.0;
    double purity = 0.0;
    double w_bound = 0.0;
    double acc_synth = 0.0;
    double acc_real = 0.0;
};

struct SweepConfigSummary {
    int k = 0;
    double clip = 0.0;
    double epsilon = 0.0;
    std::size_t seeds_used = 0; // rows that finished with finite metrics
    SweepStats median;
    SweepStats deviation; // median absolute deviation from the median
};

struct SweepResult {
    std::vector<SweepRow> rows; // grid order: k, clip, epsilon, seed
    std::vector<SweepConfigSummary> summaries;
};

// Plants one instance per seed, runs the private pipeline per cell, measures
// recovery against the planted truth and (optionally) compares a classifier
// trained on the synthetic rows with one trained on an equal real subsample,
// both scored on a fresh holdout. Failures are captured per row. jobs > 1
// runs cells concurrently; output order and content stay deterministic.
SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opt);

// Tab-separated data table:
// k, clip, epsilon, seed, weight_l1, mean_l2_max, cov_fro_max, purity,
// w_bound, acc_synth, acc_real.
std::string format_sweep_tsv(const SweepResult& result);

// Tab-separated per-configuration medians and deviations (stat column holds
// "median" or "mad").
std::string format_sweep_summary(const SweepResult& result);

} // namespace dpgs
