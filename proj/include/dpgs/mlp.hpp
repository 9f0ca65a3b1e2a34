#pragma once

#include <cstdint>
#include <vector>

#include "dpgs/dataset.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

struct MlpConfig {
    int hidden = 128;
    int epochs = 50;
    int batch = 512;
    double learning_rate = 1e-3; // cosine-annealed toward zero across epochs
    double dropout = 0.5;
    double label_smoothing = 0.2;
    double weight_decay = 1e-4;

    void validate() const;
};

// Two-layer softmax classifier: fixed per-feature standardization (training
// statistics, frozen at inference), ReLU hidden layer with dropout during
// training, plain SGD.
struct MlpModel {
    Vector norm_mean, norm_std; // d
    Matrix w1;                  // hidden x d
    Vector b1;                  // hidden
    Matrix w2;                  // classes x hidden
    Vector b2;                  // classes

    Eigen::Index dim() const { return w1.cols(); }
    Eigen::Index classes() const { return w2.rows(); }

    // Dropout-free smoothed cross-entropy loss over the rows, weight decay
    // included; first/final epoch values from training.
    double first_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
};

struct MlpGradients {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    double loss = 0.0;
};

// Mean smoothed cross-entropy over (x, y) plus L2 weight decay, with the
// analytic parameter gradients. Standardization uses the model's frozen
// statistics. dropout_rng == nullptr turns dropout off (evaluation and the
// finite-difference check); otherwise a fresh inverted-dropout mask is drawn.
MlpGradients mlp_loss_and_gradients(const MlpModel& model, const Matrix& x,
                                    const std::vector<std::int32_t>& y, const MlpConfig& cfg,
                                    RngStream* dropout_rng);

// Trains on a labeled dataset (at least two classes represented; single-class
// input is a ContractError). Deterministic for a fixed rng stream.
MlpModel train_mlp(const EmbeddingDataset& train, const MlpConfig& cfg, RngStream& rng);

// Accuracy on a labeled test set; dropout off, ties broken toward the lower
// class index. Empty or unlabeled test sets and dimension mismatches are
// ContractErrors.
double evaluate(const MlpModel& model, const EmbeddingDataset& test);

// Uniform row subsample without replacement. n must not exceed the row
// count; label values follow their rows.
EmbeddingDataset subsample_rows(const EmbeddingDataset& ds, Eigen::Index n, RngStream& rng);

} // namespace dpgs
