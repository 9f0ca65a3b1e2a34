#include "dpgs/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "dpgs/errors.hpp"

namespace dpgs {

namespace {

constexpr double kStdFloor = 1e-8;

Matrix standardize(const MlpModel& model, const Matrix& x) {
    if (x.cols() != model.dim())
        throw ContractError("mlp: input has " + std::to_string(x.cols()) +
                            " columns, model expects " + std::to_string(model.dim()));
    Matrix z = x;
    z.rowwise() -= model.norm_mean.transpose();
    z.array().rowwise() /= model.norm_std.transpose().array();
    return z;
}

// Row-wise softmax probabilities, max-shifted.
Matrix softmax(const Matrix& logits) {
    Matrix p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

struct Batch {
    Matrix z;                  // standardized rows
    std::vector<std::int32_t> y;
};

// Forward, loss, and parameter gradients for one standardized batch.
MlpGradients batch_gradients(const MlpModel& model, const Batch& batch, const MlpConfig& cfg,
                             RngStream* dropout_rng) {
    const auto b = batch.z.rows();
    const auto classes = model.classes();
    const double smooth = cfg.label_smoothing;

    Matrix pre = batch.z * model.w1.transpose();
    pre.rowwise() += model.b1.transpose();
    Matrix h = pre.cwiseMax(0.0);

    Matrix mask;
    if (dropout_rng != nullptr && cfg.dropout > 0.0) {
        const double keep = 1.0 - cfg.dropout;
        mask.resize(h.rows(), h.cols());
        for (Eigen::Index i = 0; i < mask.rows(); ++i)
            for (Eigen::Index j = 0; j < mask.cols(); ++j)
                mask(i, j) = dropout_rng->uniform01() < keep ? 1.0 / keep : 0.0;
        h.array() *= mask.array();
    }

    Matrix logits = h * model.w2.transpose();
    logits.rowwise() += model.b2.transpose();
    Matrix p = softmax(logits);

    // Smoothed targets: (1 - s) on the label, s spread uniformly.
    Matrix q = Matrix::Constant(b, classes, smooth / static_cast<double>(classes));
    for (Eigen::Index i = 0; i < b; ++i) q(i, batch.y[static_cast<std::size_t>(i)]) += 1.0 - smooth;

    double ce = 0.0;
    for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index c = 0; c < classes; ++c)
            ce -= q(i, c) * std::log(std::max(p(i, c), 1e-300));
    ce /= static_cast<double>(b);

    MlpGradients g;
    g.loss = ce + 0.5 * cfg.weight_decay *
                      (model.w1.squaredNorm() + model.w2.squaredNorm());

    Matrix dlogits = (p - q) / static_cast<double>(b);
    g.w2 = dlogits.transpose() * h + cfg.weight_decay * model.w2;
    g.b2 = dlogits.colwise().sum().transpose();

    Matrix dh = dlogits * model.w2;
    if (mask.size() > 0) dh.array() *= mask.array();
    dh = (pre.array() > 0.0).select(dh, 0.0);
    g.w1 = dh.transpose() * batch.z + cfg.weight_decay * model.w1;
    g.b1 = dh.colwise().sum().transpose();
    return g;
}

void check_labels(const EmbeddingDataset& ds, const char* who) {
    if (!ds.labels) throw ContractError(std::string(who) + ": dataset has no labels");
    if (ds.points.rows() == 0) throw ContractError(std::string(who) + ": dataset is empty");
}

} // namespace

void MlpConfig::validate() const {
    if (hidden < 1) throw ContractError("mlp: hidden width must be positive");
    if (epochs < 1) throw ContractError("mlp: epochs must be positive");
    if (batch < 1) throw ContractError("mlp: batch size must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ContractError("mlp: learning rate must be positive and finite");
    if (!(dropout >= 0.0) || dropout >= 1.0)
        throw ContractError("mlp: dropout must lie in [0, 1)");
    if (!(label_smoothing >= 0.0) || label_smoothing >= 1.0)
        throw ContractError("mlp: label smoothing must lie in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
        throw ContractError("mlp: weight decay must be non-negative and finite");
}

MlpGradients mlp_loss_and_gradients(const MlpModel& model, const Matrix& x,
                                    const std::vector<std::int32_t>& y, const MlpConfig& cfg,
                                    RngStream* dropout_rng) {
    cfg.validate();
    if (x.rows() == 0) throw ContractError("mlp: gradient over an empty batch");
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw ContractError("mlp: label count does not match row count");
    for (auto label : y)
        if (label < 0 || label >= model.classes())
            throw ContractError("mlp: label " + std::to_string(label) + " outside model classes");
    Batch batch{standardize(model, x), y};
    return batch_gradients(model, batch, cfg, dropout_rng);
}

MlpModel train_mlp(const EmbeddingDataset& train, const MlpConfig& cfg, RngStream& rng) {
    cfg.validate();
    train.validate();
    check_labels(train, "train_mlp");

    const auto n = train.points.rows();
    const auto d = train.points.cols();
    std::set<std::int32_t> distinct(train.labels->begin(), train.labels->end());
    if (distinct.size() < 2) throw ContractError("train_mlp: training set has a single class");
    const auto classes = static_cast<Eigen::Index>(*distinct.rbegin()) + 1;

    MlpModel model;
    model.norm_mean = train.points.colwise().mean();
    model.norm_std =
        (((train.points.rowwise() - model.norm_mean.transpose()).array().square().colwise().sum() /
          static_cast<double>(n))
             .sqrt() +
         kStdFloor)
            .transpose();

    model.w1.resize(cfg.hidden, d);
    const double scale1 = std::sqrt(2.0 / static_cast<double>(d));
    for (Eigen::Index i = 0; i < model.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < model.w1.cols(); ++j) model.w1(i, j) = scale1 * rng.normal();
    model.b1 = Vector::Zero(cfg.hidden);
    model.w2.resize(classes, cfg.hidden);
    const double scale2 = std::sqrt(2.0 / static_cast<double>(cfg.hidden));
    for (Eigen::Index i = 0; i < model.w2.rows(); ++i)
        for (Eigen::Index j = 0; j < model.w2.cols(); ++j) model.w2(i, j) = scale2 * rng.normal();
    model.b2 = Vector::Zero(classes);

    Matrix z = standardize(model, train.points);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    const auto batch_size = std::min<Eigen::Index>(cfg.batch, n);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * 0.5 *
                          (1.0 + std::cos(M_PI * static_cast<double>(epoch) /
                                          static_cast<double>(cfg.epochs)));
        rng.shuffle(order);
        double epoch_loss = 0.0;
        Eigen::Index batches = 0;
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const auto count = std::min(batch_size, n - start);
            Batch batch;
            batch.z.resize(count, d);
            batch.y.resize(static_cast<std::size_t>(count));
            for (Eigen::Index i = 0; i < count; ++i) {
                const auto row = order[static_cast<std::size_t>(start + i)];
                batch.z.row(i) = z.row(row);
                batch.y[static_cast<std::size_t>(i)] =
                    (*train.labels)[static_cast<std::size_t>(row)];
            }
            MlpGradients g = batch_gradients(model, batch, cfg, &rng);
            model.w1 -= lr * g.w1;
            model.b1 -= lr * g.b1;
            model.w2 -= lr * g.w2;
            model.b2 -= lr * g.b2;
            epoch_loss += g.loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        if (epoch == 0) model.first_epoch_loss = epoch_loss;
        model.final_epoch_loss = epoch_loss;
    }
    return model;
}

double evaluate(const MlpModel& model, const EmbeddingDataset& test) {
    test.validate();
    check_labels(test, "evaluate");
    Matrix z = standardize(model, test.points);
    Matrix pre = z * model.w1.transpose();
    pre.rowwise() += model.b1.transpose();
    Matrix logits = pre.cwiseMax(0.0) * model.w2.transpose();
    logits.rowwise() += model.b2.transpose();

    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
            if (logits(i, c) > logits(i, best)) best = c;
        if (best == (*test.labels)[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

EmbeddingDataset subsample_rows(const EmbeddingDataset& ds, Eigen::Index n, RngStream& rng) {
    ds.validate();
    if (n < 0 || n > ds.points.rows())
        throw ContractError("subsample_rows: requested " + std::to_string(n) + " of " +
                            std::to_string(ds.points.rows()) + " rows");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.points.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    rng.shuffle(order);
    order.resize(static_cast<std::size_t>(n));
    std::sort(order.begin(), order.end());

    EmbeddingDataset out;
    out.points.resize(n, ds.points.cols());
    if (ds.labels) out.labels.emplace(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        out.points.row(i) = ds.points.row(order[static_cast<std::size_t>(i)]);
        if (ds.labels)
            (*out.labels)[static_cast<std::size_t>(i)] =
                (*ds.labels)[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    return out;
}

} // namespace dpgs
