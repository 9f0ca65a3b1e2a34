#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpgs/errors.hpp"
#include "dpgs/pipeline.hpp"

using namespace dpgs;

namespace {

EmbeddingDataset blobs(std::uint64_t seed, Eigen::Index per_cluster, double sigma,
                       bool labeled) {
    RngStream rng(seed);
    EmbeddingDataset ds;
    ds.points.resize(2 * per_cluster, 2);
    std::vector<std::int32_t> labels;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
        bool second = i >= per_cluster;
        ds.points(i, 0) = (second ? -10.0 : 10.0) + sigma * rng.normal();
        ds.points(i, 1) = sigma * rng.normal();
        labels.push_back(second ? 1 : 0);
    }
    if (labeled) ds.labels = std::move(labels);
    return ds;
}

PipelineConfig reference_config(PrivacyBudget budget) {
    PipelineConfig cfg;
    cfg.budget = budget;
    cfg.kmeans.k = 2;
    cfg.kmeans.clip_radius = 10.5;
    cfg.kmeans.init = KMeansConfig::Init::noisy_sample;
    cfg.estimator.clip_radius = 6.0;
    cfg.estimator.cov_clip_radius = 2.0;
    return cfg;
}

} // namespace

TEST_CASE("sample_gmm honors weights and component geometry") {
    GmmModel model;
    model.weights.resize(2);
    model.weights << 0.7, 0.3;
    model.means.resize(2, 1);
    model.means << 0.0, 100.0;
    model.covariances.push_back(Covariance::diagonal(Vector::Constant(1, 4.0)));
    model.covariances.push_back(Covariance::diagonal(Vector::Constant(1, 1.0)));
    model.validate();

    RngStream rng(71);
    std::vector<std::int32_t> components;
    auto ds = sample_gmm(model, 20000, rng, components);
    REQUIRE(ds.rows() == 20000);
    REQUIRE(components.size() == 20000);

    Eigen::Index low = 0;
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
        bool near_zero = ds.points(i, 0) < 50.0;
        CHECK(near_zero == (components[i] == 0));
        if (near_zero) {
            ++low;
            sum += ds.points(i, 0);
            sq += ds.points(i, 0) * ds.points(i, 0);
        }
    }
    CHECK(low > 13700);
    CHECK(low < 14300);
    double mean = sum / static_cast<double>(low);
    CHECK(std::abs(mean) < 0.06);
    CHECK(sq / static_cast<double>(low) - mean * mean == doctest::Approx(4.0).epsilon(0.05));

    CHECK_THROWS_AS(sample_gmm(model, 0, rng), ContractError);
}

TEST_CASE("non-private fit equals the cluster-then-estimate oracle") {
    auto ds = blobs(5, 500, 0.1, false);
    auto cfg = reference_config(PrivacyBudget::non_private());

    BudgetLedger ledger(PrivacyBudget::non_private());
    RngStream rng(5);
    ClusteringResult clustering;
    GmmModel fitted = fit_private_gmm(ds, cfg, rng, ledger, {}, &clustering);

    REQUIRE(fitted.components() == 2);
    for (Eigen::Index j = 0; j < 2; ++j) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < ds.rows(); ++i) {
            if (clustering.assignment[static_cast<std::size_t>(i)] == j) idx.push_back(i);
        }
        REQUIRE(!idx.empty());

        Vector center = clustering.centers.row(j).transpose();
        Vector dev_sum = Vector::Zero(2);
        for (Eigen::Index i : idx) {
            Vector dev = ds.points.row(i).transpose() - center;
            if (dev.norm() > cfg.estimator.clip_radius) {
                dev *= cfg.estimator.clip_radius / dev.norm();
            }
            dev_sum += dev;
        }
        Vector mean = center + dev_sum / static_cast<double>(idx.size());
        CHECK((fitted.means.row(j).transpose() - mean).norm() < 1e-9);

        Vector sq_sum = Vector::Zero(2);
        for (Eigen::Index i : idx) {
            Vector dev = ds.points.row(i).transpose() - mean;
            if (dev.norm() > cfg.estimator.cov_clip()) {
                dev *= cfg.estimator.cov_clip() / dev.norm();
            }
            sq_sum += dev.cwiseProduct(dev);
        }
        Vector variances =
            (sq_sum / static_cast<double>(idx.size())).cwiseMax(cfg.estimator.variance_floor);
        CHECK((fitted.covariances[static_cast<std::size_t>(j)].diag - variances).norm() < 1e-9);

        double weight = static_cast<double>(idx.size()) / static_cast<double>(ds.rows());
        CHECK(fitted.weights[j] == doctest::Approx(weight).epsilon(1e-9));
    }
}

TEST_CASE("fit writes exactly three stage entries") {
    auto ds = blobs(6, 300, 0.1, false);
    auto cfg = reference_config({1.0, 1e-5});

    BudgetLedger plain({1.0, 1e-5});
    RngStream rng(6);
    fit_private_gmm(ds, cfg, rng, plain);
    REQUIRE(plain.entries().size() == 3);
    CHECK(plain.entries()[0].subroutine == "dp-cluster");
    CHECK(plain.entries()[1].subroutine == "dp-mean");
    CHECK(plain.entries()[2].subroutine == "dp-covariance");
    for (const auto& e : plain.entries()) {
        CHECK(e.kind == Composition::sequential);
        CHECK(e.spent.epsilon == doctest::Approx(0.2).epsilon(1e-12));
    }
    CHECK(plain.composed().epsilon == doctest::Approx(0.6).epsilon(1e-12));

    BudgetLedger tagged({1.0, 1e-5});
    RngStream rng2(6);
    fit_private_gmm(ds, cfg, rng2, tagged, "class-0");
    REQUIRE(tagged.entries().size() == 3);
    for (const auto& e : tagged.entries()) {
        CHECK(e.kind == Composition::parallel);
        CHECK(e.subroutine.find("class-0") != std::string::npos);
    }
    CHECK(tagged.entries()[0].partition == "dp-cluster");
}

TEST_CASE("vote filter counts nearest neighbors exactly when non-private") {
    EmbeddingDataset generated;
    generated.points.resize(3, 2);
    generated.points << 0.0, 0.0, 100.0, 0.0, 200.0, 0.0;

    EmbeddingDataset original;
    original.points.resize(13, 2);
    for (int i = 0; i < 10; ++i) original.points.row(i) << 0.5 + 0.01 * i, 0.0;
    for (int i = 10; i < 13; ++i) original.points.row(i) << 99.0 + 0.1 * i, 0.0;

    RngStream rng(8);
    auto res = dp_filter_embeddings(generated, original, 5.0,
                                    PrivacyBudget::non_private(), rng);
    REQUIRE(res.noisy_votes.size() == 3);
    CHECK(res.noisy_votes[0] == 10.0);
    CHECK(res.noisy_votes[1] == 3.0);
    CHECK(res.noisy_votes[2] == 0.0);
    REQUIRE(res.survivors.rows() == 1);
    CHECK(res.survivors.points(0, 0) == 0.0);
    CHECK_FALSE(res.empty_warning);

    auto both = dp_filter_embeddings(generated, original, 2.0,
                                     PrivacyBudget::non_private(), rng);
    REQUIRE(both.survivors.rows() == 2);
    CHECK(both.survivors.points(0, 0) == 0.0);
    CHECK(both.survivors.points(1, 0) == 100.0);
}

TEST_CASE("vote filter resolves equidistant originals toward the lower index") {
    EmbeddingDataset generated;
    generated.points.resize(2, 1);
    generated.points << 0.0, 100.0;
    EmbeddingDataset original;
    original.points.resize(1, 1);
    original.points << 50.0;

    RngStream rng(9);
    auto res = dp_filter_embeddings(generated, original, 0.5,
                                    PrivacyBudget::non_private(), rng);
    CHECK(res.noisy_votes[0] == 1.0);
    CHECK(res.noisy_votes[1] == 0.0);
}

TEST_CASE("vote filter reports empty survivor sets instead of failing") {
    EmbeddingDataset generated;
    generated.points.resize(2, 1);
    generated.points << 0.0, 1.0;
    EmbeddingDataset original;
    original.points.resize(4, 1);
    original.points << 0.0, 0.1, 0.9, 1.1;

    RngStream rng(10);
    auto res = dp_filter_embeddings(generated, original, 1e9,
                                    PrivacyBudget::non_private(), rng);
    CHECK(res.empty_warning);
    CHECK(res.survivors.rows() == 0);

    EmbeddingDataset none;
    none.points.resize(0, 1);
    auto empty_gen = dp_filter_embeddings(none, original, 1.0,
                                          PrivacyBudget::non_private(), rng);
    CHECK(empty_gen.empty_warning);
}

TEST_CASE("pipeline ledger composes to exactly the declared budget") {
    auto ds = blobs(11, 400, 0.1, true);
    for (bool filtering : {true, false}) {
        auto cfg = reference_config({1.0, 1e-5});
        cfg.generations = 50;
        cfg.filtering = filtering;
        cfg.vote_threshold = 2.0;
        RngStream rng(11);
        auto report = run_pipeline(ds, cfg, rng);
        auto spent = report.ledger.composed();
        CHECK(std::abs(spent.epsilon - 1.0) < 1e-12);
        CHECK(std::abs(spent.delta - 1e-5) < 1e-18);
        CHECK_NOTHROW(report.ledger.verify());
        REQUIRE(report.classes.size() == 2);
        CHECK(report.classes[0].label == 0);
        CHECK(report.classes[1].label == 1);
        CHECK(report.classes[0].generated == 300);
    }
}

TEST_CASE("pipeline requires contiguous class coverage") {
    auto ds = blobs(12, 100, 0.1, true);
    for (auto& l : *ds.labels) {
        if (l == 1) l = 2;
    }
    auto cfg = reference_config({1.0, 1e-5});
    cfg.generations = 10;
    RngStream rng(12);
    try {
        run_pipeline(ds, cfg, rng);
        FAIL("expected ContractError");
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("class 1") != std::string::npos);
    }
}

TEST_CASE("generations zero fits models without sampling") {
    auto ds = blobs(13, 200, 0.1, true);
    auto cfg = reference_config({1.0, 1e-5});
    cfg.generations = 0;
    RngStream rng(13);
    auto report = run_pipeline(ds, cfg, rng);
    CHECK(report.synthetic.rows() == 0);
    REQUIRE(report.classes.size() == 2);
    CHECK(report.classes[0].model.components() == 2);
    CHECK(report.classes[0].generated == 0);
}

TEST_CASE("synthetic labels come out grouped by ascending class") {
    auto ds = blobs(14, 300, 0.1, true);
    auto cfg = reference_config({1.0, 1e-5});
    cfg.generations = 40;
    cfg.filtering = false;
    RngStream rng(14);
    auto report = run_pipeline(ds, cfg, rng);
    REQUIRE(report.synthetic.has_labels());
    REQUIRE(report.synthetic.rows() == 480);
    CHECK(std::is_sorted(report.synthetic.labels->begin(), report.synthetic.labels->end()));
    CHECK(report.seed == 14);
}

TEST_CASE("job parallelism changes nothing observable") {
    auto ds = blobs(15, 300, 0.1, true);
    auto cfg = reference_config({1.0, 1e-5});
    cfg.generations = 30;
    cfg.vote_threshold = 1.0;

    cfg.jobs = 1;
    RngStream rng_a(15);
    auto serial = run_pipeline(ds, cfg, rng_a);

    cfg.jobs = 4;
    RngStream rng_b(15);
    auto parallel = run_pipeline(ds, cfg, rng_b);

    REQUIRE(serial.synthetic.rows() == parallel.synthetic.rows());
    CHECK((serial.synthetic.points - parallel.synthetic.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK(*serial.synthetic.labels == *parallel.synthetic.labels);
    REQUIRE(serial.classes.size() == parallel.classes.size());
    for (std::size_t c = 0; c < serial.classes.size(); ++c) {
        CHECK((serial.classes[c].model.means - parallel.classes[c].model.means)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(serial.classes[c].survivors == parallel.classes[c].survivors);
    }
}

TEST_CASE("pipeline config contracts") {
    PipelineConfig cfg;
    cfg.budget = {1.0, 1e-5};
    cfg.shares = {1.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = PipelineConfig{};
    cfg.budget = {1.0, 1e-5};
    cfg.generations = -1;
    CHECK_THROWS_AS(cfg.validate(), ContractError);
    cfg = PipelineConfig{};
    cfg.budget = {1.0, 1e-5};
    cfg.generation_multiplier = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ContractError);

    auto ds = blobs(16, 50, 0.1, false);
    auto good = reference_config({1.0, 1e-5});
    RngStream rng(16);
    CHECK_THROWS_AS(run_pipeline(ds, good, rng), ContractError);
}
