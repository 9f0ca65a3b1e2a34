#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "dpgs/errors.hpp"
#include "dpgs/mlp.hpp"
#include "dpgs/model_io.hpp"
#include "dpgs/pipeline.hpp"

using namespace dpgs;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "dpgs_model_io_tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

GmmModel demo_model(std::uint64_t seed, bool full_cov) {
    RngStream rng(seed);
    GmmModel m;
    m.weights.resize(2);
    m.weights << 0.6, 0.4;
    m.means.resize(2, 3);
    for (Eigen::Index i = 0; i < m.means.size(); ++i) m.means.data()[i] = rng.normal();
    if (full_cov) {
        Matrix a(3, 3);
        for (Eigen::Index i = 0; i < 9; ++i) a.data()[i] = rng.normal();
        Matrix cov = a * a.transpose() + 0.1 * Matrix::Identity(3, 3);
        m.covariances.push_back(Covariance::full(Matrix(0.5 * (cov + cov.transpose()))));
    } else {
        m.covariances.push_back(Covariance::diagonal(
            (Vector(3) << 0.5, 1.5, 2.5).finished()));
    }
    m.covariances.push_back(Covariance::diagonal(Vector::Ones(3)));
    m.degenerate = {0, 1};
    m.validate();
    return m;
}

ModelFile demo_file() {
    ModelFile file;
    file.models.emplace_back(0, demo_model(1, false));
    file.models.emplace_back(1, demo_model(2, true));
    file.budget = {1.0, 1e-5};
    file.shares = {1.0, 1.0, 1.0, 1.0, 1.0};
    return file;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("model container round trips exactly") {
    auto file = demo_file();
    auto path = temp_path("models.bin");
    save_models(path, file);
    auto back = load_models(path);

    CHECK(back.budget.epsilon == file.budget.epsilon);
    CHECK(back.budget.delta == file.budget.delta);
    REQUIRE(back.shares.size() == 5);
    REQUIRE(back.models.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.models[i].first == file.models[i].first);
        const auto& a = file.models[i].second;
        const auto& b = back.models[i].second;
        CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.means - b.means).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(a.covariances.size() == b.covariances.size());
        for (std::size_t j = 0; j < a.covariances.size(); ++j) {
            CHECK(a.covariances[j].model == b.covariances[j].model);
            CHECK(a.covariances[j].frobenius_distance(b.covariances[j]) == 0.0);
        }
        CHECK(a.degenerate == b.degenerate);
    }
}

TEST_CASE("a non-private model file round trips its sentinel budget") {
    ModelFile file;
    file.models.emplace_back(0, demo_model(3, false));
    file.budget = PrivacyBudget::non_private();
    file.shares = {1.0, 1.0, 1.0, 1.0, 1.0};
    auto path = temp_path("np.bin");
    save_models(path, file);
    CHECK(load_models(path).budget.is_non_private());
}

TEST_CASE("model container rejects corruption") {
    auto path = temp_path("target.bin");
    save_models(path, demo_file());
    std::string data = slurp(path);

    auto write_bytes = [&](const std::string& name, const std::string& bytes) {
        auto p = temp_path(name);
        std::ofstream(p, std::ios::binary) << bytes;
        return p;
    };

    std::string bad_magic = data;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_models(write_bytes("badmagic.bin", bad_magic)), ParseError);

    std::string bad_version = data;
    bad_version[4] = 99;
    CHECK_THROWS_AS(load_models(write_bytes("badversion.bin", bad_version)), ParseError);

    CHECK_THROWS_AS(load_models(write_bytes("short.bin", data.substr(0, data.size() - 9))),
                    ParseError);
    CHECK_THROWS_AS(load_models(write_bytes("tiny.bin", data.substr(0, 6))), ParseError);
    CHECK_THROWS_AS(load_models(temp_path("nothere.bin")), IoError);
}

TEST_CASE("classifier container round trips exactly") {
    RngStream rng(41);
    EmbeddingDataset train;
    train.points.resize(40, 2);
    std::vector<std::int32_t> labels;
    for (Eigen::Index i = 0; i < 40; ++i) {
        bool second = i >= 20;
        train.points(i, 0) = (second ? 5.0 : 0.0) + 0.3 * rng.normal();
        train.points(i, 1) = 0.3 * rng.normal();
        labels.push_back(second ? 1 : 0);
    }
    train.labels = std::move(labels);
    MlpConfig cfg;
    cfg.hidden = 6;
    cfg.epochs = 4;
    MlpModel model = train_mlp(train, cfg, rng);

    auto path = temp_path("mlp.bin");
    save_mlp(path, model);
    MlpModel back = load_mlp(path);
    CHECK((back.w1 - model.w1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.w2 - model.w2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.b1 - model.b1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.b2 - model.b2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.norm_mean - model.norm_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.norm_std - model.norm_std).cwiseAbs().maxCoeff() == 0.0);
    CHECK(evaluate(back, train) == evaluate(model, train));

    std::string data = slurp(path);
    auto bad = temp_path("mlp_bad.bin");
    std::ofstream(bad, std::ios::binary) << data.substr(0, data.size() / 2);
    CHECK_THROWS_AS(load_mlp(bad), ParseError);
}

TEST_CASE("key-value files skip comments and flag duplicates") {
    auto path = temp_path("config.cfg");
    std::ofstream(path) << "# a comment\n"
                        << "epsilon = 1.5\n"
                        << "\n"
                        << "  delta=1e-6  \n"
                        << "label = two words \n";
    auto kv = load_key_values(path);
    REQUIRE(kv.size() == 3);
    CHECK(kv.at("epsilon") == "1.5");
    CHECK(kv.at("delta") == "1e-6");
    CHECK(kv.at("label") == "two words");

    auto dup = temp_path("dup.cfg");
    std::ofstream(dup) << "a = 1\nb = 2\na = 3\n";
    try {
        load_key_values(dup);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }

    auto noeq = temp_path("noeq.cfg");
    std::ofstream(noeq) << "just some text\n";
    CHECK_THROWS_AS(load_key_values(noeq), ParseError);

    auto nokey = temp_path("nokey.cfg");
    std::ofstream(nokey) << "= 5\n";
    CHECK_THROWS_AS(load_key_values(nokey), ParseError);

    CHECK_THROWS_AS(load_key_values(temp_path("missing.cfg")), IoError);
}

TEST_CASE("run reports are deterministic and sectioned") {
    RngStream rng(51);
    EmbeddingDataset ds;
    ds.points.resize(200, 2);
    std::vector<std::int32_t> labels;
    for (Eigen::Index i = 0; i < 200; ++i) {
        bool second = i >= 100;
        ds.points(i, 0) = (second ? 8.0 : -8.0) + 0.2 * rng.normal();
        ds.points(i, 1) = 0.2 * rng.normal();
        labels.push_back(second ? 1 : 0);
    }
    ds.labels = std::move(labels);

    PipelineConfig cfg;
    cfg.budget = {1.0, 1e-5};
    cfg.kmeans.k = 1;
    cfg.kmeans.clip_radius = 9.0;
    cfg.estimator.clip_radius = 3.0;
    cfg.generations = 20;
    cfg.vote_threshold = 1.0;

    RngStream run_rng(52);
    auto report = run_pipeline(ds, cfg, run_rng);
    std::string a = format_report(report);
    std::string b = format_report(report);
    CHECK(a == b);
    CHECK(a.find("[run]") != std::string::npos);
    CHECK(a.find("[budget]") != std::string::npos);
    CHECK(a.find("[class 0]") != std::string::npos);
    CHECK(a.find("[class 1]") != std::string::npos);
    CHECK(a.find("[ledger]") != std::string::npos);
    CHECK(a.find("seed = 52") != std::string::npos);
}
