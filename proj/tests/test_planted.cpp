#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dpgs/errors.hpp"
#include "dpgs/kmeans.hpp"
#include "dpgs/sweep.hpp"

using namespace dpgs;

TEST_CASE("simplex placement has exactly equal pairwise separations") {
    PlantedGmmSpec spec;
    spec.classes = 2;
    spec.k = 3;
    spec.d = 8;
    spec.n_per_class = 100;
    spec.delta_sep = 12.0;
    spec.sigma = 0.5;
    RngStream rng(1);
    auto inst = plant_gmm(spec, rng);

    REQUIRE(inst.truths.size() == 2);
    Matrix joint(6, 8);
    for (int c = 0; c < 2; ++c) {
        REQUIRE(inst.truths[c].components() == 3);
        joint.middleRows(3 * c, 3) = inst.truths[c].means;
    }
    for (int a = 0; a < 6; ++a) {
        for (int b = a + 1; b < 6; ++b) {
            CHECK((joint.row(a) - joint.row(b)).norm() == doctest::Approx(12.0).epsilon(1e-9));
        }
    }
    CHECK(joint.colwise().mean().norm() < 1e-9);
    // Centered regular simplex on m vertices has circumradius
    // edge * sqrt((m - 1) / (2 m)).
    double circumradius = 12.0 * std::sqrt(5.0 / 12.0);
    for (int a = 0; a < 6; ++a) {
        CHECK(joint.row(a).norm() == doctest::Approx(circumradius).epsilon(1e-9));
    }

    CHECK(inst.separation.delta_sep == doctest::Approx(12.0));
    CHECK(inst.separation.mean_diameter == doctest::Approx(12.0));
    CHECK(inst.separation.sigma_max == doctest::Approx(0.5));
}

TEST_CASE("simplex placement needs at most d+1 means") {
    PlantedGmmSpec spec;
    spec.classes = 2;
    spec.k = 3;
    spec.d = 4;
    spec.n_per_class = 10;
    spec.delta_sep = 1.0;
    RngStream rng(1);
    CHECK_THROWS_AS(plant_gmm(spec, rng), ConfigError);
}

TEST_CASE("ball placement reaches the separation or gives up") {
    PlantedGmmSpec spec;
    spec.classes = 1;
    spec.k = 3;
    spec.d = 3;
    spec.n_per_class = 50;
    spec.placement = PlantedGmmSpec::Placement::random_ball;
    spec.mean_radius = 10.0;
    spec.delta_sep = 2.0;
    RngStream rng(2);
    auto inst = plant_gmm(spec, rng);
    const Matrix& means = inst.truths[0].means;
    for (int a = 0; a < 3; ++a) {
        CHECK(means.row(a).norm() <= 10.0 + 1e-12);
        for (int b = a + 1; b < 3; ++b) {
            CHECK((means.row(a) - means.row(b)).norm() >= 2.0);
        }
    }

    spec.delta_sep = 100.0;
    CHECK_THROWS_AS(plant_gmm(spec, rng), ConfigError);
}

TEST_CASE("coincident means are allowed for control runs") {
    PlantedGmmSpec spec;
    spec.classes = 1;
    spec.k = 2;
    spec.d = 2;
    spec.n_per_class = 100;
    spec.delta_sep = 0.0;
    RngStream rng(3);
    auto inst = plant_gmm(spec, rng);
    CHECK((inst.truths[0].means.row(0) - inst.truths[0].means.row(1)).norm() == 0.0);
    CHECK(inst.separation.delta_sep == 0.0);
}

TEST_CASE("labels group by class and components stay in range") {
    auto spec = PlantedGmmSpec::desk_reference();
    spec.n_per_class = 500;
    RngStream rng(4);
    auto inst = plant_gmm(spec, rng);
    REQUIRE(inst.data.rows() == 1000);
    REQUIRE(inst.data.has_labels());
    CHECK(std::is_sorted(inst.data.labels->begin(), inst.data.labels->end()));
    CHECK((*inst.data.labels)[0] == 0);
    CHECK((*inst.data.labels)[999] == 1);
    REQUIRE(inst.components.size() == 1000);
    for (auto c : inst.components) {
        CHECK(c >= 0);
        CHECK(c < 3);
    }
}

TEST_CASE("per-component counts sit inside their concentration window across seeds") {
    PlantedGmmSpec spec;
    spec.classes = 1;
    spec.k = 2;
    spec.d = 2;
    spec.n_per_class = 100000;
    spec.delta_sep = 10.0;
    spec.weights.resize(2);
    spec.weights << 0.7, 0.3;

    int flagged = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        RngStream rng(s);
        auto inst = plant_gmm(spec, rng);
        flagged += inst.count_flagged ? 1 : 0;

        Eigen::Index first = 0;
        for (auto c : inst.components) first += c == 0;
        double n = 100000.0, w = 0.7;
        double window = 3.0 * std::sqrt(3.0 * n * w * (1.0 - w) * std::log(2000.0));
        CHECK(std::abs(static_cast<double>(first) - n * w) <= window);
    }
    CHECK(flagged == 0);
}

TEST_CASE("recovery of the exact truth is error free") {
    auto spec = PlantedGmmSpec::desk_reference();
    spec.n_per_class = 300;
    RngStream rng(5);
    auto inst = plant_gmm(spec, rng);

    // Perfect assignment: the generating component, for class 0's slice.
    std::vector<std::int32_t> assignment(inst.components.begin(),
                                         inst.components.begin() + 300);
    auto errs = measure_recovery(inst.truths[0], inst.truths[0], assignment, assignment);
    CHECK_FALSE(errs.structural_failure);
    CHECK(errs.weight_l1 == 0.0);
    CHECK(errs.mean_l2_max == 0.0);
    CHECK(errs.cov_frobenius_max == 0.0);
    CHECK(errs.purity == 1.0);
    CHECK(errs.wasserstein_bound == 0.0);
}

TEST_CASE("component count mismatch is a structural failure") {
    auto spec = PlantedGmmSpec::desk_reference();
    spec.n_per_class = 200;
    RngStream rng(6);
    auto inst = plant_gmm(spec, rng);

    GmmModel two;
    two.weights.resize(2);
    two.weights << 0.5, 0.5;
    two.means = inst.truths[0].means.topRows(2);
    two.covariances = {inst.truths[0].covariances[0], inst.truths[0].covariances[1]};

    std::vector<std::int32_t> assignment(200, 0);
    std::vector<std::int32_t> components(inst.components.begin(),
                                         inst.components.begin() + 200);
    auto errs = measure_recovery(inst.truths[0], two, assignment, components);
    CHECK(errs.structural_failure);
    CHECK(std::isnan(errs.weight_l1));
    CHECK(std::isnan(errs.mean_l2_max));
    CHECK(std::isnan(errs.purity));
}

TEST_CASE("spec validation") {
    PlantedGmmSpec spec;
    spec.classes = 0;
    CHECK_THROWS_AS(spec.validate(), ContractError);
    spec = PlantedGmmSpec{};
    spec.sigma = 0.0;
    CHECK_THROWS_AS(spec.validate(), ContractError);
    spec = PlantedGmmSpec{};
    spec.weights.resize(3);
    spec.weights << 0.5, 0.4, 0.2;
    spec.k = 3;
    spec.d = 4;
    CHECK_THROWS_AS(spec.validate(), ContractError);
    CHECK_NOTHROW(PlantedGmmSpec::desk_reference().validate());
}

TEST_CASE("a small sweep fills the grid deterministically") {
    SweepGrid grid;
    grid.ks = {2};
    grid.clips = {6.0};
    grid.epsilons = {std::numeric_limits<double>::infinity(), 1.0};
    grid.seeds = {1, 2};

    SweepOptions opt;
    opt.spec.classes = 2;
    opt.spec.k = 2;
    opt.spec.d = 3;
    opt.spec.n_per_class = 4000;
    opt.spec.sigma = 0.5;
    opt.spec.delta_sep = 30.0 * 0.5 * std::sqrt(3.0);
    opt.spec.weights = Vector();
    opt.cov_clip = 2.0;
    opt.train_classifiers = false;

    auto result = run_sweep(grid, opt);
    REQUIRE(result.rows.size() == 4);
    REQUIRE(result.summaries.size() == 2);

    CHECK(result.rows[0].epsilon == std::numeric_limits<double>::infinity());
    CHECK(result.rows[0].seed == 1);
    CHECK(result.rows[1].seed == 2);
    CHECK(result.rows[2].epsilon == 1.0);
    for (const auto& row : result.rows) {
        CHECK_FALSE(row.failed);
        CHECK(std::isnan(row.acc_synth));
    }
    CHECK(result.rows[0].errors.purity == 1.0);
    CHECK(result.rows[1].errors.purity == 1.0);
    CHECK(result.rows[2].errors.purity >= 0.99);
    CHECK(result.rows[3].errors.purity >= 0.99);
    // Noise can only hurt the medians.
    CHECK(result.summaries[0].median.mean_l2_max <= result.summaries[1].median.mean_l2_max);
    CHECK(result.summaries[0].seeds_used == 2);

    opt.jobs = 3;
    auto parallel = run_sweep(grid, opt);
    CHECK(format_sweep_tsv(parallel) == format_sweep_tsv(result));
    CHECK(format_sweep_summary(parallel) == format_sweep_summary(result));
}

TEST_CASE("sweep tables carry the full column set") {
    SweepGrid grid;
    grid.ks = {2};
    grid.clips = {6.0};
    grid.epsilons = {std::numeric_limits<double>::infinity()};
    grid.seeds = {1};

    SweepOptions opt;
    opt.spec.classes = 2;
    opt.spec.k = 2;
    opt.spec.d = 3;
    opt.spec.n_per_class = 600;
    opt.spec.sigma = 0.5;
    opt.spec.delta_sep = 22.0;
    opt.spec.weights = Vector();
    opt.test_per_class = 300;
    opt.generations = 300;
    opt.mlp.epochs = 60;
    opt.mlp.batch = 32;
    opt.mlp.hidden = 64;

    auto result = run_sweep(grid, opt);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].acc_synth > 0.9);
    CHECK(result.rows[0].acc_real > 0.9);

    std::istringstream tsv(format_sweep_tsv(result));
    std::string header;
    std::getline(tsv, header);
    CHECK(header ==
          "k\tclip\tepsilon\tseed\tweight_l1\tmean_l2_max\tcov_fro_max\tpurity\tw_bound\t"
          "acc_synth\tacc_real");
    std::string row;
    std::getline(tsv, row);
    CHECK(std::count(row.begin(), row.end(), '\t') == 10);

    std::istringstream summary(format_sweep_summary(result));
    std::getline(summary, header);
    std::string median_line, mad_line;
    std::getline(summary, median_line);
    std::getline(summary, mad_line);
    CHECK(median_line.find("median") != std::string::npos);
    CHECK(mad_line.find("mad") != std::string::npos);

    SweepGrid bad;
    CHECK_THROWS_AS(run_sweep(bad, opt), ContractError);
}
