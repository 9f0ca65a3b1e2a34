#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dpgs/errors.hpp"
#include "dpgs/mechanisms.hpp"

using namespace dpgs;

namespace {

double laplace_cdf(double x, double b) {
    return x < 0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

// Kolmogorov-Smirnov statistic against a continuous CDF.
double ks_statistic(std::vector<double> xs, double (*cdf)(double, double), double param) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i], param);
        worst = std::max(worst, std::abs(f - static_cast<double>(i) / n));
        worst = std::max(worst, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return worst;
}

} // namespace

TEST_CASE("laplace mechanism noise matches its distribution (KS < 0.01 at 1e5 draws)") {
    RngStream rng(101);
    const double sensitivity = 2.0, epsilon = 0.5;
    const double scale = sensitivity / epsilon;
    std::vector<double> noise;
    noise.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
        noise.push_back(laplace_mechanism(0.0, sensitivity, {epsilon, 0.0}, rng));
    }
    CHECK(ks_statistic(std::move(noise), laplace_cdf, scale) < 0.01);
}

TEST_CASE("laplace mechanism centers on the value") {
    RngStream rng(103);
    double sum = 0;
    for (int i = 0; i < 50000; ++i) {
        sum += laplace_mechanism(7.0, 1.0, {1.0, 0.0}, rng);
    }
    CHECK(sum / 50000 == doctest::Approx(7.0).epsilon(0.01));
}

TEST_CASE("gaussian sigma follows the analytic calibration") {
    const double sens = 3.0, eps = 0.4, delta = 1e-6;
    double expected = sens * std::sqrt(2.0 * std::log(1.25 / delta)) / eps;
    CHECK(gaussian_sigma(sens, {eps, delta}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gaussian mechanism empirical std within 2% at 1e5 draws") {
    RngStream rng(107);
    const double sens = 1.5, eps = 0.3, delta = 1e-5;
    const double sigma = gaussian_sigma(sens, {eps, delta});
    const int n = 100000;
    Vector zero = Vector::Zero(1);
    double sq = 0, sum = 0;
    for (int i = 0; i < n; ++i) {
        double x = gaussian_mechanism(zero, sens, {eps, delta}, rng)[0];
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double std_dev = std::sqrt(sq / n - mean * mean);
    CHECK(std_dev == doctest::Approx(sigma).epsilon(0.02));
}

TEST_CASE("gaussian mechanism rejects epsilon >= 1") {
    RngStream rng(109);
    Vector v = Vector::Zero(2);
    CHECK_THROWS_AS(gaussian_mechanism(v, 1.0, {1.0, 1e-5}, rng), ConfigError);
    CHECK_THROWS_AS(gaussian_mechanism(v, 1.0, {2.0, 1e-5}, rng), ConfigError);
    CHECK_NOTHROW(gaussian_mechanism(v, 1.0, {0.999, 1e-5}, rng));
}

TEST_CASE("gaussian mechanism requires positive delta") {
    RngStream rng(113);
    Vector v = Vector::Zero(2);
    CHECK_THROWS_AS(gaussian_mechanism(v, 1.0, {0.5, 0.0}, rng), ConfigError);
}

TEST_CASE("non-private budgets pass values through unchanged") {
    RngStream rng(127);
    Vector v(3);
    v << 1.0, -2.0, 3.5;
    Vector lap = laplace_mechanism(v, 1.0, PrivacyBudget::non_private(), rng);
    Vector gau = gaussian_mechanism(v, 1.0, PrivacyBudget::non_private(), rng);
    CHECK((lap - v).norm() == 0.0);
    CHECK((gau - v).norm() == 0.0);
    CHECK(laplace_mechanism(4.2, 1.0, PrivacyBudget::non_private(), rng) == 4.2);
}

TEST_CASE("vector laplace noises each coordinate independently") {
    RngStream rng(131);
    Vector v = Vector::Zero(4);
    Vector out = laplace_mechanism(v, 1.0, {0.5, 0.0}, rng);
    REQUIRE(out.size() == 4);
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            CHECK(out[i] != out[j]);
        }
    }
}
