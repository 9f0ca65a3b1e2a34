#include "dpgs/rng.hpp"

#include <cmath>
#include <numbers>

#include "dpgs/errors.hpp"

namespace dpgs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RngStream RngStream::derive(std::string_view label) const {
    return RngStream(splitmix64(seed_ ^ fnv1a(label)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    // u1 shifted away from zero so the log stays finite.
    double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::laplace(double scale) {
    if (!(scale > 0.0)) throw ContractError("laplace: scale must be positive");
    // p uniform on (-1/2, 1/2); inverse CDF of the unit Laplace at p + 1/2.
    double p = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53 - 0.5;
    return p < 0.0 ? scale * std::log1p(2.0 * p) : -scale * std::log1p(-2.0 * p);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    if (n == 0) throw ContractError("uniform_index: n must be positive");
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
}

Eigen::VectorXd RngStream::uniform_in_ball(Eigen::Index d, double radius) {
    if (d <= 0) throw ContractError("uniform_in_ball: dimension must be positive");
    if (!(radius > 0.0)) throw ContractError("uniform_in_ball: radius must be positive");
    Eigen::VectorXd dir = normal_vector(d);
    double norm = dir.norm();
    while (norm == 0.0) {
        dir = normal_vector(d);
        norm = dir.norm();
    }
    double r = radius * std::pow(uniform01(), 1.0 / static_cast<double>(d));
    return dir * (r / norm);
}

} // namespace dpgs
