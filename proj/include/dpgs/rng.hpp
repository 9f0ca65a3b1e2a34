#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dpgs {

// Deterministic random stream. Every random choice in the library flows
// through one of these. Subroutines take independent child streams derived
// by hashing (seed, label), so adding a consumer never shifts the draws seen
// by an unrelated one and runs replay byte-for-byte from a single seed.
//
// All samplers are built from raw 64-bit engine output rather than
// std::*_distribution, which keeps sequences stable across standard library
// implementations.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed);

    // Child stream for a named subroutine. Same (seed, label) -> same stream.
    RngStream derive(std::string_view label) const;

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01();

    // Standard normal via Box-Muller (two uniforms per draw, no cached state).
    double normal();

    // Centered Laplace with the given scale, inverse CDF on one 64-bit uniform.
    double laplace(double scale);

    // Uniform over {0, ..., n-1}; n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    Eigen::VectorXd normal_vector(Eigen::Index d);

    // Uniform over the solid l2 ball of the given radius.
    Eigen::VectorXd uniform_in_ball(Eigen::Index d, double radius);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace dpgs
