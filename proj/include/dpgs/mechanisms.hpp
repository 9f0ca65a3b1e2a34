#pragma once

#include "dpgs/budget.hpp"
#include "dpgs/dataset.hpp"
#include "dpgs/rng.hpp"

namespace dpgs {

// Adds iid Laplace(l1_sensitivity / epsilon) noise per coordinate:
// (epsilon, 0)-DP for queries with the given l1 sensitivity. A non-private
// budget returns the value unchanged.
Vector laplace_mechanism(const Vector& value, double l1_sensitivity,
                         const PrivacyBudget& budget, RngStream& rng);

double laplace_mechanism(double value, double l1_sensitivity, const PrivacyBudget& budget,
                         RngStream& rng);

// Noise scale of the Gaussian mechanism,
//   sigma = l2_sensitivity * sqrt(2 ln(1.25 / delta)) / epsilon,
// whose calibration holds for epsilon in (0, 1) and delta in (0, 1).
double gaussian_sigma(double l2_sensitivity, const PrivacyBudget& budget);

// Adds iid N(0, sigma^2) noise per coordinate with sigma as above:
// (epsilon, delta)-DP for queries with the given l2 sensitivity. Budgets with
// epsilon >= 1 are rejected with ConfigError; split them first. A non-private
// budget returns the value unchanged.
Vector gaussian_mechanism(const Vector& value, double l2_sensitivity,
                          const PrivacyBudget& budget, RngStream& rng);

} // namespace dpgs
