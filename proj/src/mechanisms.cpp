#include "dpgs/mechanisms.hpp"

#include <cmath>

#include "dpgs/errors.hpp"

namespace dpgs {

Vector laplace_mechanism(const Vector& value, double l1_sensitivity,
                         const PrivacyBudget& budget, RngStream& rng) {
    budget.validate();
    if (!(l1_sensitivity > 0.0) || std::isinf(l1_sensitivity))
        throw ContractError("laplace_mechanism: sensitivity must be positive and finite");
    if (budget.is_non_private()) return value;

    double scale = l1_sensitivity / budget.epsilon;
    Vector out = value;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += rng.laplace(scale);
    return out;
}

double laplace_mechanism(double value, double l1_sensitivity, const PrivacyBudget& budget,
                         RngStream& rng) {
    Vector v(1);
    v[0] = value;
    return laplace_mechanism(v, l1_sensitivity, budget, rng)[0];
}

double gaussian_sigma(double l2_sensitivity, const PrivacyBudget& budget) {
    budget.validate();
    if (!(l2_sensitivity > 0.0) || std::isinf(l2_sensitivity))
        throw ContractError("gaussian_sigma: sensitivity must be positive and finite");
    if (budget.is_non_private()) return 0.0;
    if (budget.epsilon >= 1.0)
        throw ConfigError(
            "gaussian_mechanism: calibration needs epsilon < 1; split the budget first");
    if (budget.delta <= 0.0)
        throw ConfigError("gaussian_mechanism: needs delta > 0");
    return l2_sensitivity * std::sqrt(2.0 * std::log(1.25 / budget.delta)) / budget.epsilon;
}

Vector gaussian_mechanism(const Vector& value, double l2_sensitivity,
                          const PrivacyBudget& budget, RngStream& rng) {
    if (budget.is_non_private()) {
        budget.validate();
        return value;
    }
    double sigma = gaussian_sigma(l2_sensitivity, budget);
    Vector out = value;
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sigma * rng.normal();
    return out;
}

} // namespace dpgs
