// Test-side oracles, independent of the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>

#include "ehdist/types.hpp"

namespace oracles {

struct SlotSplit {
    double theta = 0.0;
    double power = 0.0;
    double value = 0.0;
};

// Brute-force single-slot optimum: scan theta on a uniform grid, spend the
// whole budget as theta*eps + gbar, and evaluate the raw objective
// (1-theta) s2 + theta s2 / (1 + gbar / (theta c2)).
inline SlotSplit grid_search_single_slot(double budget, const ehdist::SystemParams &params,
                                         double step = 1e-5) {
    const double s2 = params.sigma_s_sq;
    const double c2 = params.sigma_c_sq;
    const double eps = params.sampling_cost;
    SlotSplit best{0.0, 0.0, s2};
    if (budget <= 0.0) return best;
    const double theta_max = eps > 0.0 ? std::min(1.0, budget / eps) : 1.0;
    auto evaluate = [&](double theta) {
        const double gbar = budget - theta * eps;
        if (theta <= 0.0 || gbar < 0.0) return;
        const double value = (1.0 - theta) * s2 + theta * s2 / (1.0 + gbar / (theta * c2));
        if (value < best.value) best = {theta, gbar / theta, value};
    };
    for (double theta = step; theta < theta_max; theta += step) evaluate(theta);
    evaluate(theta_max);
    return best;
}

// Renewal-reward series for the fixed fraction policy under Bernoulli(p)
// battery-filling arrivals, evaluated in extended precision with an
// explicit per-slot value function.
template <class SlotValue>
long double renewal_series(double p, double mu, double sigma_s_sq, SlotValue &&slot_value,
                           long double tol = 1e-16L) {
    if (p <= 0.0) return sigma_s_sq;
    long double sum = 0.0L;
    long double weight = 1.0L;
    for (int t = 1; t < 100000; ++t) {
        sum += weight * static_cast<long double>(slot_value(static_cast<double>(weight) * mu));
        weight *= (1.0L - static_cast<long double>(p));
        if (weight * sigma_s_sq < tol) break;
    }
    return static_cast<long double>(p) * sum;
}

// Long-run distortion of the greedy policy under Bernoulli(p) battery-filling
// arrivals: the battery is either full (just recharged) or empty, a two-state
// chain with stationary mass p on "full".
inline double greedy_bernoulli_value(double p, const ehdist::SystemParams &params) {
    const double B = params.battery_capacity;
    const double full = params.sigma_s_sq / (1.0 + B / params.sigma_c_sq);
    return p * full + (1.0 - p) * params.sigma_s_sq;
}

} // namespace oracles
