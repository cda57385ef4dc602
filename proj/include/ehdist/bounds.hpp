// Analytic lower bounds on the optimal long-run distortion, the renewal-exact
// evaluation of the fixed fraction policy under Bernoulli arrivals, and the
// additive gap constants.
#pragma once

#include <stdexcept>
#include <string>

#include "ehdist/policies.hpp"
#include "ehdist/types.hpp"

namespace ehdist {

/**
 * @brief Cost-free lower bound f(mu) = sigma_s^2 / (1 + mu / sigma_c^2).
 *
 * No policy, online or offline, beats the distortion of spending the mean
 * harvest rate every slot.
 */
inline double lower_bound_no_cost(double mu, const SystemParams &params) {
    if (!(mu >= 0.0))
        throw std::invalid_argument("lower_bound_no_cost: mu must be >= 0 (got " +
                                    std::to_string(mu) + ")");
    return params.sigma_s_sq / (1.0 + mu / params.sigma_c_sq);
}

/// Lower bound with sampling cost: the single-slot optimum at budget mu.
/// Collapses to lower_bound_no_cost when the cost is zero.
inline double lower_bound_with_cost(double mu, const SystemParams &params) {
    if (!(mu >= 0.0))
        throw std::invalid_argument("lower_bound_with_cost: mu must be >= 0 (got " +
                                    std::to_string(mu) + ")");
    return single_slot_optimal(mu, params).value;
}

namespace detail {

/// Iteration cap for the geometric renewal series. Generous: p >= 1e-6
/// truncates after a few tens of millions of terms at worst.
inline constexpr long long kRenewalTermCap = 10'000'000;

/**
 * Renewal-reward evaluation of the fixed fraction policy under Bernoulli
 * battery-filling arrivals. Each arrival refills the battery and restarts the
 * process; between arrivals the level decays as (1-p)^(t-1) B, so the slot
 * budget is (1-p)^(t-1) mu and the cycle average becomes
 *
 *   p * sum_{t>=1} (1-p)^(t-1) * slot_value((1-p)^(t-1) mu)
 *
 * using E[sum_{t=1}^L x_t] = sum_t (1-p)^{t-1} x_t for the geometric
 * inter-arrival time L with E[L] = 1/p. The series is truncated once the
 * crude tail bound sigma_s^2 (1-p)^T / p falls below tail_tol.
 */
template <class SlotValue>
double renewal_series(double p, double mu, const SystemParams &params, double tail_tol,
                      SlotValue &&slot_value) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("renewal series: p must be in [0,1] (got " +
                                    std::to_string(p) + ")");
    if (!(tail_tol > 0.0))
        throw std::invalid_argument("renewal series: tail_tol must be > 0");
    if (p == 0.0) return params.sigma_s_sq; // degenerate: no arrivals ever

    double sum = 0.0;
    double weight = 1.0; // (1-p)^(t-1)
    for (long long t = 1; t <= kRenewalTermCap; ++t) {
        sum += weight * slot_value(weight * mu);
        weight *= (1.0 - p);
        if (params.sigma_s_sq * weight / p < tail_tol) break;
    }
    return p * sum;
}

} // namespace detail

/**
 * @brief Exact long-run FFP distortion under Bernoulli(p) battery-filling arrivals.
 *
 * p = 0 is degenerate (the battery never recharges) and returns the full
 * source variance rather than erroring, so parameter sweeps stay branch-free.
 */
inline double bernoulli_renewal_ffp(double p, const SystemParams &params,
                                    double tail_tol = 1e-12) {
    const double mu = p * params.battery_capacity;
    return detail::renewal_series(p, mu, params, tail_tol,
                                  [&](double budget) { return slot_distortion(budget, params); });
}

/// Renewal-exact FFP distortion with sampling cost: each slot contributes the
/// single-slot optimum at its decayed budget. Identical to
/// bernoulli_renewal_ffp when the cost is zero.
inline double bernoulli_renewal_ffp_with_cost(double p, const SystemParams &params,
                                              double tail_tol = 1e-12) {
    const double mu = p * params.battery_capacity;
    return detail::renewal_series(p, mu, params, tail_tol, [&](double budget) {
        return single_slot_optimal(budget, params).value;
    });
}

// =============================================================================
// Gap constants
// =============================================================================

struct GapTerms {
    double bern_gap_term = 0.0; ///< sigma_s^2 (1-p)/(2-p), the exact Bernoulli term
    double gap_bound = 0.0;     ///< sigma_s^2 / 2, its supremum over p
};

/// Additive gap terms: p(1-p)/(1-(1-p)^2) simplifies to (1-p)/(2-p), which
/// increases to 1/2 as p -> 0.
inline GapTerms gap_terms(double p, const SystemParams &params) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("gap_terms: p must be in [0,1] (got " +
                                    std::to_string(p) + ")");
    return GapTerms{params.sigma_s_sq * (1.0 - p) / (2.0 - p), 0.5 * params.sigma_s_sq};
}

// =============================================================================
// Bound report
// =============================================================================

/// Bundle of the bounds for one configuration. Satisfies
/// lower <= renewal_value <= lower + gap_bound, with bern_gap_term <= gap_bound.
struct BoundReport {
    double lower = 0.0;
    double renewal_value = 0.0;
    double bern_gap_term = 0.0;
    double gap_bound = 0.0;
};

/// Evaluate all bounds for Bernoulli(p) battery-filling arrivals, picking the
/// cost-aware forms when params.sampling_cost > 0.
inline BoundReport bound_report(double p, const SystemParams &params,
                                double tail_tol = 1e-12) {
    const double mu = p * params.battery_capacity;
    BoundReport r;
    if (params.sampling_cost > 0.0) {
        r.lower = lower_bound_with_cost(mu, params);
        r.renewal_value = bernoulli_renewal_ffp_with_cost(p, params, tail_tol);
    } else {
        r.lower = lower_bound_no_cost(mu, params);
        r.renewal_value = bernoulli_renewal_ffp(p, params, tail_tol);
    }
    const GapTerms g = gap_terms(p, params);
    r.bern_gap_term = g.bern_gap_term;
    r.gap_bound = g.gap_bound;
    return r;
}

} // namespace ehdist
