// Battery dynamics and per-slot distortion arithmetic.
//
// Conventions: rates use the natural logarithm, so a Gaussian source sent at
// rate r = (1/2) ln(1 + g / sigma_c^2) is reconstructed with mean squared
// error sigma_s^2 exp(-2 r) = sigma_s^2 / (1 + g / sigma_c^2). All slot
// durations are normalized to one time unit.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ehdist/types.hpp"

namespace ehdist {

/**
 * @brief One-slot battery update.
 *
 * Next level is min(b - consumed + arrival, B): whatever is not spent plus
 * the fresh arrival, clipped at capacity. Consumption beyond the current
 * level (past a small drift tolerance) signals a buggy policy and throws
 * EnergyCausalityError.
 */
inline BatteryState step_battery(BatteryState b, double consumed, double arrival,
                                 const SystemParams &params) {
    const double B = params.battery_capacity;
    if (!(consumed >= 0.0))
        throw std::invalid_argument("step_battery: consumed must be >= 0");
    if (!(arrival >= 0.0) || arrival > B * (1.0 + 1e-12))
        throw std::invalid_argument("step_battery: arrival must be in [0, B]");
    if (consumed > b.level + params.feasibility_tol())
        throw EnergyCausalityError(consumed, b.level);

    double next = std::min(b.level - consumed + arrival, B);
    if (next < 0.0) next = 0.0; // drift within tolerance only
    return BatteryState{next};
}

/**
 * @brief Distortion of one slot spent transmitting at power g.
 *
 * Equals sigma_s^2 / (1 + g / sigma_c^2): strictly decreasing and convex
 * in g, with value sigma_s^2 at g = 0.
 */
inline double slot_distortion(double power, const SystemParams &params) {
    if (!(power >= 0.0))
        throw std::invalid_argument("slot_distortion: power must be >= 0 (got " +
                                    std::to_string(power) + ")");
    return params.sigma_s_sq / (1.0 + power / params.sigma_c_sq);
}

/**
 * @brief Distortion of a slot with on-fraction theta.
 *
 * The sensor is off for a (1 - theta) portion of the slot, contributing the
 * full source variance, and transmits at power g for the rest:
 * (1 - theta) sigma_s^2 + theta sigma_s^2 / (1 + g / sigma_c^2).
 */
inline double slot_distortion_with_cost(const SlotDecision &d, const SystemParams &params) {
    if (!(d.theta >= 0.0 && d.theta <= 1.0))
        throw std::invalid_argument("slot_distortion_with_cost: theta must be in [0,1] (got " +
                                    std::to_string(d.theta) + ")");
    return (1.0 - d.theta) * params.sigma_s_sq + d.theta * slot_distortion(d.power, params);
}

} // namespace ehdist
