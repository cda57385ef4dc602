// Power-control policies: fixed fraction policies for both problems, the
// single-slot convex program behind them, a dynamic-programming optimal
// baseline, and a greedy reference.
#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "ehdist/core.hpp"
#include "ehdist/types.hpp"

namespace ehdist {

// =============================================================================
// Fixed fraction policies
// =============================================================================

/**
 * @brief Cost-free fixed fraction policy: transmit at power q * b.
 *
 * Always feasible since q <= 1, whatever the arrival process does.
 */
inline double ffp_power(BatteryState b, double q) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("ffp_power: fraction q must be in [0,1] (got " +
                                    std::to_string(q) + ")");
    return q * b.level;
}

/**
 * @brief Fixed fraction policy with sampling cost.
 *
 * Spends the slot budget m = q * b optimally between on-time and power:
 *
 *   theta = min{ m / (eps + sqrt(eps sigma_c^2)), 1 }
 *   g     = max{ m - eps, sqrt(eps sigma_c^2) }
 *
 * The consumed energy theta * (eps + g) equals m exactly in both branches.
 * While the budget is large the sensor stays on the whole slot and scales
 * power; once the budget drops below eps + sqrt(eps sigma_c^2) the power
 * pins at sqrt(eps sigma_c^2) and the on-time shrinks instead.
 *
 * Requires eps > 0; with eps = 0 the split degenerates and callers must use
 * ffp_power (theta identically 1).
 */
inline SlotDecision ffp_with_cost(BatteryState b, double q, const SystemParams &params) {
    const double eps = params.sampling_cost;
    if (!(eps > 0.0))
        throw std::invalid_argument("ffp_with_cost: sampling_cost must be > 0; "
                                    "use ffp_power for the cost-free problem");
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("ffp_with_cost: fraction q must be in [0,1] (got " +
                                    std::to_string(q) + ")");
    const double budget = q * b.level;
    const double pinned_power = std::sqrt(eps * params.sigma_c_sq);
    const double full_on_cost = eps + pinned_power; // budget at which theta saturates
    if (budget <= full_on_cost)
        return SlotDecision{budget / full_on_cost, pinned_power};
    return SlotDecision{1.0, budget - eps};
}

// =============================================================================
// Single-slot optimum
// =============================================================================

struct SingleSlotSolution {
    SlotDecision decision;
    double value = 0.0; ///< minimal slot distortion at the given budget
};

/**
 * @brief Minimal one-slot distortion for a given energy budget.
 *
 * Solves min (1-theta) sigma_s^2 + theta sigma_s^2 / (1 + gbar/(theta sigma_c^2))
 * subject to theta * eps + gbar <= budget, 0 <= theta <= 1, where gbar is the
 * slot-averaged power. The objective is jointly convex (the second term is the
 * perspective of a convex function), the budget constraint binds, and the
 * projected stationary point gives the same closed form as ffp_with_cost.
 *
 * For eps = 0 the optimum is theta = 1, g = budget. For budget = 0 the sensor
 * stays off and the value is the full source variance.
 */
inline SingleSlotSolution single_slot_optimal(double budget, const SystemParams &params) {
    if (!(budget >= 0.0))
        throw std::invalid_argument("single_slot_optimal: budget must be >= 0 (got " +
                                    std::to_string(budget) + ")");
    const double eps = params.sampling_cost;
    if (eps == 0.0) {
        SlotDecision d{1.0, budget};
        return {d, slot_distortion(budget, params)};
    }
    if (budget == 0.0) {
        // Off for the whole slot; power value is the pinned limit, moot at theta = 0.
        SlotDecision d{0.0, std::sqrt(eps * params.sigma_c_sq)};
        return {d, params.sigma_s_sq};
    }
    SlotDecision d = ffp_with_cost(BatteryState{budget}, 1.0, params);
    return {d, slot_distortion_with_cost(d, params)};
}

// =============================================================================
// Reference policies
// =============================================================================

/// Greedy baseline for the cost-free problem: spend the whole battery.
inline double greedy_power(BatteryState b) { return b.level; }

/// Fixed fraction policy as a battery -> decision functor. Routes eps = 0 to
/// the cost-free form (theta = 1, g = q b).
struct FixedFractionPolicy {
    double q = 0.0;
    SystemParams params;

    SlotDecision operator()(BatteryState b) const {
        if (params.sampling_cost > 0.0) return ffp_with_cost(b, q, params);
        return SlotDecision{1.0, ffp_power(b, q)};
    }
};

/// Greedy functor: consume the full battery each slot. With a sampling cost
/// the full-battery budget is split optimally between on-time and power.
struct GreedyPolicy {
    SystemParams params;

    SlotDecision operator()(BatteryState b) const {
        if (params.sampling_cost > 0.0)
            return single_slot_optimal(b.level, params).decision;
        return SlotDecision{1.0, greedy_power(b)};
    }
};

// =============================================================================
// Dynamic-programming baseline
// =============================================================================

/**
 * @brief Stationary policy on a uniform battery grid, with its average cost.
 *
 * Produced by relative value iteration on the discretized battery MDP.
 * decisions[i] is the optimal split for grid level grid[i]; consumed[i] is
 * the corresponding energy draw theta * (eps + g), itself a grid point.
 */
struct PolicyTable {
    Eigen::ArrayXd grid;                  ///< battery levels, uniform on [0, B]
    std::vector<SlotDecision> decisions;  ///< one decision per grid point
    Eigen::ArrayXd consumed;              ///< energy drawn at each grid point
    double gain = 0.0;                    ///< long-run average distortion
    int iterations = 0;                   ///< value-iteration sweeps used
    double final_span = 0.0;              ///< span seminorm at termination

    /// Decision for an arbitrary level: largest grid point not above b, so the
    /// table consumption never exceeds the actual battery.
    SlotDecision decision_for(BatteryState b) const {
        if (grid.size() == 0) throw std::logic_error("empty PolicyTable");
        const double spacing = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
        auto idx = static_cast<Eigen::Index>(std::floor(b.level / spacing + 1e-12));
        idx = std::min(std::max<Eigen::Index>(idx, 0), grid.size() - 1);
        return decisions[static_cast<std::size_t>(idx)];
    }

    /// CSV columns: battery_level, theta, power, consumed.
    void write_csv(std::ostream &out) const;
};

/// Table policy functor for simulating a solved PolicyTable.
struct TablePolicy {
    const PolicyTable *table = nullptr;

    SlotDecision operator()(BatteryState b) const { return table->decision_for(b); }
};

/**
 * @brief Optimal stationary policy of the battery MDP via relative value iteration.
 *
 * State: battery level on a uniform grid of grid_size points spanning [0, B].
 * Action: energy consumption on the grid, at most the current level. Stage
 * cost: the single-slot optimum at that consumption. Next level projects to
 * the nearest grid point (exact for Bernoulli battery-filling arrivals).
 * Iteration stops when the span seminorm of successive value differences
 * drops below span_tol; the gain estimate is the midpoint of the span bracket.
 *
 * Only finite-support models are accepted. Throws ConvergenceError if the
 * span has not closed after iteration_cap sweeps.
 */
PolicyTable dp_optimal_policy(const ArrivalModel &model, const SystemParams &params,
                              int grid_size = 2000, double span_tol = 1e-7,
                              int iteration_cap = 100000);

} // namespace ehdist
