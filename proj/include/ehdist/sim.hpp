// Monte Carlo engine: drives a battery-feedback policy against an arrival
// model over long horizons and aggregates long-run average distortion.
//
// Determinism contract: trial i draws from a substream derived from
// (seed, i) alone, and aggregation walks trials in index order, so results
// are bit-identical across runs and across any parallelism degree.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "ehdist/bounds.hpp"
#include "ehdist/core.hpp"
#include "ehdist/policies.hpp"
#include "ehdist/rng.hpp"
#include "ehdist/types.hpp"

namespace ehdist {

struct SimConfig {
    long long horizon = 100000; ///< slots per trial
    int trials = 1;             ///< independent replications
    std::uint64_t seed = 1;     ///< master reproducibility seed
    bool record_trace = false;  ///< keep per-slot records of trial 0
    long long burn_in = 0;      ///< leading slots excluded from the average

    void validate() const {
        if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
        if (horizon <= burn_in) throw std::invalid_argument("horizon must exceed burn_in");
    }

    bool operator==(const SimConfig &) const = default;
};

struct TraceRecord {
    long long slot = 0;
    double arrival = 0.0;        ///< energy that arrived at the start of this slot
    double battery_before = 0.0; ///< level after the arrival, before consumption
    SlotDecision decision;
    double distortion = 0.0;
};

struct SimResult {
    double mean_distortion = 0.0;
    double std_error = 0.0;
    double ci95_halfwidth = 0.0; ///< 1.96 * std_error
    std::vector<double> per_trial_means;
    std::vector<TraceRecord> trace; ///< populated when record_trace is set
};

/**
 * @brief Simulate one trial of `horizon` slots.
 *
 * The battery starts full (b_1 = B, the first arrival is subsumed), then each
 * slot queries the policy, accrues the slot distortion, spends the decided
 * energy, and absorbs the next arrival clipped at capacity. Throws
 * EnergyCausalityError naming the slot if the policy overdraws.
 *
 * Returns the distortion averaged over slots after burn_in.
 */
template <class Policy>
double run_trial(const Policy &policy, const ArrivalModel &model, const SystemParams &params,
                 long long horizon, std::uint64_t seed,
                 std::vector<TraceRecord> *trace = nullptr, long long burn_in = 0) {
    params.validate();
    model.validate(params);
    if (horizon < 1) throw std::invalid_argument("run_trial: horizon must be >= 1");
    if (burn_in < 0 || burn_in >= horizon)
        throw std::invalid_argument("run_trial: burn_in must be in [0, horizon)");

    std::mt19937_64 rng(seed);
    const double feas_tol = params.feasibility_tol();

    double battery = params.battery_capacity;
    double arrival = 0.0; // slot 1's arrival is part of the full initial charge
    double acc = 0.0;
    if (trace) trace->reserve(static_cast<std::size_t>(horizon));

    for (long long t = 1; t <= horizon; ++t) {
        const SlotDecision d = policy(BatteryState{battery});
        double consumed = d.consumed(params);
        if (consumed > battery + feas_tol)
            throw EnergyCausalityError(consumed, battery, t);
        if (consumed > battery) consumed = battery;

        const double distortion = slot_distortion_with_cost(d, params);
        if (t > burn_in) acc += distortion;
        if (trace) trace->push_back({t, arrival, battery, d, distortion});

        if (t < horizon) {
            arrival = model.sample(rng);
            battery = step_battery(BatteryState{battery}, consumed, arrival, params).level;
        }
    }
    return acc / static_cast<double>(horizon - burn_in);
}

/**
 * @brief Replicated estimator: cfg.trials independent trials, aggregated.
 *
 * `threads` caps the worker count (0 picks the hardware concurrency); it has
 * no effect on the numbers, only on wall time.
 */
template <class Policy>
SimResult monte_carlo(const Policy &policy, const ArrivalModel &model,
                      const SystemParams &params, const SimConfig &cfg, int threads = 1) {
    cfg.validate();
    params.validate();
    model.validate(params);

    const int n = cfg.trials;
    std::vector<double> per_trial(static_cast<std::size_t>(n));
    std::vector<TraceRecord> trace;

    auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const std::uint64_t trial_seed =
                derive_stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
            std::vector<TraceRecord> *trace_ptr =
                (cfg.record_trace && i == 0) ? &trace : nullptr;
            per_trial[static_cast<std::size_t>(i)] =
                run_trial(policy, model, params, cfg.horizon, trial_seed, trace_ptr,
                          cfg.burn_in);
        }
    };

    int workers = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = std::min(workers, n);

    if (workers == 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
            const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
            pool.emplace_back(run_range, begin, end);
        }
        for (auto &th : pool) th.join();
    }

    SimResult result;
    result.per_trial_means = std::move(per_trial);
    result.trace = std::move(trace);

    const Eigen::Map<const Eigen::ArrayXd> means(result.per_trial_means.data(), n);
    result.mean_distortion = means.mean();
    if (n > 1) {
        const double var = (means - result.mean_distortion).square().sum() / (n - 1);
        result.std_error = std::sqrt(var / n);
    }
    result.ci95_halfwidth = 1.96 * result.std_error;
    return result;
}

// =============================================================================
// Battery sweeps
// =============================================================================

/// One sweep row: simulated policy performance plus the analytic bounds for
/// the same configuration.
struct SweepRow {
    double battery = 0.0;
    double mu = 0.0;
    double q = 0.0;
    BoundReport bounds;
    SimResult result;
};

/**
 * @brief Evaluate one policy across battery sizes.
 *
 * For each B (ascending, positive), the model and policy are rebuilt via the
 * factories, q is re-derived, and a full Monte Carlo estimate plus the bound
 * report are attached. Factories receive the per-B SystemParams; the model
 * factory runs first and its model is handed to the policy factory.
 */
template <class PolicyFactory, class ModelFactory>
std::vector<SweepRow> sweep_battery(PolicyFactory &&make_policy, ModelFactory &&make_model,
                                    SystemParams base, const std::vector<double> &B_values,
                                    const SimConfig &cfg, int threads = 1,
                                    double tail_tol = 1e-12) {
    if (B_values.empty())
        throw std::invalid_argument("sweep_battery: B_values must be non-empty");
    for (std::size_t i = 0; i < B_values.size(); ++i) {
        if (!(B_values[i] > 0.0))
            throw std::invalid_argument("sweep_battery: B_values must be positive");
        if (i > 0 && !(B_values[i] > B_values[i - 1]))
            throw std::invalid_argument("sweep_battery: B_values must be ascending");
    }

    std::vector<SweepRow> rows;
    rows.reserve(B_values.size());
    for (double B : B_values) {
        SystemParams params = base;
        params.battery_capacity = B;
        const ArrivalModel model = make_model(params);
        const auto policy = make_policy(params, model);

        SweepRow row;
        row.battery = B;
        row.mu = model.mean();
        row.q = model.fraction(params);
        row.bounds = bound_report(row.q, params, tail_tol);
        row.result = monte_carlo(policy, model, params, cfg, threads);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace ehdist
