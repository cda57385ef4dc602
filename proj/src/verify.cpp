// One-shot verification harness behind `ehdist verify`: re-checks every
// module's invariants with fresh randomness and prints observed-vs-allowed
// lines. The single-slot check uses a brute-force grid search that shares no
// code with the closed form it validates.
#include "ehdist/experiment.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ehdist/bounds.hpp"
#include "ehdist/csv.hpp"
#include "ehdist/policies.hpp"
#include "ehdist/sim.hpp"

namespace ehdist {

namespace {

struct SuiteResult {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double allowed = 0.0;
    std::string note;
};

double rnd(std::mt19937_64 &rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Brute-force single-slot objective: split the budget as theta*eps + gbar,
// evaluate (1-theta) s^2 + theta s^2 / (1 + gbar/(theta c^2)) on a theta grid.
double grid_search_single_slot(double budget, const SystemParams &params, double step) {
    const double s2 = params.sigma_s_sq;
    const double c2 = params.sigma_c_sq;
    const double eps = params.sampling_cost;
    double best = s2; // theta = 0
    const double theta_max = eps > 0.0 ? std::min(1.0, budget / eps) : 1.0;
    for (double theta = step; theta <= theta_max; theta += step) {
        const double gbar = budget - theta * eps;
        if (gbar < 0.0) break;
        const double value = (1.0 - theta) * s2 + theta * s2 / (1.0 + gbar / (theta * c2));
        if (value < best) best = value;
    }
    if (theta_max > 0.0) { // include the endpoint exactly
        const double gbar = budget - theta_max * eps;
        if (gbar >= 0.0) {
            const double value =
                (1.0 - theta_max) * s2 + theta_max * s2 / (1.0 + gbar / (theta_max * c2));
            if (value < best) best = value;
        }
    }
    return best;
}

SuiteResult core_battery_step(std::mt19937_64 &rng, const SystemParams &params) {
    double worst = 0.0;
    const double B = params.battery_capacity;
    for (int i = 0; i < 20000; ++i) {
        const double level = rnd(rng, 0.0, B);
        const double consumed = rnd(rng, 0.0, level);
        const double arrival = rnd(rng, 0.0, B);
        const double next = step_battery(BatteryState{level}, consumed, arrival, params).level;
        worst = std::max({worst, -next, next - B});
    }
    return {"core_battery_step", worst <= 0.0, worst, 0.0, "max excursion outside [0,B]"};
}

SuiteResult core_distortion_shape(std::mt19937_64 &rng, const SystemParams &params) {
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double g1 = rnd(rng, 0.0, 50.0);
        double g2 = rnd(rng, 0.0, 50.0);
        if (g1 > g2) std::swap(g1, g2);
        if (g2 - g1 < 1e-9) continue;
        const double d1 = slot_distortion(g1, params);
        const double d2 = slot_distortion(g2, params);
        worst = std::max(worst, d2 - d1); // must be strictly decreasing
        const double mid = slot_distortion(0.5 * (g1 + g2), params);
        worst = std::max(worst, mid - 0.5 * (d1 + d2)); // midpoint convexity
    }
    return {"core_distortion_shape", worst <= 1e-12, worst, 1e-12,
            "monotone decrease and midpoint convexity violations"};
}

SuiteResult core_rate_consistency(std::mt19937_64 &rng, const SystemParams &params) {
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double g = rnd(rng, 0.0, 100.0);
        const double rate = 0.5 * std::log(1.0 + g / params.sigma_c_sq);
        const double via_rate = params.sigma_s_sq * std::exp(-2.0 * rate);
        worst = std::max(worst, std::abs(via_rate - slot_distortion(g, params)));
    }
    const double allowed = 1e-12 * std::max(1.0, params.sigma_s_sq);
    return {"core_rate_consistency", worst <= allowed, worst, allowed,
            "rate-form vs direct-form slot distortion"};
}

SuiteResult policy_budget_identity(std::mt19937_64 &rng) {
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        SystemParams params;
        params.sigma_c_sq = rnd(rng, 0.2, 4.0);
        params.sampling_cost = rnd(rng, 1e-3, 3.0);
        params.battery_capacity = 10.0;
        const double b = rnd(rng, 0.0, params.battery_capacity);
        const double q = rnd(rng, 0.0, 1.0);
        const SlotDecision d = ffp_with_cost(BatteryState{b}, q, params);
        worst = std::max(worst, std::abs(d.consumed(params) - q * b));
    }
    return {"policy_budget_identity", worst <= 1e-12, worst, 1e-12,
            "theta*(eps+g) vs q*b"};
}

SuiteResult policy_cost_free_reduction(std::mt19937_64 &rng) {
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
        SystemParams params;
        params.sampling_cost = 1e-12;
        params.battery_capacity = 10.0;
        const double b = rnd(rng, 0.5, 10.0);
        const double q = rnd(rng, 0.1, 1.0);
        const SlotDecision d = ffp_with_cost(BatteryState{b}, q, params);
        worst = std::max({worst, std::abs(d.theta - 1.0), std::abs(d.power - q * b)});
    }
    return {"policy_cost_free_reduction", worst <= 1e-5, worst, 1e-5,
            "eps -> 0 limit vs cost-free policy"};
}

SuiteResult single_slot_oracle(std::mt19937_64 &rng) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        SystemParams params;
        params.sigma_c_sq = rnd(rng, 0.2, 4.0);
        params.sampling_cost = rnd(rng, 0.05, 3.0);
        const double budget = rnd(rng, 0.0, 5.0);
        const double closed = single_slot_optimal(budget, params).value;
        const double brute = grid_search_single_slot(budget, params, 1e-5);
        worst = std::max(worst, std::abs(closed - brute));
    }
    return {"single_slot_oracle", worst <= 1e-6, worst, 1e-6,
            "closed form vs 1e-5-step grid search"};
}

SuiteResult convexity_suite(const std::string &name, const SystemParams &params) {
    // First differences <= 0, second differences >= -1e-9 on a 1000-point grid.
    const int n = 1000;
    const Eigen::ArrayXd mu = Eigen::ArrayXd::LinSpaced(n, 0.0, 20.0 * params.sigma_c_sq);
    Eigen::ArrayXd f(n);
    for (int i = 0; i < n; ++i)
        f[i] = params.sampling_cost > 0.0 ? lower_bound_with_cost(mu[i], params)
                                          : lower_bound_no_cost(mu[i], params);
    const Eigen::ArrayXd d1 = f.tail(n - 1) - f.head(n - 1);
    const Eigen::ArrayXd d2 = d1.tail(n - 2) - d1.head(n - 2);
    const double worst = std::max(d1.maxCoeff(), -d2.minCoeff());
    return {name, d1.maxCoeff() <= 1e-12 && d2.minCoeff() >= -1e-9, worst, 1e-9,
            "non-increasing and convex on the mu grid"};
}

SuiteResult step_a_inequality(std::mt19937_64 &rng) {
    // 1/(1+lambda x) <= 1/(1+x) + (1-lambda) for lambda in [0,1], x >= 0.
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double lambda = rnd(rng, 0.0, 1.0);
        const double x = rnd(rng, 0.0, 100.0);
        worst = std::max(worst, 1.0 / (1.0 + lambda * x) -
                                    (1.0 / (1.0 + x) + (1.0 - lambda)));
    }
    return {"step_a_inequality", worst <= 1e-12, worst, 1e-12,
            "perspective bound on 10^4 random pairs"};
}

SuiteResult bern_gap_max(const SystemParams &params) {
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double p = static_cast<double>(i) / 1000.0;
        worst = std::max(worst, gap_terms(p, params).bern_gap_term);
    }
    const double allowed = 0.5 * params.sigma_s_sq;
    return {"bern_gap_max", worst <= allowed, worst, allowed,
            "sup of the Bernoulli gap term over p"};
}

SuiteResult sandwich_analytic(const ExperimentConfig &cfg) {
    const double p = cfg.model.kind == "bernoulli" ? cfg.model.bernoulli_p : 0.5;
    double worst = 0.0;
    for (double B : log_spaced(0.25, 10.0, 7)) {
        SystemParams params = cfg.params;
        params.battery_capacity = B;
        const BoundReport r = bound_report(p, params, cfg.tail_tol);
        worst = std::max({worst, r.lower - r.renewal_value,
                          r.renewal_value - (r.lower + r.gap_bound),
                          r.bern_gap_term - r.gap_bound});
    }
    return {"sandwich_analytic", worst <= 1e-12, worst, 1e-12,
            "lower <= renewal <= lower + gap_bound"};
}

SuiteResult sandwich_empirical(const ExperimentConfig &cfg, double gap_tolerance) {
    const double p = cfg.model.kind == "bernoulli" ? cfg.model.bernoulli_p : 0.5;
    SimConfig sim;
    sim.horizon = 20000;
    sim.trials = 8;
    sim.seed = cfg.sim.seed;
    double max_gap = 0.0;
    for (double B : log_spaced(0.25, 10.0, 7)) {
        SystemParams params = cfg.params;
        params.battery_capacity = B;
        const ArrivalModel model = ArrivalModel::bernoulli(p, B);
        const double q = model.fraction(params);
        const SimResult r =
            monte_carlo(FixedFractionPolicy{q, params}, model, params, sim, cfg.threads);
        const double lower = params.sampling_cost > 0.0
                                 ? lower_bound_with_cost(p * B, params)
                                 : lower_bound_no_cost(p * B, params);
        max_gap = std::max(max_gap, r.mean_distortion - lower);
    }
    return {"sandwich_empirical", max_gap <= gap_tolerance, max_gap, gap_tolerance,
            "max simulated FFP gap over the battery sweep"};
}

SuiteResult renewal_vs_monte_carlo(const ExperimentConfig &cfg) {
    const double p = cfg.model.kind == "bernoulli" ? cfg.model.bernoulli_p : 0.5;
    SystemParams params = cfg.params;
    const ArrivalModel model = ArrivalModel::bernoulli(p, params.battery_capacity);
    const double series = params.sampling_cost > 0.0
                              ? bernoulli_renewal_ffp_with_cost(p, params, cfg.tail_tol)
                              : bernoulli_renewal_ffp(p, params, cfg.tail_tol);
    SimConfig sim;
    sim.horizon = 200000;
    sim.trials = 10;
    sim.seed = cfg.sim.seed + 1;
    const SimResult r = monte_carlo(FixedFractionPolicy{model.fraction(params), params},
                                    model, params, sim, cfg.threads);
    const double allowed = 3.0 * std::max(r.std_error, 1e-12);
    const double observed = std::abs(series - r.mean_distortion);
    return {"renewal_vs_monte_carlo", observed <= allowed, observed, allowed,
            "series vs simulation, 3 standard errors"};
}

SuiteResult single_arrival_structure(const ExperimentConfig &cfg) {
    // One full recharge, then silence: theta pins at 1 while the power decays,
    // then the power pins while theta decays, with exactly one regime switch.
    SystemParams params = cfg.params;
    params.battery_capacity = 20.0;
    if (params.sampling_cost <= 0.0) params.sampling_cost = 1.5;
    const double q = 0.5;
    const ArrivalModel silent = ArrivalModel::finite_support({{0.0, 1.0}});
    std::vector<TraceRecord> trace;
    run_trial(FixedFractionPolicy{q, params}, silent, params, 12, 7, &trace);

    const double pinned = std::sqrt(params.sampling_cost * params.sigma_c_sq);
    int switches = 0;
    bool ok = !trace.empty();
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const auto &d = trace[t].decision;
        const bool full_on = d.theta >= 1.0 - 1e-12;
        if (t > 0) {
            const auto &prev = trace[t - 1].decision;
            const bool was_full_on = prev.theta >= 1.0 - 1e-12;
            if (was_full_on != full_on) ++switches;
            if (full_on && was_full_on) ok = ok && d.power < prev.power;
            if (!full_on && !was_full_on)
                ok = ok && d.theta < prev.theta && std::abs(d.power - pinned) <= 1e-9;
        }
        if (!full_on) ok = ok && std::abs(d.power - pinned) <= 1e-9;
    }
    ok = ok && switches == 1;
    return {"single_arrival_structure", ok, static_cast<double>(switches), 1.0,
            "regime switches in the decaying-budget trace"};
}

SuiteResult determinism(const ExperimentConfig &cfg) {
    SystemParams params = cfg.params;
    const ArrivalModel model = build_model(cfg.model, params);
    FixedFractionPolicy policy{model.fraction(params), params};
    SimConfig sim;
    sim.horizon = 5000;
    sim.trials = 12;
    sim.seed = cfg.sim.seed;
    const SimResult serial = monte_carlo(policy, model, params, sim, 1);
    const SimResult again = monte_carlo(policy, model, params, sim, 1);
    const SimResult parallel = monte_carlo(policy, model, params, sim, 4);
    double worst = std::abs(serial.mean_distortion - again.mean_distortion);
    worst = std::max(worst, std::abs(serial.mean_distortion - parallel.mean_distortion));
    for (int i = 0; i < sim.trials; ++i)
        worst = std::max(worst, std::abs(serial.per_trial_means[i] -
                                         parallel.per_trial_means[i]));
    return {"determinism", worst == 0.0, worst, 0.0,
            "bit-identical across reruns and parallelism degrees"};
}

} // namespace

int run_verify(const ExperimentConfig &cfg, std::ostream &report) {
    validate_config(cfg);
    const double gap_tolerance = cfg.verify_gap_tolerance >= 0.0
                                     ? cfg.verify_gap_tolerance
                                     : (cfg.params.sampling_cost > 0.0 ? 0.23 : 0.16);
    std::mt19937_64 rng(splitmix64(cfg.sim.seed));
    std::vector<SuiteResult> results;

    results.push_back(core_battery_step(rng, cfg.params));
    results.push_back(core_distortion_shape(rng, cfg.params));
    results.push_back(core_rate_consistency(rng, cfg.params));
    results.push_back(policy_budget_identity(rng));
    results.push_back(policy_cost_free_reduction(rng));
    results.push_back(single_slot_oracle(rng));
    {
        SystemParams p = cfg.params;
        p.sampling_cost = 0.0;
        results.push_back(convexity_suite("convexity_f", p));
    }
    for (double eps : {0.1, 1.0, 1.5, 10.0}) {
        SystemParams p = cfg.params;
        p.sampling_cost = eps;
        results.push_back(convexity_suite("convexity_f_eps_" + fmt9(eps), p));
    }
    results.push_back(step_a_inequality(rng));
    results.push_back(bern_gap_max(cfg.params));
    results.push_back(sandwich_analytic(cfg));
    results.push_back(sandwich_empirical(cfg, gap_tolerance));
    results.push_back(renewal_vs_monte_carlo(cfg));
    results.push_back(single_arrival_structure(cfg));
    results.push_back(determinism(cfg));

    bool all_pass = true;
    for (const auto &r : results) {
        all_pass = all_pass && r.pass;
        report << (r.pass ? "PASS" : "FAIL") << "  " << r.name
               << "  observed=" << fmt9(r.observed) << " allowed=" << fmt9(r.allowed)
               << "  (" << r.note << ")\n";
    }
    report << (all_pass ? "verify: all suites passed\n" : "verify: FAILURES present\n");
    return all_pass ? 0 : 1;
}

} // namespace ehdist
