#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ehdist/bounds.hpp"
#include "ehdist/policies.hpp"
#include "ehdist/sim.hpp"

using namespace ehdist;

namespace {

SystemParams params_with(double eps = 0.0, double B = 2.0) {
    SystemParams p;
    p.sigma_s_sq = 1.0;
    p.sigma_c_sq = 1.0;
    p.battery_capacity = B;
    p.sampling_cost = eps;
    return p;
}

} // namespace

TEST_CASE("deterministic refills: optimal gain is f(B)") {
    const SystemParams p = params_with();
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(1.0, 2.0), p, 500);
    CHECK(table.gain == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    // consume-everything is optimal at the full-battery state
    CHECK(table.consumed[table.grid.size() - 1] == doctest::Approx(2.0));
}

TEST_CASE("Bernoulli half: gain sits between the lower bound and the FFP value") {
    const SystemParams p = params_with();
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 2000);
    CHECK(table.gain >= lower_bound_no_cost(1.0, p) - 1e-3);
    CHECK(table.gain <= bernoulli_renewal_ffp(0.5, p) + 1e-3);
    // regression anchor for the solved gain
    CHECK(table.gain == doctest::Approx(0.612132).epsilon(5e-4));
    CHECK(table.final_span < 1e-7);
}

TEST_CASE("coarse two-point grid still converges inside the additive-gap bracket") {
    const SystemParams p = params_with();
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 2);
    // all-or-nothing actions: recharge/spend cycle worth p f(B) + (1-p) sigma_s^2
    CHECK(table.gain == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(table.gain >= lower_bound_no_cost(1.0, p));
    CHECK(table.gain <= lower_bound_no_cost(1.0, p) + 0.5 * p.sigma_s_sq);
}

TEST_CASE("with sampling cost: gain respects the additive-gap bracket") {
    const SystemParams p = params_with(1.5, 4.0);
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(0.5, 4.0), p, 1000);
    CHECK(table.gain >= lower_bound_with_cost(2.0, p) - 1e-3);
    CHECK(table.gain <= bernoulli_renewal_ffp_with_cost(0.5, p) + 1e-3);
}

TEST_CASE("non-Bernoulli finite support is accepted") {
    const SystemParams p = params_with();
    const ArrivalModel model = ArrivalModel::finite_support(
        {{0.0, 1.0 / 3}, {1.0, 1.0 / 3}, {2.0, 1.0 / 3}}); // mean 1, q = 0.5
    const PolicyTable table = dp_optimal_policy(model, p, 800);
    CHECK(table.gain >= lower_bound_no_cost(1.0, p) - 1e-3);
    CHECK(table.gain <= bernoulli_renewal_ffp(0.5, p) + 1e-3);
}

TEST_CASE("table structure: uniform grid and feasible decisions") {
    const SystemParams p = params_with(1.5, 2.0);
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 200);
    REQUIRE(table.grid.size() == 200);
    const double spacing = table.grid[1] - table.grid[0];
    CHECK(table.grid[0] == doctest::Approx(0.0));
    CHECK(table.grid[table.grid.size() - 1] == doctest::Approx(2.0));
    for (Eigen::Index i = 0; i < table.grid.size(); ++i) {
        if (i > 0) CHECK(table.grid[i] - table.grid[i - 1] == doctest::Approx(spacing));
        const auto &d = table.decisions[static_cast<std::size_t>(i)];
        CHECK(d.consumed(p) <= table.grid[i] + 1e-9 * spacing);
        CHECK(d.theta >= 0.0);
        CHECK(d.theta <= 1.0);
    }
}

TEST_CASE("decision_for never overdraws between grid points") {
    const SystemParams p = params_with();
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 100);
    for (double b = 0.0; b <= 2.0; b += 0.0137) {
        const SlotDecision d = table.decision_for(BatteryState{b});
        CHECK(d.consumed(p) <= b + 1e-9);
    }
}

TEST_CASE("simulating the solved table reproduces its gain") {
    const SystemParams p = params_with();
    const ArrivalModel model = ArrivalModel::bernoulli(0.5, 2.0);
    const PolicyTable table = dp_optimal_policy(model, p, 2000);
    SimConfig cfg;
    cfg.horizon = 200000;
    cfg.trials = 10;
    cfg.seed = 71;
    const SimResult r = monte_carlo(TablePolicy{&table}, model, p, cfg, 2);
    CHECK(std::abs(r.mean_distortion - table.gain) <= 3.0 * r.std_error + 1e-4);
}

TEST_CASE("domain errors: sampler models, tiny grids, exhausted iteration caps") {
    const SystemParams p = params_with();
    CHECK_THROWS_AS(dp_optimal_policy(ArrivalModel::uniform(0.0, 2.0), p, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 1),
                    std::invalid_argument);
    try {
        dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 50, 1e-7, 3);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError &e) {
        CHECK(e.final_span() > 1e-7); // reports the span it got stuck at
    }
}

TEST_CASE("policy table CSV has the documented schema") {
    const SystemParams p = params_with();
    const PolicyTable table = dp_optimal_policy(ArrivalModel::bernoulli(0.5, 2.0), p, 10);
    std::ostringstream out;
    table.write_csv(out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "battery_level,theta,power,consumed");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 10);
}
