// Relative value iteration on the discretized battery MDP.
//
// The structure is deliberately simple: a uniform battery grid, consumption
// restricted to grid points, and nearest-grid-point projection of the next
// level. For Bernoulli battery-filling arrivals the projection is exact
// (the battery either stays on the grid or refills completely), so the only
// approximation there is the restricted action set.
#include "ehdist/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "ehdist/csv.hpp"

namespace ehdist {

namespace {

// Damping factor of the aperiodicity transform. Keeps the iteration
// convergent for deterministic arrival patterns that would otherwise cycle.
constexpr double kDamping = 0.9;

} // namespace

void PolicyTable::write_csv(std::ostream &out) const {
    write_csv_row(out, {"battery_level", "theta", "power", "consumed"});
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const auto &d = decisions[static_cast<std::size_t>(i)];
        write_csv_row(out, {fmt9(grid[i]), fmt9(d.theta), fmt9(d.power), fmt9(consumed[i])});
    }
}

PolicyTable dp_optimal_policy(const ArrivalModel &model, const SystemParams &params,
                              int grid_size, double span_tol, int iteration_cap) {
    params.validate();
    model.validate(params);
    if (!model.has_finite_support())
        throw std::invalid_argument(
            "dp_optimal_policy: continuous Sampler models are unsupported; "
            "discretize the arrivals or use Monte Carlo evaluation");
    if (grid_size < 2)
        throw std::invalid_argument("dp_optimal_policy: grid_size must be >= 2");
    if (!(span_tol > 0.0))
        throw std::invalid_argument("dp_optimal_policy: span_tol must be > 0");
    if (iteration_cap < 1)
        throw std::invalid_argument("dp_optimal_policy: iteration_cap must be >= 1");

    const int K = grid_size;
    const double B = params.battery_capacity;
    const double spacing = B / (K - 1);
    const auto &atoms = model.atoms();
    const int A = static_cast<int>(atoms.size());
    const int ref = K - 1; // reference state: full battery

    // Stage cost of consuming grid point j, shared by every state.
    Eigen::ArrayXd stage_cost(K);
    for (int j = 0; j < K; ++j)
        stage_cost[j] = single_slot_optimal(spacing * j, params).value;

    // next_index[a][r]: grid index after holding residual r*spacing and
    // absorbing atom a, i.e. round(min(r*spacing + value_a, B) / spacing).
    std::vector<std::vector<int>> next_index(static_cast<std::size_t>(A),
                                             std::vector<int>(static_cast<std::size_t>(K)));
    for (int a = 0; a < A; ++a) {
        for (int r = 0; r < K; ++r) {
            const long long idx =
                std::llround(r + atoms[static_cast<std::size_t>(a)].value / spacing);
            next_index[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] =
                static_cast<int>(std::min<long long>(idx, K - 1));
        }
    }

    // E[value(next level) | residual r] for the current value vector.
    Eigen::VectorXd value = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd expected(K);
    Eigen::VectorXd image(K);
    auto fill_expected = [&]() {
        expected.setZero();
        for (int a = 0; a < A; ++a) {
            const double w = atoms[static_cast<std::size_t>(a)].prob;
            if (w == 0.0) continue;
            const auto &row = next_index[static_cast<std::size_t>(a)];
            for (int r = 0; r < K; ++r)
                expected[r] += w * value[row[static_cast<std::size_t>(r)]];
        }
    };

    double span = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= iteration_cap; ++iter) {
        fill_expected();
        for (int i = 0; i < K; ++i) {
            double best = std::numeric_limits<double>::infinity();
            // smallest consumption wins ties: scan j upward, strict improvement
            for (int j = 0; j <= i; ++j) {
                const double v = stage_cost[j] + expected[i - j];
                if (v < best) best = v;
            }
            image[i] = (1.0 - kDamping) * value[i] + kDamping * best;
        }

        const Eigen::VectorXd diff = image - value;
        span = diff.maxCoeff() - diff.minCoeff();
        // Renormalize against the reference state so values stay bounded.
        value = image.array() - image[ref];

        if (span < span_tol * kDamping) {
            const double gain = 0.5 * (diff.maxCoeff() + diff.minCoeff()) / kDamping;

            PolicyTable table;
            table.grid = Eigen::ArrayXd::LinSpaced(K, 0.0, B);
            table.decisions.resize(static_cast<std::size_t>(K));
            table.consumed.resize(K);
            fill_expected(); // one argmin pass with the converged values
            for (int i = 0; i < K; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int best_j = 0;
                for (int j = 0; j <= i; ++j) {
                    const double v = stage_cost[j] + expected[i - j];
                    if (v < best) {
                        best = v;
                        best_j = j;
                    }
                }
                table.consumed[i] = spacing * best_j;
                table.decisions[static_cast<std::size_t>(i)] =
                    single_slot_optimal(table.consumed[i], params).decision;
            }
            table.gain = gain;
            table.iterations = iter;
            table.final_span = span / kDamping;
            return table;
        }
    }

    throw ConvergenceError("dp_optimal_policy: relative value iteration did not converge "
                           "within " + std::to_string(iteration_cap) + " sweeps",
                           span / kDamping);
}

} // namespace ehdist
