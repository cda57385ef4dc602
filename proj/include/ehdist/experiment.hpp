// Experiment configuration and the command implementations behind the CLI.
//
// Configs are flat key=value text ('#' starts a comment); command-line
// overrides are applied on top, flag wins. Two presets reproduce the
// reference sweeps: `fig1` (no sampling cost) and `fig2` (sampling cost 1.5).
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehdist/sim.hpp"
#include "ehdist/types.hpp"

namespace ehdist {

/// Invalid configuration, carrying the offending field name.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string &message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

    const std::string &field() const { return field_; }

private:
    std::string field_;
};

/// Arrival-model description as it appears in config files.
struct ModelDescriptor {
    std::string kind = "bernoulli"; ///< bernoulli | finite | uniform
    double bernoulli_p = 0.5;
    std::vector<ArrivalModel::Atom> finite_atoms; ///< value:prob pairs
    double uniform_lo = 0.0;
    double uniform_hi = 0.0;

    bool operator==(const ModelDescriptor &) const = default;
};

struct ExperimentConfig {
    SystemParams params;
    ModelDescriptor model;
    SimConfig sim;
    std::vector<double> sweep_B;              ///< optional battery sweep
    std::vector<std::string> policies{"ffp"}; ///< subset of ffp, greedy, dp
    std::string out = "-";
    std::string format = "csv";
    std::string trace_out;                    ///< optional per-slot trace file
    int threads = 0;                          ///< 0 = hardware concurrency
    int dp_grid_size = 2000;
    double dp_span_tol = 1e-7;
    double tail_tol = 1e-12;
    double verify_gap_tolerance = -1.0;       ///< <0: derive from sampling_cost

    bool operator==(const ExperimentConfig &) const = default;
};

ExperimentConfig preset_config(const std::string &name); // fig1 | fig2

/// Apply one key=value override. Throws ConfigError for unknown keys or
/// unparsable values.
void apply_config_entry(ExperimentConfig &cfg, const std::string &key,
                        const std::string &value);

/// Apply a whole key=value stream on top of an existing config.
void apply_config_stream(ExperimentConfig &cfg, std::istream &in);

ExperimentConfig parse_config(std::istream &in);
std::string serialize_config(const ExperimentConfig &cfg);

/// Full cross-field validation; throws ConfigError naming the field.
void validate_config(const ExperimentConfig &cfg);

/// Build the arrival model for a given battery size. Bernoulli magnitude is
/// the battery capacity itself (the canonical battery-filling process).
ArrivalModel build_model(const ModelDescriptor &model, const SystemParams &params);

/// 15-point logarithmic battery grid used by the presets.
std::vector<double> log_spaced(double lo, double hi, int count);

// =============================================================================
// Commands. Each writes one CSV table to `out`; informational notes go to
// `diag`. Invalid configurations throw ConfigError.
// =============================================================================

void run_bounds(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag);
void run_simulate(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag);
void run_sweep(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag);
void run_dp(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag);

/// Run every invariant suite, printing one line per suite. Returns 0 when all
/// pass, 1 otherwise.
int run_verify(const ExperimentConfig &cfg, std::ostream &report);

} // namespace ehdist
