// Command-line front end: bounds | simulate | sweep | dp | verify.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid input.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ehdist/experiment.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string preset;
    std::vector<std::string> overrides; // key=value pairs
    std::string seed;
    std::string out;
    std::string format;
    std::string threads;
};

ehdist::ExperimentConfig assemble_config(const CliOptions &opts) {
    ehdist::ExperimentConfig cfg;
    if (!opts.preset.empty()) cfg = ehdist::preset_config(opts.preset);
    if (!opts.config_path.empty()) {
        std::ifstream f(opts.config_path);
        if (!f) throw ehdist::ConfigError("config", "cannot read '" + opts.config_path + "'");
        // File keys land on top of the preset.
        ehdist::apply_config_stream(cfg, f);
    }
    for (const auto &pair : opts.overrides) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos)
            throw ehdist::ConfigError("set", "expected key=value, got '" + pair + "'");
        ehdist::apply_config_entry(cfg, pair.substr(0, eq), pair.substr(eq + 1));
    }
    // Dedicated flags win over everything.
    if (!opts.seed.empty()) ehdist::apply_config_entry(cfg, "seed", opts.seed);
    if (!opts.out.empty()) ehdist::apply_config_entry(cfg, "out", opts.out);
    if (!opts.format.empty()) ehdist::apply_config_entry(cfg, "format", opts.format);
    if (!opts.threads.empty()) ehdist::apply_config_entry(cfg, "threads", opts.threads);
    return cfg;
}

int dispatch(const std::string &command, const ehdist::ExperimentConfig &cfg) {
    if (command == "verify") {
        return ehdist::run_verify(cfg, std::cout);
    }
    std::ofstream file;
    std::ostream *out = &std::cout;
    if (cfg.out != "-" && !cfg.out.empty()) {
        file.open(cfg.out);
        if (!file) throw ehdist::ConfigError("out", "cannot open '" + cfg.out + "'");
        out = &file;
    }
    if (command == "bounds") ehdist::run_bounds(cfg, *out, std::cerr);
    else if (command == "simulate") ehdist::run_simulate(cfg, *out, std::cerr);
    else if (command == "sweep") ehdist::run_sweep(cfg, *out, std::cerr);
    else if (command == "dp") ehdist::run_dp(cfg, *out, std::cerr);
    else throw ehdist::ConfigError("command", "unknown command '" + command + "'");
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Online distortion minimization for an energy-harvesting sensor: "
                 "analytic bounds, fixed fraction policies, a dynamic-programming "
                 "baseline, and Monte Carlo evaluation"};
    app.require_subcommand(1);

    CliOptions opts;
    std::string command;
    for (const auto &name : {"bounds", "simulate", "sweep", "dp", "verify"}) {
        auto *sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "flat key=value config file");
        sub->add_option("--preset", opts.preset, "named preset: fig1 or fig2");
        sub->add_option("--set", opts.overrides, "key=value override (repeatable)");
        sub->add_option("--seed", opts.seed, "master seed override");
        sub->add_option("--out", opts.out, "output path ('-' = stdout)");
        sub->add_option("--format", opts.format, "output format (csv)");
        sub->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2; // invalid input
    }

    try {
        const ehdist::ExperimentConfig cfg = assemble_config(opts);
        return dispatch(command, cfg);
    } catch (const ehdist::ConfigError &e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument &e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
