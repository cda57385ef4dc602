#include "ehdist/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ehdist/csv.hpp"

namespace ehdist {

namespace {

std::string trim(const std::string &s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string &key, const std::string &value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception &) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string &key, const std::string &value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception &) {
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string &key, const std::string &value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception &) {
        throw ConfigError(key, "expected an unsigned integer, got '" + value + "'");
    }
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(trim(item));
    if (!s.empty() && s.back() == sep) parts.push_back("");
    return parts;
}

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double> &vs) {
    std::string s;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) s += ',';
        s += fmt_full(vs[i]);
    }
    return s;
}

bool has_policy(const ExperimentConfig &cfg, const std::string &name) {
    for (const auto &p : cfg.policies)
        if (p == name) return true;
    return false;
}

std::vector<double> battery_list(const ExperimentConfig &cfg) {
    if (!cfg.sweep_B.empty()) return cfg.sweep_B;
    return {cfg.params.battery_capacity};
}

std::ofstream open_or_throw(const std::string &path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("out", "cannot open '" + path + "' for writing");
    return f;
}

} // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("log_spaced: count must be >= 1");
    if (count == 1) return {lo};
    std::vector<double> vs;
    vs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        vs.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return vs;
}

ExperimentConfig preset_config(const std::string &name) {
    ExperimentConfig cfg;
    cfg.params.sigma_s_sq = 1.0;
    cfg.params.sigma_c_sq = 1.0;
    cfg.params.battery_capacity = 2.0;
    cfg.model.kind = "bernoulli";
    cfg.model.bernoulli_p = 0.5;
    cfg.sim.horizon = 100000;
    cfg.sim.trials = 50;
    cfg.sim.seed = 20240501;
    cfg.sweep_B = log_spaced(0.25, 10.0, 15);
    cfg.policies = {"ffp", "dp"};
    if (name == "fig1") {
        cfg.params.sampling_cost = 0.0;
    } else if (name == "fig2") {
        cfg.params.sampling_cost = 1.5;
    } else {
        throw ConfigError("preset", "unknown preset '" + name + "' (try fig1 or fig2)");
    }
    return cfg;
}

void apply_config_entry(ExperimentConfig &cfg, const std::string &key,
                        const std::string &value) {
    if (key == "sigma_s_sq") cfg.params.sigma_s_sq = parse_double(key, value);
    else if (key == "sigma_c_sq") cfg.params.sigma_c_sq = parse_double(key, value);
    else if (key == "battery_capacity") cfg.params.battery_capacity = parse_double(key, value);
    else if (key == "sampling_cost") cfg.params.sampling_cost = parse_double(key, value);
    else if (key == "model") cfg.model.kind = value;
    else if (key == "bernoulli_p") cfg.model.bernoulli_p = parse_double(key, value);
    else if (key == "finite_support") {
        cfg.model.finite_atoms.clear();
        for (const auto &pair : split(value, ',')) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos)
                throw ConfigError(key, "expected value:prob pairs, got '" + pair + "'");
            cfg.model.finite_atoms.push_back(
                {parse_double(key, trim(pair.substr(0, colon))),
                 parse_double(key, trim(pair.substr(colon + 1)))});
        }
    } else if (key == "uniform_lo") cfg.model.uniform_lo = parse_double(key, value);
    else if (key == "uniform_hi") cfg.model.uniform_hi = parse_double(key, value);
    else if (key == "horizon") cfg.sim.horizon = parse_int(key, value);
    else if (key == "trials") cfg.sim.trials = static_cast<int>(parse_int(key, value));
    else if (key == "seed") cfg.sim.seed = parse_u64(key, value);
    else if (key == "burn_in") cfg.sim.burn_in = parse_int(key, value);
    else if (key == "record_trace") cfg.sim.record_trace = parse_int(key, value) != 0;
    else if (key == "sweep_B") {
        cfg.sweep_B.clear();
        if (!trim(value).empty())
            for (const auto &item : split(value, ','))
                cfg.sweep_B.push_back(parse_double(key, item));
    } else if (key == "policies") {
        cfg.policies.clear();
        for (const auto &item : split(value, ','))
            if (!item.empty()) cfg.policies.push_back(item);
    } else if (key == "out") cfg.out = value;
    else if (key == "format") cfg.format = value;
    else if (key == "trace_out") cfg.trace_out = value;
    else if (key == "threads") cfg.threads = static_cast<int>(parse_int(key, value));
    else if (key == "dp_grid_size") cfg.dp_grid_size = static_cast<int>(parse_int(key, value));
    else if (key == "dp_span_tol") cfg.dp_span_tol = parse_double(key, value);
    else if (key == "tail_tol") cfg.tail_tol = parse_double(key, value);
    else if (key == "verify_gap_tolerance") cfg.verify_gap_tolerance = parse_double(key, value);
    else throw ConfigError(key, "unknown configuration key");
}

void apply_config_stream(ExperimentConfig &cfg, std::istream &in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no),
                              "expected key=value, got '" + line + "'");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

ExperimentConfig parse_config(std::istream &in) {
    ExperimentConfig cfg;
    apply_config_stream(cfg, in);
    return cfg;
}

std::string serialize_config(const ExperimentConfig &cfg) {
    std::ostringstream out;
    out << "sigma_s_sq=" << fmt_full(cfg.params.sigma_s_sq) << '\n'
        << "sigma_c_sq=" << fmt_full(cfg.params.sigma_c_sq) << '\n'
        << "battery_capacity=" << fmt_full(cfg.params.battery_capacity) << '\n'
        << "sampling_cost=" << fmt_full(cfg.params.sampling_cost) << '\n'
        << "model=" << cfg.model.kind << '\n'
        << "bernoulli_p=" << fmt_full(cfg.model.bernoulli_p) << '\n';
    if (!cfg.model.finite_atoms.empty()) {
        out << "finite_support=";
        for (std::size_t i = 0; i < cfg.model.finite_atoms.size(); ++i) {
            if (i) out << ',';
            out << fmt_full(cfg.model.finite_atoms[i].value) << ':'
                << fmt_full(cfg.model.finite_atoms[i].prob);
        }
        out << '\n';
    }
    out << "uniform_lo=" << fmt_full(cfg.model.uniform_lo) << '\n'
        << "uniform_hi=" << fmt_full(cfg.model.uniform_hi) << '\n'
        << "horizon=" << cfg.sim.horizon << '\n'
        << "trials=" << cfg.sim.trials << '\n'
        << "seed=" << cfg.sim.seed << '\n'
        << "burn_in=" << cfg.sim.burn_in << '\n'
        << "record_trace=" << (cfg.sim.record_trace ? 1 : 0) << '\n';
    if (!cfg.sweep_B.empty()) out << "sweep_B=" << join_doubles(cfg.sweep_B) << '\n';
    out << "policies=";
    for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
        if (i) out << ',';
        out << cfg.policies[i];
    }
    out << '\n'
        << "out=" << cfg.out << '\n'
        << "format=" << cfg.format << '\n';
    if (!cfg.trace_out.empty()) out << "trace_out=" << cfg.trace_out << '\n';
    out << "threads=" << cfg.threads << '\n'
        << "dp_grid_size=" << cfg.dp_grid_size << '\n'
        << "dp_span_tol=" << fmt_full(cfg.dp_span_tol) << '\n'
        << "tail_tol=" << fmt_full(cfg.tail_tol) << '\n'
        << "verify_gap_tolerance=" << fmt_full(cfg.verify_gap_tolerance) << '\n';
    return out.str();
}

void validate_config(const ExperimentConfig &cfg) {
    try {
        cfg.params.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError("params", e.what());
    }
    try {
        cfg.sim.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError("sim", e.what());
    }
    if (cfg.model.kind != "bernoulli" && cfg.model.kind != "finite" &&
        cfg.model.kind != "uniform")
        throw ConfigError("model", "unknown model kind '" + cfg.model.kind + "'");
    if (cfg.model.kind == "bernoulli" &&
        !(cfg.model.bernoulli_p >= 0.0 && cfg.model.bernoulli_p <= 1.0))
        throw ConfigError("bernoulli_p", "must be in [0,1]");
    if (cfg.model.kind == "finite" && cfg.model.finite_atoms.empty())
        throw ConfigError("finite_support", "finite model needs at least one atom");
    if (cfg.policies.empty())
        throw ConfigError("policies", "at least one policy must be selected");
    for (const auto &p : cfg.policies)
        if (p != "ffp" && p != "greedy" && p != "dp")
            throw ConfigError("policies", "unknown policy '" + p + "'");
    if (cfg.format != "csv")
        throw ConfigError("format", "unsupported format '" + cfg.format + "'");
    for (std::size_t i = 0; i < cfg.sweep_B.size(); ++i) {
        if (!(cfg.sweep_B[i] > 0.0))
            throw ConfigError("sweep_B", "battery sizes must be positive");
        if (i > 0 && !(cfg.sweep_B[i] > cfg.sweep_B[i - 1]))
            throw ConfigError("sweep_B", "battery sizes must be strictly ascending");
    }
    if (cfg.threads < 0) throw ConfigError("threads", "must be >= 0");
    if (cfg.dp_grid_size < 2) throw ConfigError("dp_grid_size", "must be >= 2");
    if (!(cfg.dp_span_tol > 0.0)) throw ConfigError("dp_span_tol", "must be > 0");
    if (!(cfg.tail_tol > 0.0)) throw ConfigError("tail_tol", "must be > 0");
    if (!cfg.trace_out.empty() && cfg.policies.size() != 1)
        throw ConfigError("trace_out", "trace output requires exactly one policy");
}

ArrivalModel build_model(const ModelDescriptor &model, const SystemParams &params) {
    if (model.kind == "bernoulli")
        return ArrivalModel::bernoulli(model.bernoulli_p, params.battery_capacity);
    if (model.kind == "finite") return ArrivalModel::finite_support(model.finite_atoms);
    if (model.kind == "uniform")
        return ArrivalModel::uniform(model.uniform_lo, model.uniform_hi);
    throw ConfigError("model", "unknown model kind '" + model.kind + "'");
}

// =============================================================================
// Commands
// =============================================================================

void run_bounds(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag) {
    validate_config(cfg);
    if (cfg.model.kind != "bernoulli")
        throw ConfigError("model", "bounds requires model=bernoulli (the renewal "
                                   "evaluation is exact only there)");
    const double p = cfg.model.bernoulli_p;
    if (p == 0.0)
        diag << "warning: bernoulli_p=0 is degenerate (no arrivals ever); "
                "all values collapse to the source variance\n";

    write_csv_row(out, {"B", "mu", "q", "lower_bound", "renewal_value", "bern_gap_term",
                        "gap_bound"});
    for (double B : battery_list(cfg)) {
        SystemParams params = cfg.params;
        params.battery_capacity = B;
        const BoundReport r = bound_report(p, params, cfg.tail_tol);
        write_csv_row(out, {fmt9(B), fmt9(p * B), fmt9(p), fmt9(r.lower),
                            fmt9(r.renewal_value), fmt9(r.bern_gap_term), fmt9(r.gap_bound)});
    }
}

void run_simulate(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag) {
    validate_config(cfg);
    const SystemParams &params = cfg.params;
    const ArrivalModel model = build_model(cfg.model, params);
    model.validate(params);
    const double q = model.fraction(params);
    SimConfig sim = cfg.sim;
    if (!cfg.trace_out.empty()) sim.record_trace = true;

    write_csv_row(out, {"policy", "B", "epsilon", "mean", "std_error", "ci95"});
    for (const auto &name : cfg.policies) {
        SimResult result;
        if (name == "ffp") {
            result = monte_carlo(FixedFractionPolicy{q, params}, model, params, sim,
                                 cfg.threads);
        } else if (name == "greedy") {
            result = monte_carlo(GreedyPolicy{params}, model, params, sim, cfg.threads);
        } else { // dp
            const PolicyTable table =
                dp_optimal_policy(model, params, cfg.dp_grid_size, cfg.dp_span_tol);
            diag << "dp gain=" << fmt9(table.gain) << " iterations=" << table.iterations
                 << "\n";
            result = monte_carlo(TablePolicy{&table}, model, params, sim, cfg.threads);
        }
        write_csv_row(out, {name, fmt9(params.battery_capacity), fmt9(params.sampling_cost),
                            fmt9(result.mean_distortion), fmt9(result.std_error),
                            fmt9(result.ci95_halfwidth)});
        if (!cfg.trace_out.empty()) {
            auto f = open_or_throw(cfg.trace_out);
            write_trace_csv(f, result.trace);
        }
    }
}

void run_sweep(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag) {
    validate_config(cfg);
    if (cfg.sweep_B.empty())
        throw ConfigError("sweep_B", "sweep requires a battery list");
    if (cfg.model.kind != "bernoulli")
        throw ConfigError("model", "sweep requires model=bernoulli");
    if (!has_policy(cfg, "ffp"))
        throw ConfigError("policies", "sweep requires the ffp policy");
    const bool with_dp = has_policy(cfg, "dp");

    const auto rows = sweep_battery(
        [](const SystemParams &params, const ArrivalModel &model) {
            return FixedFractionPolicy{model.fraction(params), params};
        },
        [&](const SystemParams &params) {
            return build_model(cfg.model, params);
        },
        cfg.params, cfg.sweep_B, cfg.sim, cfg.threads, cfg.tail_tol);

    std::vector<std::string> header = {"B", "lower_bound", "ffp_mean", "ffp_ci95"};
    if (with_dp) {
        header.push_back("dp_gain");
        header.push_back("gap_ffp_lower");
        header.push_back("gap_ffp_dp");
    } else {
        header.push_back("gap_ffp_lower");
    }
    write_csv_row(out, header);

    for (const auto &row : rows) {
        std::vector<std::string> cells = {fmt9(row.battery), fmt9(row.bounds.lower),
                                          fmt9(row.result.mean_distortion),
                                          fmt9(row.result.ci95_halfwidth)};
        if (with_dp) {
            SystemParams params = cfg.params;
            params.battery_capacity = row.battery;
            const ArrivalModel model = build_model(cfg.model, params);
            const PolicyTable table =
                dp_optimal_policy(model, params, cfg.dp_grid_size, cfg.dp_span_tol);
            diag << "dp B=" << fmt9(row.battery) << " gain=" << fmt9(table.gain)
                 << " iterations=" << table.iterations << "\n";
            cells.push_back(fmt9(table.gain));
            cells.push_back(fmt9(row.result.mean_distortion - row.bounds.lower));
            cells.push_back(fmt9(row.result.mean_distortion - table.gain));
        } else {
            cells.push_back(fmt9(row.result.mean_distortion - row.bounds.lower));
        }
        write_csv_row(out, cells);
    }
}

void run_dp(const ExperimentConfig &cfg, std::ostream &out, std::ostream &diag) {
    validate_config(cfg);
    const ArrivalModel model = build_model(cfg.model, cfg.params);
    const PolicyTable table =
        dp_optimal_policy(model, cfg.params, cfg.dp_grid_size, cfg.dp_span_tol);
    diag << "dp gain=" << fmt9(table.gain) << " iterations=" << table.iterations
         << " final_span=" << fmt9(table.final_span) << "\n";
    table.write_csv(out);
}

} // namespace ehdist
