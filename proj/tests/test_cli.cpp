#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ehdist/bounds.hpp"
#include "ehdist/experiment.hpp"

using namespace ehdist;

namespace {

ExperimentConfig small_sim_config() {
    ExperimentConfig cfg;
    cfg.params.battery_capacity = 2.0;
    cfg.model.kind = "bernoulli";
    cfg.model.bernoulli_p = 0.5;
    cfg.sim.horizon = 20000;
    cfg.sim.trials = 16;
    cfg.sim.seed = 404;
    cfg.threads = 2;
    return cfg;
}

std::vector<std::vector<std::string>> parse_csv(const std::string &text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string(EHDIST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config round-trip: parse(serialize(x)) == x") {
    ExperimentConfig cfg = preset_config("fig1");
    cfg.model.finite_atoms = {{0.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}};
    cfg.trace_out = "trace.csv";
    cfg.verify_gap_tolerance = 0.19;
    const std::string text = serialize_config(cfg);
    std::istringstream in(text);
    const ExperimentConfig parsed = parse_config(in);
    CHECK(parsed == cfg);

    // and a second round trip is bit-stable
    std::istringstream in2(serialize_config(parsed));
    CHECK(parse_config(in2) == parsed);
}

TEST_CASE("presets: fig2 differs from fig1 only by the sampling cost") {
    const ExperimentConfig a = preset_config("fig1");
    ExperimentConfig b = preset_config("fig2");
    CHECK(b.params.sampling_cost == doctest::Approx(1.5));
    b.params.sampling_cost = a.params.sampling_cost;
    CHECK(a == b);
    CHECK(a.sweep_B.size() == 15);
    CHECK(a.sweep_B.front() == doctest::Approx(0.25));
    CHECK(a.sweep_B.back() == doctest::Approx(10.0));
    CHECK_THROWS_AS(preset_config("fig3"), ConfigError);
}

TEST_CASE("config entries: unknown keys and malformed values name the field") {
    ExperimentConfig cfg;
    try {
        apply_config_entry(cfg, "sigma_sq_typo", "1.0");
        FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
        CHECK(e.field() == "sigma_sq_typo");
    }
    CHECK_THROWS_AS(apply_config_entry(cfg, "horizon", "abc"), ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "finite_support", "1.0;0.5"), ConfigError);
}

TEST_CASE("validate_config rejects broken fields by name") {
    ExperimentConfig cfg = small_sim_config();
    cfg.params.sigma_c_sq = 0.0;
    try {
        validate_config(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError &e) {
        CHECK(std::string(e.what()).find("sigma_c_sq") != std::string::npos);
    }

    cfg = small_sim_config();
    cfg.policies.clear();
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = small_sim_config();
    cfg.policies = {"thompson"};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = small_sim_config();
    cfg.format = "parquet";
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = small_sim_config();
    cfg.sweep_B = {2.0, 1.0};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("bounds command: schema and the worked row") {
    ExperimentConfig cfg = small_sim_config();
    std::ostringstream out, diag;
    run_bounds(cfg, out, diag);
    const auto rows = parse_csv(out.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"B", "mu", "q", "lower_bound",
                                              "renewal_value", "bern_gap_term", "gap_bound"});
    CHECK(std::stod(rows[1][0]) == doctest::Approx(2.0));
    CHECK(std::stod(rows[1][1]) == doctest::Approx(1.0));
    CHECK(std::stod(rows[1][2]) == doctest::Approx(0.5));
    CHECK(std::stod(rows[1][3]) == doctest::Approx(0.5));
    CHECK(std::stod(rows[1][4]) == doctest::Approx(0.632249890174).epsilon(1e-9));
    CHECK(std::stod(rows[1][5]) == doctest::Approx(1.0 / 3.0));
    CHECK(std::stod(rows[1][6]) == doctest::Approx(0.5));
}

TEST_CASE("bounds command: eps -> 0 rows converge to the eps = 0 rows") {
    ExperimentConfig zero = small_sim_config();
    ExperimentConfig tiny = small_sim_config();
    tiny.params.sampling_cost = 1e-12;
    std::ostringstream out_zero, out_tiny, diag;
    run_bounds(zero, out_zero, diag);
    run_bounds(tiny, out_tiny, diag);
    const auto a = parse_csv(out_zero.str());
    const auto b = parse_csv(out_tiny.str());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 1; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j)
            CHECK(std::stod(a[i][j]) == doctest::Approx(std::stod(b[i][j])).epsilon(1e-9));
}

TEST_CASE("bounds command: p=1 renewal equals the lower bound at mu=B") {
    ExperimentConfig cfg = small_sim_config();
    cfg.model.bernoulli_p = 1.0;
    std::ostringstream out, diag;
    run_bounds(cfg, out, diag);
    const auto rows = parse_csv(out.str());
    CHECK(std::stod(rows[1][3]) == doctest::Approx(std::stod(rows[1][4])).epsilon(1e-12));
}

TEST_CASE("bounds command: p=0 degenerates to the source variance with a warning") {
    ExperimentConfig cfg = small_sim_config();
    cfg.model.bernoulli_p = 0.0;
    std::ostringstream out, diag;
    run_bounds(cfg, out, diag);
    CHECK(diag.str().find("warning") != std::string::npos);
    const auto rows = parse_csv(out.str());
    CHECK(std::stod(rows[1][3]) == doctest::Approx(1.0)); // lower bound
    CHECK(std::stod(rows[1][4]) == doctest::Approx(1.0)); // renewal value
}

TEST_CASE("simulate command: ffp lands near the renewal value, greedy does worse") {
    ExperimentConfig cfg = small_sim_config();
    cfg.policies = {"ffp", "greedy"};
    std::ostringstream out, diag;
    run_simulate(cfg, out, diag);
    const auto rows = parse_csv(out.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] ==
          std::vector<std::string>{"policy", "B", "epsilon", "mean", "std_error", "ci95"});

    const double ffp_mean = std::stod(rows[1][3]);
    const double ffp_ci = std::stod(rows[1][5]);
    const double renewal = bernoulli_renewal_ffp(0.5, cfg.params);
    CHECK(std::abs(ffp_mean - renewal) <= ffp_ci);

    const double greedy_mean = std::stod(rows[2][3]);
    const double greedy_se = std::stod(rows[2][4]);
    CHECK(greedy_mean >= ffp_mean - 3.0 * greedy_se);
}

TEST_CASE("simulate command: same seed twice gives identical CSV text") {
    ExperimentConfig cfg = small_sim_config();
    std::ostringstream a, b, diag;
    run_simulate(cfg, a, diag);
    run_simulate(cfg, b, diag);
    CHECK(a.str() == b.str());

    ExperimentConfig serial = cfg;
    serial.threads = 1;
    std::ostringstream c;
    run_simulate(serial, c, diag);
    CHECK(a.str() == c.str());
}

TEST_CASE("sweep command: schema with and without the dp column") {
    ExperimentConfig cfg = small_sim_config();
    cfg.sweep_B = {1.0, 2.0};
    cfg.sim.horizon = 5000;
    cfg.sim.trials = 4;
    cfg.policies = {"ffp"};
    std::ostringstream out, diag;
    run_sweep(cfg, out, diag);
    auto rows = parse_csv(out.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"B", "lower_bound", "ffp_mean", "ffp_ci95",
                                              "gap_ffp_lower"});

    cfg.policies = {"ffp", "dp"};
    cfg.dp_grid_size = 200;
    std::ostringstream out2;
    run_sweep(cfg, out2, diag);
    rows = parse_csv(out2.str());
    CHECK(rows[0] == std::vector<std::string>{"B", "lower_bound", "ffp_mean", "ffp_ci95",
                                              "dp_gain", "gap_ffp_lower", "gap_ffp_dp"});
    // gap columns are consistent with the value columns
    const double ffp = std::stod(rows[1][2]);
    const double lower = std::stod(rows[1][1]);
    const double gain = std::stod(rows[1][4]);
    CHECK(std::stod(rows[1][5]) == doctest::Approx(ffp - lower).epsilon(1e-6));
    CHECK(std::stod(rows[1][6]) == doctest::Approx(ffp - gain).epsilon(1e-6));

    cfg.sweep_B.clear();
    CHECK_THROWS_AS(run_sweep(cfg, out, diag), ConfigError);
}

TEST_CASE("dp command writes the policy table") {
    ExperimentConfig cfg = small_sim_config();
    cfg.dp_grid_size = 50;
    std::ostringstream out, diag;
    run_dp(cfg, out, diag);
    const auto rows = parse_csv(out.str());
    REQUIRE(rows.size() == 51);
    CHECK(rows[0] == std::vector<std::string>{"battery_level", "theta", "power", "consumed"});
    CHECK(diag.str().find("gain=") != std::string::npos);

    cfg.model.kind = "uniform";
    cfg.model.uniform_lo = 0.0;
    cfg.model.uniform_hi = 2.0;
    CHECK_THROWS_AS(run_dp(cfg, out, diag), std::invalid_argument);
}

TEST_CASE("trace output: documented schema, one policy required") {
    ExperimentConfig cfg = small_sim_config();
    cfg.sim.horizon = 50;
    cfg.sim.trials = 2;
    cfg.trace_out = "/tmp/ehdist_test_trace.csv"; // implies trace recording
    cfg.policies = {"ffp"};
    std::ostringstream out, diag;
    run_simulate(cfg, out, diag);
    const auto trace = parse_csv(slurp(cfg.trace_out));
    REQUIRE(trace.size() == 51);
    CHECK(trace[0] == std::vector<std::string>{"slot", "arrival", "battery_before", "theta",
                                               "power", "distortion"});
    CHECK(std::stod(trace[1][2]) == doctest::Approx(2.0)); // b1 = B
    std::remove(cfg.trace_out.c_str());

    cfg.policies = {"ffp", "greedy"};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("verify: clean pass, tampered tolerance fails, bad config rejected") {
    ExperimentConfig cfg = small_sim_config();
    std::ostringstream report;
    CHECK(run_verify(cfg, report) == 0);
    CHECK(report.str().find("FAIL") == std::string::npos);
    CHECK(report.str().find("observed=") != std::string::npos);

    // a zero empirical-gap allowance must flip the sandwich suite to FAIL
    cfg.verify_gap_tolerance = 0.0;
    std::ostringstream tampered;
    CHECK(run_verify(cfg, tampered) == 1);
    CHECK(tampered.str().find("FAIL  sandwich_empirical") != std::string::npos);

    cfg = small_sim_config();
    cfg.params.sigma_c_sq = 0.0;
    CHECK_THROWS_AS(run_verify(cfg, report), ConfigError);
}

TEST_CASE("cli binary: config file plus overrides, flag wins") {
    {
        std::ofstream f("/tmp/ehdist_test_cfg.txt");
        f << "# experiment configuration\n"
          << "battery_capacity = 2.0\n"
          << "bernoulli_p = 0.5   # canonical half-filling process\n"
          << "horizon = 1000\n"
          << "trials = 4\n"
          << "seed = 7\n";
    }
    const std::string base = "simulate --config /tmp/ehdist_test_cfg.txt";
    CHECK(run_cli(base + " --out /tmp/ehdist_cfg_a.csv") == 0);
    // --seed must override the file
    CHECK(run_cli(base + " --seed 8 --out /tmp/ehdist_cfg_b.csv") == 0);
    const std::string a = slurp("/tmp/ehdist_cfg_a.csv");
    const std::string b = slurp("/tmp/ehdist_cfg_b.csv");
    CHECK(!a.empty());
    CHECK(a != b);
    CHECK(run_cli("simulate --config /tmp/ehdist_missing_cfg.txt") == 2);
    std::remove("/tmp/ehdist_test_cfg.txt");
    std::remove("/tmp/ehdist_cfg_a.csv");
    std::remove("/tmp/ehdist_cfg_b.csv");
}

TEST_CASE("cli binary: exit codes 0 / 1 / 2 and byte-identical reruns") {
    // success path with a tiny simulation
    const std::string base = "simulate --set horizon=2000 --set trials=4 --set seed=5 "
                             "--set battery_capacity=2 --set bernoulli_p=0.5";
    CHECK(run_cli(base + " --out /tmp/ehdist_cli_a.csv") == 0);
    CHECK(run_cli(base + " --out /tmp/ehdist_cli_b.csv") == 0);
    CHECK(run_cli(base + " --threads 2 --out /tmp/ehdist_cli_c.csv") == 0);
    const std::string a = slurp("/tmp/ehdist_cli_a.csv");
    CHECK(!a.empty());
    CHECK(a == slurp("/tmp/ehdist_cli_b.csv"));
    CHECK(a == slurp("/tmp/ehdist_cli_c.csv"));
    std::remove("/tmp/ehdist_cli_a.csv");
    std::remove("/tmp/ehdist_cli_b.csv");
    std::remove("/tmp/ehdist_cli_c.csv");

    // invalid input: rejected config
    CHECK(run_cli("bounds --set sigma_c_sq=0") == 2);
    CHECK(run_cli("bounds --set no_such_key=1") == 2);
    CHECK(run_cli("verify --set sigma_c_sq=0") == 2);
    // invalid input: unusable model for dp, unknown subcommand / flag
    CHECK(run_cli("dp --set model=uniform --set uniform_hi=1 --set battery_capacity=2") == 2);
    CHECK(run_cli("fourier") == 2);
    CHECK(run_cli("bounds --no-such-flag") == 2);
}
