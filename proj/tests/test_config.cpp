// test_config.cpp — config parsing, overrides, grids, hard failure on typos
#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>
#include <string>

#include <lmg/config.hpp>

using namespace lmg;

TEST_CASE("empty text yields the documented defaults") {
    const RunConfig cfg = parse_config("");
    REQUIRE(cfg.params.h == 1.0);
    REQUIRE(cfg.params.gamma == 1.5);
    REQUIRE(cfg.params.kappa == 0.05);
    REQUIRE(cfg.params.n_spins == 1000);
    REQUIRE_FALSE(cfg.bin_width.has_value());
    REQUIRE_FALSE(cfg.eta.has_value());
    REQUIRE_FALSE(cfg.initial.has_value());
    REQUIRE(cfg.dt == 0.005);
    REQUIRE(cfg.t_max == 1000.0);
    REQUIRE(cfg.tau_count == 26);
    REQUIRE(cfg.esqpt_source == "feedback_sweep");
    REQUIRE(cfg.out_dir == ".");
    REQUIRE(cfg.threads == 0);
}

TEST_CASE("a full config file sets every field") {
    const std::string text =
        "# run card\n"
        "[model]\n"
        "gamma_over_h = 1.8\n"
        "gamma_y_over_h = 0.2\n"
        "kappa_over_h = 0.1\n"
        "lambda_over_h = 0.9\n"
        "tau_over_h = 0.4\n"
        "n_spins = 400\n"
        "\n"
        "[spectrum]\n"
        "bin_width = 0.02\n"
        "eta = 0.003\n"
        "energy_min = -0.55\n"
        "energy_max = 0.0\n"
        "energy_count = 56\n"
        "\n"
        "[evolve]\n"
        "dt_over_h = 0.004\n"
        "t_max_over_h = 750\n"
        "initial_jx = 0.3\n"
        "initial_jy = 0.0\n"
        "initial_jz = 0.4\n"
        "\n"
        "[stability]\n"
        "tau_min_over_h = 0.05\n"
        "tau_max_over_h = 0.8\n"
        "tau_count = 11\n"
        "lambda_min_over_h = 0.6\n"
        "lambda_max_over_h = 1.9\n"
        "lambda_count = 7\n"
        "z_max = 5\n"
        "\n"
        "[signals]\n"
        "settle_over_h = 600\n"
        "observe_over_h = 250\n"
        "delta_t_over_h = 15\n"
        "stride_over_h = 8\n"
        "esqpt_source = closed_orbit\n"
        "\n"
        "[output]\n"
        "out_dir = runs\n"
        "seed = 42\n"
        "threads = 4\n";
    const RunConfig cfg = parse_config(text);
    REQUIRE(cfg.params.gamma == 1.8);
    REQUIRE(cfg.params.gamma_y == 0.2);
    REQUIRE(cfg.params.kappa == 0.1);
    REQUIRE(cfg.params.lambda == 0.9);
    REQUIRE(cfg.params.tau == 0.4);
    REQUIRE(cfg.params.n_spins == 400);
    REQUIRE(cfg.bin_width.value() == 0.02);
    REQUIRE(cfg.eta.value() == 0.003);
    REQUIRE(cfg.energy_count == 56);
    REQUIRE(cfg.dt == 0.004);
    REQUIRE(cfg.t_max == 750.0);
    REQUIRE(cfg.initial.has_value());
    REQUIRE(cfg.initial->jx == 0.3);
    REQUIRE(cfg.initial->jz == 0.4);
    REQUIRE(cfg.tau_count == 11);
    REQUIRE(cfg.lambda_count == 7);
    REQUIRE(cfg.z_max == 5);
    REQUIRE(cfg.settle == 600.0);
    REQUIRE(cfg.observe == 250.0);
    REQUIRE(cfg.delta_t == 15.0);
    REQUIRE(cfg.stride == 8.0);
    REQUIRE(cfg.esqpt_source == "closed_orbit");
    REQUIRE(cfg.out_dir == "runs");
    REQUIRE(cfg.seed == 42);
    REQUIRE(cfg.threads == 4);
}

TEST_CASE("unknown keys fail with the offending position") {
    try {
        parse_config("gamma_over_h = 1.5\n  gamna_over_h = 1.5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line_no == 2);
        REQUIRE(e.col_no == 3);
        REQUIRE(std::string(e.what()).find("gamna_over_h") != std::string::npos);
    }
}

TEST_CASE("malformed lines are hard errors") {
    REQUIRE_THROWS_AS(parse_config("gamma_over_h = 1.5\ngamma_over_h = 2\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("gamma_over_h 1.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("= 1.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("gamma_over_h = abc\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("n_spins = 12.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("seed = -1\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("[mystery]\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("[model\n"), ConfigError);
    // Inline comments are not part of the format.
    REQUIRE_THROWS_AS(parse_config("gamma_over_h = 1.5 # strong\n"), ConfigError);
    // The initial state is all-or-nothing.
    REQUIRE_THROWS_AS(parse_config("initial_jx = 0.3\ninitial_jz = 0.4\n"), ConfigError);
}

TEST_CASE("semantic validation rejects inconsistent values") {
    REQUIRE_THROWS_AS(parse_config("dt_over_h = 0\n"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_config("tau_min_over_h = 0.5\ntau_max_over_h = 0.2\n"),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(parse_config("energy_count = 0\n"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_config("esqpt_source = sideways\n"), std::invalid_argument);
    REQUIRE_THROWS_AS(
        parse_config("initial_jx = 0.9\ninitial_jy = 0.0\ninitial_jz = 0.0\n"),
        std::invalid_argument); // off the sphere
    REQUIRE_THROWS_AS(parse_config("kappa_over_h = -0.1\n"), std::invalid_argument);
}

TEST_CASE("overrides stack on a parsed config and re-validate") {
    RunConfig cfg = parse_config("gamma_over_h = 1.6\n");
    apply_overrides(cfg, {"n_spins=200", "eta=0.01"});
    REQUIRE(cfg.params.gamma == 1.6);
    REQUIRE(cfg.params.n_spins == 200);
    REQUIRE(cfg.eta.value() == 0.01);

    // A grouped field may arrive across several overrides.
    apply_overrides(cfg, {"initial_jx=0.3", "initial_jy=0.0", "initial_jz=0.4"});
    REQUIRE(cfg.initial->jz == 0.4);
    // Once set, a single component may be nudged alone (state stays on the sphere).
    apply_overrides(cfg, {"initial_jx=-0.3"});
    REQUIRE(cfg.initial->jx == -0.3);

    REQUIRE_THROWS_AS(apply_overrides(cfg, {"whatever=1"}), ConfigError);
    REQUIRE_THROWS_AS(apply_overrides(cfg, {"n_spins"}), ConfigError);
    REQUIRE_THROWS_AS(apply_overrides(cfg, {"dt_over_h=-1"}), std::invalid_argument);
}

TEST_CASE("grids are inclusive and degenerate counts collapse to the start") {
    RunConfig cfg;
    cfg.tau_min = 0.1;
    cfg.tau_max = 0.6;
    cfg.tau_count = 26;
    const auto taus = cfg.tau_grid();
    REQUIRE(taus.size() == 26);
    REQUIRE(taus.front() == Catch::Approx(0.1).margin(1e-15));
    REQUIRE(taus.back() == Catch::Approx(0.6).margin(1e-15));
    REQUIRE(taus[1] - taus[0] == Catch::Approx(0.02).margin(1e-12));
    REQUIRE(RunConfig::linspace(2.0, 9.0, 1) == std::vector<double>{2.0});
}
