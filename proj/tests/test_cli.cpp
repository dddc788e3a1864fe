#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "syncnet/config.hpp"

using namespace syncnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("syncnet_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const char* kAnalyzeCounterexample = R"({
  "command": "analyze",
  "system": {
    "field": "none",
    "W": [[0, 2, 1], [0, 0, 2], [1, 0, 0]],
    "coupling": {"Gamma": [[2, 1], [-17, 0]]}
  },
  "analyze": {"varrho": 0.1}
})";

}  // namespace

TEST_CASE("analyze config reproduces gamma = -1 on the counterexample") {
    ExperimentConfig cfg = parse_config(kAnalyzeCounterexample);
    fs::path dir = fresh_dir("analyze");
    CHECK(run(cfg, dir, true) == 0);

    auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["gamma"].get<double>() == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(report["results"]["a3_satisfied"].get<bool>() == false);
    CHECK(report["results"]["alpha_threshold"].is_null());
    CHECK(report["results"]["connectivity"].get<int>() == 1);
}

TEST_CASE("defaults are filled and echoed") {
    const char* text = R"({
      "command": "simulate",
      "system": {
        "field": "lorenz",
        "W": [[0, 1, 1], [1, 0, 1], [1, 1, 0]],
        "coupling": {"family": "identity", "beta": 1.0},
        "alpha": 5.0
      },
      "run": {"t_end": 21.0}
    })";
    ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.dt == 1e-4);        // lorenz default
    CHECK(cfg.t_burn == 20.0);    // lorenz burn-in default
    CHECK(cfg.effective["run"]["dt"].get<double>() == 1e-4);
    CHECK(cfg.effective["run"]["method"].get<std::string>() == "rk6");
}

TEST_CASE("schema violations carry json paths") {
    const char* ragged = R"({
      "command": "analyze",
      "system": {"field": "none", "W": [[0, 1], [1, 0], [0, 0]],
                 "coupling": {"Gamma": [[1]]}}
    })";
    try {
        parse_config(ragged);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.path == "/system/W");
        CHECK(std::string(e.what()).find("3x2") != std::string::npos);
    }

    const char* unknown = R"({
      "command": "analyze",
      "system": {"field": "none", "W": [[0]], "coupling": {"Gamma": [[1]]}},
      "run": {"dt": 0.001, "timestep": 0.001}
    })";
    try {
        parse_config(unknown);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.path == "/run/timestep");
    }

    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
}

TEST_CASE("coupling dimension mismatches name both dimensions") {
    const char* text = R"({
      "command": "simulate",
      "system": {"field": "lorenz", "W": [[0, 1], [1, 0]],
                 "coupling": {"Gamma": [[1, 0], [0, 1]]}, "alpha": 1.0}
    })";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.path == "/system/coupling/Gamma");
        CHECK(std::string(e.what()).find("2x2") != std::string::npos);
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("echoed config round-trips to an identical effective config") {
    ExperimentConfig cfg = parse_config(kAnalyzeCounterexample);
    ExperimentConfig again = parse_config(cfg.effective.dump());
    CHECK(cfg.effective == again.effective);
}

TEST_CASE("simulate with a single node writes the isolated trajectory") {
    const char* text = R"({
      "command": "simulate",
      "system": {"field": "lorenz", "W": [[0]],
                 "coupling": {"family": "identity", "beta": 1.0}, "alpha": 0.0},
      "run": {"t0": 0, "t_burn": 0, "t_end": 1.0, "dt": 0.001, "seed": 4}
    })";
    ExperimentConfig cfg = parse_config(text);
    fs::path dir = fresh_dir("simulate1");
    CHECK(run(cfg, dir, true) == 0);

    std::string traj = slurp(dir / "trajectory.csv");
    CHECK(traj.rfind("t,x_1_1,x_1_2,x_1_3\r\n", 0) == 0);
    std::string spread = slurp(dir / "spread.csv");
    CHECK(spread.rfind("t,spread\r\n", 0) == 0);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    const char* text = R"({
      "command": "simulate",
      "system": {"field": "lorenz", "W": [[0, 1, 1], [1, 0, 1], [1, 1, 0]],
                 "coupling": {"family": "identity", "beta": 1.0}, "alpha": 3.0},
      "run": {"t0": 0, "t_burn": 2.0, "t_end": 4.0, "dt": 0.001, "seed": 9}
    })";
    ExperimentConfig cfg = parse_config(text);
    fs::path d1 = fresh_dir("repro1");
    fs::path d2 = fresh_dir("repro2");
    CHECK(run(cfg, d1, true) == 0);
    CHECK(run(cfg, d2, true) == 0);
    CHECK(slurp(d1 / "trajectory.csv") == slurp(d2 / "trajectory.csv"));
    CHECK(slurp(d1 / "spread.csv") == slurp(d2 / "spread.csv"));
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));

    ExperimentConfig reseeded = parse_config(text);
    apply_seed_override(reseeded, 10);
    fs::path d3 = fresh_dir("repro3");
    CHECK(run(reseeded, d3, true) == 0);
    CHECK(slurp(d1 / "spread.csv") != slurp(d3 / "spread.csv"));
}

TEST_CASE("critical command writes a report with the threshold") {
    const char* text = R"({
      "command": "critical",
      "system": {"field": "nonautonomous_linear",
                 "W": [[0, 1], [1, 0]],
                 "coupling": {"Gamma": [[1, 1], [0, 1]]}, "alpha": 0.0},
      "run": {"t0": 0, "t_burn": 0, "t_end": 15.0, "dt": 0.001, "seed": 3,
              "scatter": "mean_zero", "initial_state": [0, 0]},
      "sweep": {"bracket": [0, 1], "tol_rel": 0.05}
    })";
    ExperimentConfig cfg = parse_config(text);
    fs::path dir = fresh_dir("critical");
    CHECK(run(cfg, dir, true) == 0);
    auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["no_threshold"].get<bool>() == false);
    double alpha_c = report["results"]["alpha_c"].get<double>();
    CHECK(alpha_c > 0.0);
    // with beta = 1 the normalised threshold equals alpha_c
    CHECK(report["results"]["rho_c"].get<double>() == doctest::Approx(alpha_c));
}

TEST_CASE("sweep command emits the csv table and slope") {
    const char* text = R"({
      "command": "sweep",
      "system": {"field": "nonautonomous_linear",
                 "W": [[0, 1], [1, 0]],
                 "coupling": {"family": "jordan_block"}, "alpha": 0.0},
      "run": {"t0": 0, "t_burn": 0, "t_end": 15.0, "dt": 0.001, "seed": 3,
              "scatter": "mean_zero", "initial_state": [0, 0]},
      "sweep": {"beta_grid": [0.3, 0.6], "bracket": [0, 1], "tol_rel": 0.05}
    })";
    ExperimentConfig cfg = parse_config(text);
    fs::path dir = fresh_dir("sweep");
    CHECK(run(cfg, dir, true) == 0);
    std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("beta,alpha_c,rho_c,bisection_width,evaluations\r\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

    auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["results"]["points"].size() == 2);
}

TEST_CASE("unwritable output directory fails with exit 1") {
    ExperimentConfig cfg = parse_config(kAnalyzeCounterexample);
    CHECK(run(cfg, "/proc/definitely/not/writable", true) == 1);
}
