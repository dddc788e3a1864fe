#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "syncnet/experiments.hpp"

namespace syncnet {

enum class Command { Analyze, Simulate, Critical, Sweep, Persistence };

/// Schema violation with a JSON-pointer-style path to the offending key.
struct ConfigError : std::runtime_error {
    ConfigError(std::string where, const std::string& message)
        : std::runtime_error(where.empty() ? message : where + ": " + message),
          path(std::move(where)) {}
    std::string path;
};

struct ExperimentConfig {
    Command command = Command::Analyze;
    nlohmann::json effective;  ///< full config with defaults filled; re-parses identically

    // system
    std::string field_name;
    RealMatrix field_matrix;  ///< for field == "linear"
    RealMatrix W;
    bool coupling_is_family = false;
    std::string coupling_family;  ///< "identity" | "jordan_block"
    double coupling_beta = 1.0;
    RealMatrix Gamma;  ///< explicit coupling matrix
    double alpha = 0.0;
    bool has_perturbations = false;
    double pert_eps0 = 0.0;
    std::uint64_t pert_seed = 0;

    // run
    double t0 = 0.0, t_burn = 0.0, t_end = 50.0, dt = 1e-3;
    RKMethod method = RKMethod::RK6;
    double delta = 1e-3, sync_tol = 1e-6, rate_min = 0.05, divergence_guard = 1e6;
    std::uint64_t seed = 1;
    std::optional<std::pair<double, double>> rate_fit_window;
    std::optional<Eigen::VectorXd> initial_state;
    ScatterMode scatter = ScatterMode::Ball;
    int store_stride = 64;

    // sweep
    std::vector<double> beta_grid;
    std::pair<double, double> bracket{0.0, 1.0};
    double tol_abs = 0.0, tol_rel = 0.01, bracket_cap = 1e7;
    std::optional<std::pair<double, double>> fit_range;

    // persistence
    double tail_fraction = 0.3;
    double pers_C = 1.0, pers_rho = 0.0;

    // analyze
    double varrho = 1.0, jordan_eps_ratio = 0.5, K = 1.0;
    std::optional<double> sigma;

    // output
    CsvForm csv_form = CsvForm::Wide;
    std::string report_name = "report.json";
    std::string trajectory_csv, spread_csv, sweep_csv, es_csv;
};

/// Strict parse: unknown keys are rejected with path-qualified messages,
/// defaults are filled and echoed.
ExperimentConfig parse_config(const std::string& text);

void apply_seed_override(ExperimentConfig& cfg, std::uint64_t seed);

int field_dimension(const ExperimentConfig& cfg);
VectorField build_field(const ExperimentConfig& cfg);
CouplingFunction build_coupling(const ExperimentConfig& cfg, std::optional<double> beta = {});
NetworkSystem build_system(const ExperimentConfig& cfg);
RunConfig build_run_config(const ExperimentConfig& cfg);

/// Executes the configured command and writes the report plus CSV artifacts
/// into out_dir. Returns the process exit status: 0 success, 1 validation or
/// I/O error, 2 runtime failure (divergence or missing threshold where that is
/// a failure). The report is written whenever it is reachable.
int run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool quiet = false);

}  // namespace syncnet
