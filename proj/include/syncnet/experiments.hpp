#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "syncnet/dynamics.hpp"
#include "syncnet/stability.hpp"

namespace syncnet {

/// Deterministic sampler on top of the fully specified mt19937_64 stream;
/// the uniform mapping avoids std::uniform_real_distribution so the draws
/// are identical across standard libraries.
class SeededSampler {
public:
    explicit SeededSampler(std::uint64_t seed) : eng_(seed) {}
    double uniform01() { return double(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    Eigen::VectorXd unit_ball(int dim);    ///< uniform in the closed unit ball
    Eigen::VectorXd unit_vector(int dim);  ///< uniform on the unit sphere

private:
    std::mt19937_64 eng_;
};

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

enum class ScatterMode {
    Ball,     ///< x_i = s0 + delta * u_i
    MeanZero  ///< ball samples recentred to zero mean (exact mirror for n = 2)
};

struct RunConfig {
    NetworkSystem system;
    double t0 = 0.0;
    double t_burn = 0.0;  ///< scatter time: isolated burn-in runs on [t0, t_burn]
    double t_end = 50.0;
    double dt = 1e-3;
    RKMethod method = RKMethod::RK6;
    double delta = 1e-3;  ///< initial spread radius
    std::uint64_t seed = 1;
    double sync_tol = 1e-6;
    double rate_min = 0.05;
    std::optional<std::pair<double, double>> rate_fit_window;  ///< default: [t_burn, t_end]
    double divergence_guard = 1e6;
    std::optional<Eigen::VectorXd> initial_state;  ///< single-node state before burn-in
    ScatterMode scatter = ScatterMode::Ball;
    int store_stride = 64;  ///< trajectory thinning; the observed series stays per-step

    void validate() const;
};

/// max over pairs of the Euclidean distance between node states.
double pairwise_spread(const NetworkState& X, int node_dim);

/// average synchronisation error e_s = 1/(n(n-1)) sum_{i != j} |x_i - x_j|.
double sync_error(const NetworkState& X, int node_dim);

struct DecayRateFit {
    double rate = 0.0;  ///< least-squares slope of log(spread) against t
    bool floored = false;
    bool exact_zero = false;
    int points_used = 0;
};

inline constexpr double kSpreadFloor = 1e-13;

DecayRateFit estimate_decay_rate(const std::vector<double>& times,
                                 const std::vector<double>& values,
                                 std::pair<double, double> window);

struct SyncRunResult {
    std::vector<double> times;
    std::vector<double> spread;
    DecayRateFit fit;
    double decay_rate = 0.0;
    bool synchronised = false;
    bool diverged = false;
    double initial_spread = 0.0;
    double final_spread = 0.0;
    Eigen::VectorXd burn_state;  ///< isolated state at the scatter time
    Trajectory trajectory;       ///< thinned by store_stride
};

/// Burns in the isolated node on [t0, t_burn], scatters n copies in a
/// delta-ball, integrates the coupled network on [t_burn, t_end], and
/// classifies the run: synchronised iff the fitted rate is below -rate_min
/// and the final spread fell under sync_tol times the initial spread.
SyncRunResult classify_run(const RunConfig& config);

struct CriticalCouplingResult {
    double beta = 0.0;
    double alpha_c = 0.0;
    double rho_c = 0.0;        ///< alpha_c * beta
    double rho_c_gamma = 0.0;  ///< alpha_c * gamma when gamma was supplied
    double bisection_width = 0.0;
    int evaluations = 0;
    bool at_lower_edge = false;  ///< already synchronised at the lower bracket
    bool no_threshold = false;   ///< bracket could not be established
};

struct CriticalSearchOptions {
    double tol_abs = 0.0;
    double tol_rel = 0.01;
    double bracket_cap = 1e7;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
};

/// Bisection on the coupling strength with the classify_run predicate. The
/// upper bracket edge is doubled until it synchronises (up to the cap).
CriticalCouplingResult find_critical_coupling(const RunConfig& base,
                                              std::pair<double, double> alpha_bracket,
                                              const CriticalSearchOptions& options = {});

struct SweepSpec {
    RunConfig base;  ///< coupling replaced per grid point, alpha by the search
    std::function<CouplingFunction(double beta)> coupling_family;
    std::vector<double> beta_grid;  ///< positive, sorted ascending
    std::pair<double, double> bracket{0.0, 1.0};
    CriticalSearchOptions search;
    std::optional<std::pair<double, double>> fit_range;  ///< beta sub-range for the slope
};

struct SweepResult {
    std::vector<CriticalCouplingResult> points;
    double loglog_slope = 0.0;  ///< slope of log(rho_c) vs log(beta)
    bool slope_defined = false;
    int points_in_fit = 0;
};

/// Runs one critical-coupling search per grid point, in parallel up to
/// SYNCNET_THREADS workers, seeded per point and merged in grid order.
SweepResult beta_sweep(const SweepSpec& spec);

struct PersistenceResult {
    std::vector<double> times;
    std::vector<double> es;  ///< e_s(t)
    double limsup_estimate = 0.0;
    PersistenceBound bound;
    bool bound_valid = false;
    double ratio_to_bound = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
    double gamma = 0.0;
};

struct PersistenceOptions {
    double tail_fraction = 0.3;
    double C = 1.0;
    double rho = 0.0;
};

/// Integrates the perturbed network and estimates limsup e_s over the tail
/// window. Requires per-node perturbations with a declared bound and a
/// symmetric weight matrix.
PersistenceResult persistence_experiment(const RunConfig& config,
                                         const PersistenceOptions& options = {});

/// Constant per-node biases g_i(t, x) = eps0 * u_i with seeded unit directions.
Perturbations constant_biases(int n, int m, double eps0, std::uint64_t seed);

}  // namespace syncnet
