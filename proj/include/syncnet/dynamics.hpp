#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syncnet/network.hpp"

namespace syncnet {

using NetworkState = Eigen::VectorXd;

/// Isolated node dynamics x' = f(t, x).
struct VectorField {
    int dim = 0;
    std::function<void(double t, std::span<const double> x, std::span<double> out)> eval;
    /// optional analytic Jacobian D_2 f(t, x)
    std::function<RealMatrix(double t, std::span<const double> x)> jacobian;
    std::string name;
};

/// Diffusion-like coupling h with h(0) = 0 and Gamma = Dh(0).
struct CouplingFunction {
    int dim = 0;
    std::function<void(std::span<const double> x, std::span<double> out)> eval;
    RealMatrix Gamma;
    bool linear = true;
};

CouplingFunction linear_coupling(const RealMatrix& Gamma);

struct Perturbations {
    double eps0 = 0.0;  ///< declared sup-norm bound on every g_i
    std::vector<std::function<void(double t, std::span<const double> x, std::span<double> out)>> g;
};

/// x_i' = f(t, x_i) + g_i(t, x_i) + alpha * sum_j W_ij h(x_j - x_i)
struct NetworkSystem {
    VectorField field;
    CouplingFunction coupling;
    WeightMatrix weights;
    double alpha = 0.0;
    std::optional<Perturbations> perturbations;

    int n() const { return weights.n; }
    int m() const { return field.dim; }
};

void network_rhs(const NetworkSystem& system, double t, const NetworkState& X, NetworkState& dX);

/// max-over-nodes Euclidean norm on (R^m)^n
double max_node_norm(const NetworkState& X, int node_dim);

// --- built-in fields ---

/// Lorenz field at the classical parameters sigma=10, r=28, b=8/3, with
/// analytic Jacobian.
VectorField builtin_lorenz();

/// Planar nonautonomous system x' = A(t) x whose A(t) has eigenvalues -1 and
/// -10 for every t yet admits a solution growing like e^{2t}.
struct NonautonomousLinear {
    VectorField field;
    std::function<RealMatrix(double t)> matrix;
    std::function<Eigen::Vector2d(double t)> analytic_solution;  ///< solution with x(0) = (5,5)
    std::function<Eigen::Vector2d(double t)> analytic_derivative;
};

NonautonomousLinear builtin_nonautonomous_linear();

/// Constant-coefficient linear field x' = M x.
VectorField linear_field(const RealMatrix& M, std::string name = "linear");

// --- integration ---

enum class RKMethod { RK4, RK6 };

struct Trajectory {
    std::vector<double> times;
    std::vector<NetworkState> states;
    double step = 0.0;
    bool diverged = false;
    double last_valid_time = 0.0;
};

struct IntegrateOptions {
    double divergence_guard = 1e6;
    int node_dim = 0;      ///< 0: treat the whole state as one node
    int store_stride = 1;  ///< keep every k-th step (the final step is always kept)
};

using RhsFn = std::function<void(double t, const NetworkState& X, NetworkState& dX)>;
using StepObserver = std::function<void(double t, const NetworkState& X)>;

/// Fixed-step explicit Runge-Kutta integration over [t0, t1]. RK4 is the
/// classical tableau; RK6 is Butcher's seven-stage sixth-order method.
/// Integration stops early with the diverged flag when the state norm exceeds
/// the guard or the right-hand side stops being finite.
Trajectory integrate(const RhsFn& rhs, const NetworkState& X0, double t0, double t1, double dt,
                     RKMethod method, const IntegrateOptions& options = {},
                     const StepObserver& observer = nullptr);

Trajectory integrate_network(const NetworkSystem& system, const NetworkState& X0, double t0,
                             double t1, double dt, RKMethod method,
                             const IntegrateOptions& options = {},
                             const StepObserver& observer = nullptr);

enum class CsvForm { Wide, Long };

/// Wide form: t,x_1_1,...,x_n_m ; long form: t,node,comp,value.
std::string trajectory_to_csv(const Trajectory& traj, int node_dim, CsvForm form);

}  // namespace syncnet
