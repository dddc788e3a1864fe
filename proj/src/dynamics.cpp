#include "syncnet/dynamics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace syncnet {

CouplingFunction linear_coupling(const RealMatrix& Gamma) {
    if (Gamma.rows() != Gamma.cols()) throw DimensionError("linear_coupling: Gamma must be square");
    CouplingFunction h;
    h.dim = static_cast<int>(Gamma.rows());
    h.Gamma = Gamma;
    h.linear = true;
    h.eval = [Gamma](std::span<const double> x, std::span<double> out) {
        const int m = static_cast<int>(Gamma.rows());
        for (int k = 0; k < m; ++k) {
            double acc = 0.0;
            for (int l = 0; l < m; ++l) acc += Gamma(k, l) * x[l];
            out[k] = acc;
        }
    };
    return h;
}

void network_rhs(const NetworkSystem& system, double t, const NetworkState& X, NetworkState& dX) {
    const int n = system.n();
    const int m = system.m();
    if (X.size() != static_cast<Eigen::Index>(n) * m) {
        throw DimensionError("network_rhs: state has size " + std::to_string(X.size()) +
                             ", expected " + std::to_string(n * m));
    }
    if (system.coupling.dim != m) {
        throw DimensionError("network_rhs: coupling dimension mismatch");
    }
    dX.resize(X.size());

    static thread_local std::vector<double> diff, hval, gval;
    diff.resize(m);
    hval.resize(m);
    gval.resize(m);

    const RealMatrix& W = system.weights.W;
    for (int i = 0; i < n; ++i) {
        std::span<const double> xi(X.data() + i * m, m);
        std::span<double> di(dX.data() + i * m, m);
        system.field.eval(t, xi, di);
        if (system.perturbations) {
            system.perturbations->g[i](t, xi, gval);
            for (int k = 0; k < m; ++k) di[k] += gval[k];
        }
        // left-to-right over j for reproducible summation
        for (int j = 0; j < n; ++j) {
            double wij = W(i, j);
            if (wij == 0.0) continue;
            const double* xj = X.data() + j * m;
            for (int k = 0; k < m; ++k) diff[k] = xj[k] - xi[k];
            system.coupling.eval(diff, hval);
            for (int k = 0; k < m; ++k) di[k] += system.alpha * wij * hval[k];
        }
    }
}

double max_node_norm(const NetworkState& X, int node_dim) {
    if (node_dim <= 0 || X.size() % node_dim != 0) return X.norm();
    const int n = static_cast<int>(X.size()) / node_dim;
    double best = 0.0;
    for (int i = 0; i < n; ++i) best = std::max(best, X.segment(i * node_dim, node_dim).norm());
    return best;
}

namespace {
constexpr double kLorenzSigma = 10.0;
constexpr double kLorenzR = 28.0;
constexpr double kLorenzB = 8.0 / 3.0;
}  // namespace

VectorField builtin_lorenz() {
    VectorField f;
    f.dim = 3;
    f.name = "lorenz";
    f.eval = [](double, std::span<const double> x, std::span<double> out) {
        const double u = x[0], v = x[1], w = x[2];
        out[0] = kLorenzSigma * (v - u);
        out[1] = u * (kLorenzR - w) - v;
        out[2] = -kLorenzB * w + u * v;
    };
    f.jacobian = [](double, std::span<const double> x) {
        RealMatrix J(3, 3);
        J << -kLorenzSigma, kLorenzSigma, 0.0,
             kLorenzR - x[2], -1.0, -x[0],
             x[1], x[0], -kLorenzB;
        return J;
    };
    return f;
}

NonautonomousLinear builtin_nonautonomous_linear() {
    auto matrix = [](double t) {
        const double c = std::cos(6.0 * t), s = std::sin(6.0 * t);
        RealMatrix A(2, 2);
        A << -1.0 - 9.0 * c * c + 12.0 * s * c, 12.0 * c * c + 9.0 * s * c,
             -12.0 * s * s + 9.0 * s * c,       -1.0 - 9.0 * s * s - 12.0 * s * c;
        return A;
    };

    NonautonomousLinear sys;
    sys.matrix = matrix;
    sys.field.dim = 2;
    sys.field.name = "nonautonomous_linear";
    sys.field.eval = [](double t, std::span<const double> x, std::span<double> out) {
        const double c = std::cos(6.0 * t), s = std::sin(6.0 * t);
        const double a11 = -1.0 - 9.0 * c * c + 12.0 * s * c;
        const double a12 = 12.0 * c * c + 9.0 * s * c;
        const double a21 = -12.0 * s * s + 9.0 * s * c;
        const double a22 = -1.0 - 9.0 * s * s - 12.0 * s * c;
        out[0] = a11 * x[0] + a12 * x[1];
        out[1] = a21 * x[0] + a22 * x[1];
    };
    sys.field.jacobian = [matrix](double t, std::span<const double>) { return matrix(t); };

    // Solution through x(0) = (5, 5); the e^{2t} and e^{-13t} rates match the
    // Floquet exponents of A(t).
    sys.analytic_solution = [](double t) {
        const double c = std::cos(6.0 * t), s = std::sin(6.0 * t);
        const double g = std::exp(2.0 * t), d = std::exp(-13.0 * t);
        return Eigen::Vector2d(3.0 * g * (c + 2.0 * s) + d * (2.0 * c - s),
                               3.0 * g * (2.0 * c - s) + d * (-c - 2.0 * s));
    };
    sys.analytic_derivative = [](double t) {
        const double c = std::cos(6.0 * t), s = std::sin(6.0 * t);
        const double g = std::exp(2.0 * t), d = std::exp(-13.0 * t);
        return Eigen::Vector2d(g * (42.0 * c - 6.0 * s) + d * (-32.0 * c + s),
                               g * (-6.0 * c - 42.0 * s) + d * (c + 32.0 * s));
    };
    return sys;
}

VectorField linear_field(const RealMatrix& M, std::string name) {
    if (M.rows() != M.cols()) throw DimensionError("linear_field: matrix must be square");
    VectorField f;
    f.dim = static_cast<int>(M.rows());
    f.name = std::move(name);
    f.eval = [M](double, std::span<const double> x, std::span<double> out) {
        const int m = static_cast<int>(M.rows());
        for (int k = 0; k < m; ++k) {
            double acc = 0.0;
            for (int l = 0; l < m; ++l) acc += M(k, l) * x[l];
            out[k] = acc;
        }
    };
    f.jacobian = [M](double, std::span<const double>) { return M; };
    return f;
}

namespace {

struct Tableau {
    int stages;
    const double* a;  // row-major lower triangle, stages x stages
    const double* b;
    const double* c;
};

const double rk4_a[16] = {
    0, 0, 0, 0,
    0.5, 0, 0, 0,
    0, 0.5, 0, 0,
    0, 0, 1.0, 0};
const double rk4_b[4] = {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6};
const double rk4_c[4] = {0, 0.5, 0.5, 1.0};

// Butcher's seven-stage sixth-order method.
const double rk6_a[49] = {
    0, 0, 0, 0, 0, 0, 0,
    1.0 / 2, 0, 0, 0, 0, 0, 0,
    2.0 / 9, 4.0 / 9, 0, 0, 0, 0, 0,
    7.0 / 36, 2.0 / 9, -1.0 / 12, 0, 0, 0, 0,
    -35.0 / 144, -55.0 / 36, 35.0 / 48, 15.0 / 8, 0, 0, 0,
    -1.0 / 360, -11.0 / 36, -1.0 / 8, 1.0 / 2, 1.0 / 10, 0, 0,
    -41.0 / 260, 22.0 / 13, 43.0 / 156, -118.0 / 39, 32.0 / 195, 80.0 / 39, 0};
const double rk6_b[7] = {13.0 / 200, 0, 11.0 / 40, 11.0 / 40, 4.0 / 25, 4.0 / 25, 13.0 / 200};
const double rk6_c[7] = {0, 1.0 / 2, 2.0 / 3, 1.0 / 3, 5.0 / 6, 1.0 / 6, 1.0};

Tableau tableau_for(RKMethod method) {
    if (method == RKMethod::RK4) return {4, rk4_a, rk4_b, rk4_c};
    return {7, rk6_a, rk6_b, rk6_c};
}

}  // namespace

Trajectory integrate(const RhsFn& rhs, const NetworkState& X0, double t0, double t1, double dt,
                     RKMethod method, const IntegrateOptions& options,
                     const StepObserver& observer) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
    if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 must exceed t0");

    const Tableau tb = tableau_for(method);
    const long long nsteps = std::max(1LL, std::llround((t1 - t0) / dt));
    const int stride = std::max(1, options.store_stride);

    Trajectory traj;
    traj.step = dt;
    traj.times.reserve(static_cast<std::size_t>(nsteps / stride) + 2);
    traj.states.reserve(static_cast<std::size_t>(nsteps / stride) + 2);

    NetworkState X = X0;
    std::vector<NetworkState> k(tb.stages, NetworkState(X.size()));
    NetworkState work(X.size());

    auto record = [&](double t, const NetworkState& state) {
        traj.times.push_back(t);
        traj.states.push_back(state);
    };

    record(t0, X);
    if (observer) observer(t0, X);
    traj.last_valid_time = t0;

    for (long long step = 0; step < nsteps; ++step) {
        const double t = t0 + double(step) * dt;
        for (int s = 0; s < tb.stages; ++s) {
            work = X;
            for (int j = 0; j < s; ++j) {
                double aij = tb.a[s * tb.stages + j];
                if (aij != 0.0) work += (dt * aij) * k[j];
            }
            rhs(t + tb.c[s] * dt, work, k[s]);
        }
        for (int s = 0; s < tb.stages; ++s) {
            if (tb.b[s] != 0.0) X += (dt * tb.b[s]) * k[s];
        }
        const double tn = t0 + double(step + 1) * dt;

        bool finite = X.allFinite();
        double norm = finite ? max_node_norm(X, options.node_dim) : 0.0;
        if (!finite || norm > options.divergence_guard) {
            traj.diverged = true;
            break;
        }
        traj.last_valid_time = tn;
        if (observer) observer(tn, X);
        if ((step + 1) % stride == 0 || step + 1 == nsteps) record(tn, X);
    }
    return traj;
}

Trajectory integrate_network(const NetworkSystem& system, const NetworkState& X0, double t0,
                             double t1, double dt, RKMethod method, const IntegrateOptions& options,
                             const StepObserver& observer) {
    IntegrateOptions opts = options;
    opts.node_dim = system.m();
    RhsFn rhs = [&system](double t, const NetworkState& X, NetworkState& dX) {
        network_rhs(system, t, X, dX);
    };
    return integrate(rhs, X0, t0, t1, dt, method, opts, observer);
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj, int node_dim, CsvForm form) {
    const int total = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
    const int m = node_dim > 0 ? node_dim : total;
    const int n = m > 0 ? total / m : 0;
    std::string out;
    if (form == CsvForm::Wide) {
        out += "t";
        for (int i = 1; i <= n; ++i)
            for (int k = 1; k <= m; ++k)
                out += ",x_" + std::to_string(i) + "_" + std::to_string(k);
        out += "\r\n";
        for (std::size_t row = 0; row < traj.times.size(); ++row) {
            append_double(out, traj.times[row]);
            for (int idx = 0; idx < total; ++idx) {
                out += ',';
                append_double(out, traj.states[row](idx));
            }
            out += "\r\n";
        }
    } else {
        out += "t,node,comp,value\r\n";
        for (std::size_t row = 0; row < traj.times.size(); ++row) {
            for (int i = 0; i < n; ++i) {
                for (int k = 0; k < m; ++k) {
                    append_double(out, traj.times[row]);
                    out += ',' + std::to_string(i + 1) + ',' + std::to_string(k + 1) + ',';
                    append_double(out, traj.states[row](i * m + k));
                    out += "\r\n";
                }
            }
        }
    }
    return out;
}

}  // namespace syncnet
