#include "syncnet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace syncnet {

Eigen::VectorXd SeededSampler::unit_ball(int dim) {
    Eigen::VectorXd v(dim);
    while (true) {
        double norm2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            v(i) = uniform(-1.0, 1.0);
            norm2 += v(i) * v(i);
        }
        if (norm2 <= 1.0) return v;
    }
}

Eigen::VectorXd SeededSampler::unit_vector(int dim) {
    // Box-Muller on our own uniforms keeps the stream implementation-independent.
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; i += 2) {
        double u1 = std::max(uniform01(), 1e-300);
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        v(i) = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < dim) v(i + 1) = r * std::sin(2.0 * M_PI * u2);
    }
    double norm = v.norm();
    if (norm == 0.0) {
        v.setZero();
        v(0) = 1.0;
        return v;
    }
    return v / norm;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 step on base xor a spaced index
    std::uint64_t z = base ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void RunConfig::validate() const {
    if (!(t0 <= t_burn && t_burn < t_end)) {
        throw std::invalid_argument("RunConfig: need t0 <= t_burn < t_end");
    }
    if (!(delta > 0.0)) throw std::invalid_argument("RunConfig: delta must be > 0");
    if (!(sync_tol > 0.0)) throw std::invalid_argument("RunConfig: sync_tol must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("RunConfig: dt must be > 0");
    if (system.field.dim != system.coupling.dim) {
        throw DimensionError("RunConfig: field and coupling dimensions differ");
    }
    if (system.perturbations &&
        system.perturbations->g.size() != static_cast<std::size_t>(system.n())) {
        throw DimensionError("RunConfig: one perturbation per node required");
    }
}

double pairwise_spread(const NetworkState& X, int node_dim) {
    const int n = static_cast<int>(X.size()) / node_dim;
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = (X.segment(i * node_dim, node_dim) - X.segment(j * node_dim, node_dim))
                           .norm();
            best = std::max(best, d);
        }
    }
    return best;
}

double sync_error(const NetworkState& X, int node_dim) {
    const int n = static_cast<int>(X.size()) / node_dim;
    if (n < 2) throw std::domain_error("sync_error: need at least two nodes");
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            sum += (X.segment(i * node_dim, node_dim) - X.segment(j * node_dim, node_dim)).norm();
        }
    }
    return 2.0 * sum / (double(n) * double(n - 1));
}

DecayRateFit estimate_decay_rate(const std::vector<double>& times,
                                 const std::vector<double>& values,
                                 std::pair<double, double> window) {
    DecayRateFit fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    int in_window = 0;
    bool any_positive = false;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window.first || times[i] > window.second) continue;
        ++in_window;
        if (values[i] > 0.0) any_positive = true;
        if (values[i] <= kSpreadFloor) continue;
        double x = times[i], y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    fit.points_used = used;
    if (in_window > 0 && !any_positive) {
        fit.exact_zero = true;
        return fit;
    }
    fit.floored = used < in_window;
    if (used < 2) {
        fit.floored = true;
        return fit;
    }
    double denom = double(used) * sxx - sx * sx;
    fit.rate = denom != 0.0 ? (double(used) * sxy - sx * sy) / denom : 0.0;
    return fit;
}

namespace {

Eigen::VectorXd default_initial_state(const VectorField& field) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(field.dim);
    if (field.name == "lorenz") s << 1.0, 1.0, 1.0;
    return s;
}

Eigen::VectorXd burn_in(const RunConfig& cfg) {
    Eigen::VectorXd s0 = cfg.initial_state ? *cfg.initial_state
                                           : default_initial_state(cfg.system.field);
    if (s0.size() != cfg.system.field.dim) {
        throw DimensionError("classify_run: initial state has wrong dimension");
    }
    if (cfg.t_burn > cfg.t0) {
        RhsFn iso = [&cfg](double t, const NetworkState& x, NetworkState& dx) {
            dx.resize(x.size());
            cfg.system.field.eval(t, {x.data(), std::size_t(x.size())},
                                  {dx.data(), std::size_t(dx.size())});
        };
        IntegrateOptions opts;
        opts.divergence_guard = cfg.divergence_guard;
        opts.store_stride = 1 << 20;
        Trajectory t = integrate(iso, s0, cfg.t0, cfg.t_burn, cfg.dt, cfg.method, opts);
        if (t.diverged) throw NumericalError("classify_run: isolated burn-in diverged");
        s0 = t.states.back();
    }
    return s0;
}

Eigen::VectorXd scatter_nodes(const RunConfig& cfg, const Eigen::VectorXd& s0) {
    const int n = cfg.system.n(), m = cfg.system.m();
    SeededSampler sampler(cfg.seed);
    std::vector<Eigen::VectorXd> u(n);
    for (int i = 0; i < n; ++i) u[i] = sampler.unit_ball(m);
    if (cfg.scatter == ScatterMode::MeanZero) {
        if (n == 2) {
            u[1] = -u[0];  // exact mirror keeps the synchronised mode exactly unexcited
        } else {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
            for (const auto& ui : u) mean += ui;
            mean /= double(n);
            for (auto& ui : u) ui -= mean;
        }
    }
    Eigen::VectorXd X0(n * m);
    for (int i = 0; i < n; ++i) X0.segment(i * m, m) = s0 + cfg.delta * u[i];
    return X0;
}

}  // namespace

SyncRunResult classify_run(const RunConfig& cfg) {
    cfg.validate();
    const int m = cfg.system.m();

    SyncRunResult result;
    result.burn_state = burn_in(cfg);
    Eigen::VectorXd X0 = scatter_nodes(cfg, result.burn_state);
    result.initial_spread = pairwise_spread(X0, m);

    IntegrateOptions opts;
    opts.divergence_guard = cfg.divergence_guard;
    opts.store_stride = cfg.store_stride;
    StepObserver obs = [&result, m](double t, const NetworkState& X) {
        result.times.push_back(t);
        result.spread.push_back(pairwise_spread(X, m));
    };
    result.trajectory =
        integrate_network(cfg.system, X0, cfg.t_burn, cfg.t_end, cfg.dt, cfg.method, opts, obs);

    result.diverged = result.trajectory.diverged;
    result.final_spread = result.spread.empty() ? 0.0 : result.spread.back();

    auto window = cfg.rate_fit_window.value_or(std::make_pair(cfg.t_burn, cfg.t_end));
    result.fit = estimate_decay_rate(result.times, result.spread, window);
    result.decay_rate = result.fit.rate;

    if (result.fit.exact_zero) {
        result.synchronised = !result.diverged;
    } else {
        result.synchronised = !result.diverged && result.decay_rate < -cfg.rate_min &&
                              result.final_spread < cfg.sync_tol * result.initial_spread;
    }
    return result;
}

CriticalCouplingResult find_critical_coupling(const RunConfig& base,
                                              std::pair<double, double> alpha_bracket,
                                              const CriticalSearchOptions& options) {
    CriticalCouplingResult out;
    out.beta = options.beta;
    int evals = 0;

    auto synchronised_at = [&](double alpha) {
        RunConfig cfg = base;
        cfg.system.alpha = alpha;
        ++evals;
        return classify_run(cfg).synchronised;
    };

    double lo = alpha_bracket.first;
    double hi = alpha_bracket.second;
    if (!(hi > lo)) throw std::invalid_argument("find_critical_coupling: invalid bracket");

    if (synchronised_at(lo)) {
        out.at_lower_edge = true;
        out.alpha_c = lo;
        out.rho_c = out.alpha_c * options.beta;
        out.rho_c_gamma = out.alpha_c * options.gamma;
        out.evaluations = evals;
        return out;
    }

    // The sync predicate need not be monotone in alpha (stability windows can
    // open and close again). The bisected edge is only accepted after spot
    // checks at 2x and 4x; a failed check restarts the search above the window.
    for (int rounds = 0; rounds < 64; ++rounds) {
        while (!synchronised_at(hi)) {
            lo = hi;
            hi *= 2.0;
            if (hi > options.bracket_cap) {
                out.no_threshold = true;
                out.evaluations = evals;
                return out;
            }
        }
        for (int iter = 0; iter < 200; ++iter) {
            double mid = 0.5 * (lo + hi);
            double tol = std::max(options.tol_abs, options.tol_rel * mid);
            if (hi - lo <= tol) break;
            if (synchronised_at(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        double alpha_c = 0.5 * (lo + hi);
        double probe2 = 2.0 * alpha_c;
        double probe4 = 4.0 * alpha_c;
        bool ok2 = probe2 > options.bracket_cap || synchronised_at(probe2);
        bool ok4 = !ok2 || probe4 > options.bracket_cap || synchronised_at(probe4);
        if (ok2 && ok4) {
            out.alpha_c = alpha_c;
            out.bisection_width = hi - lo;
            out.rho_c = out.alpha_c * options.beta;
            out.rho_c_gamma = out.alpha_c * options.gamma;
            out.evaluations = evals;
            return out;
        }
        lo = ok2 ? probe4 : probe2;  // the last strength known not to synchronise
        hi = 2.0 * lo;
        if (hi > options.bracket_cap) break;
    }
    out.no_threshold = true;
    out.evaluations = evals;
    return out;
}

namespace {

int sweep_thread_count(std::size_t npoints) {
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
    if (const char* env = std::getenv("SYNCNET_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) threads = cap;
    }
    return std::min<int>(threads, static_cast<int>(npoints));
}

}  // namespace

SweepResult beta_sweep(const SweepSpec& spec) {
    if (spec.beta_grid.empty()) throw std::invalid_argument("beta_sweep: empty grid");
    for (std::size_t i = 0; i < spec.beta_grid.size(); ++i) {
        if (!(spec.beta_grid[i] > 0.0)) throw std::invalid_argument("beta_sweep: beta must be > 0");
        if (i > 0 && spec.beta_grid[i] < spec.beta_grid[i - 1]) {
            throw std::invalid_argument("beta_sweep: grid must be sorted ascending");
        }
    }
    if (!spec.coupling_family) throw std::invalid_argument("beta_sweep: no coupling family");

    SweepResult result;
    result.points.resize(spec.beta_grid.size());

    LaplacianBundle bundle = build_laplacian(spec.base.system.weights);

    auto run_point = [&](std::size_t idx) {
        double beta = spec.beta_grid[idx];
        RunConfig cfg = spec.base;
        cfg.system.coupling = spec.coupling_family(beta);
        cfg.seed = mix_seed(spec.base.seed, idx);
        CriticalSearchOptions opts = spec.search;
        opts.beta = beta;
        CouplingSpec cs;
        cs.Gamma = cfg.system.coupling.Gamma;
        cs.beta_spectrum = eigenvalues(cs.Gamma);
        try {
            opts.gamma = compute_gamma(bundle, cs);
        } catch (const std::exception&) {
            opts.gamma = std::numeric_limits<double>::quiet_NaN();
        }
        result.points[idx] = find_critical_coupling(cfg, spec.bracket, opts);
    };

    const int threads = sweep_thread_count(spec.beta_grid.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < spec.beta_grid.size(); ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    std::size_t idx = next.fetch_add(1);
                    if (idx >= spec.beta_grid.size()) return;
                    run_point(idx);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // slope of log rho_c vs log beta over the configured sub-range
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (const auto& p : result.points) {
        if (p.no_threshold || p.at_lower_edge) continue;
        if (!(p.rho_c > 0.0)) continue;
        if (spec.fit_range &&
            (p.beta < spec.fit_range->first || p.beta > spec.fit_range->second)) {
            continue;
        }
        double x = std::log(p.beta), y = std::log(p.rho_c);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    result.points_in_fit = used;
    if (used >= 2) {
        double denom = double(used) * sxx - sx * sx;
        if (denom != 0.0) {
            result.loglog_slope = (double(used) * sxy - sx * sy) / denom;
            result.slope_defined = true;
        }
    }
    return result;
}

PersistenceResult persistence_experiment(const RunConfig& cfg, const PersistenceOptions& options) {
    cfg.validate();
    if (!cfg.system.perturbations) {
        throw std::invalid_argument("persistence_experiment: perturbations required");
    }
    if (cfg.system.n() < 2) {
        throw std::domain_error("persistence_experiment: need at least two nodes");
    }
    const RealMatrix& W = cfg.system.weights.W;
    if (operator_norm(RealMatrix(W - W.transpose()), NormKind::Inf) >
        default_tolerances().algebraic * std::max(1.0, operator_norm(W, NormKind::Inf))) {
        throw std::domain_error("persistence_experiment: weight matrix must be symmetric");
    }
    if (!(options.tail_fraction > 0.0 && options.tail_fraction <= 1.0)) {
        throw std::invalid_argument("persistence_experiment: tail_fraction in (0,1] required");
    }

    const int m = cfg.system.m();

    // burn-in runs on the unperturbed isolated node
    RunConfig burn_cfg = cfg;
    burn_cfg.system.perturbations.reset();
    PersistenceResult result;
    Eigen::VectorXd s0 = burn_in(burn_cfg);
    Eigen::VectorXd X0 = scatter_nodes(cfg, s0);

    IntegrateOptions opts;
    opts.divergence_guard = cfg.divergence_guard;
    opts.store_stride = cfg.store_stride;
    StepObserver obs = [&result, m](double t, const NetworkState& X) {
        result.times.push_back(t);
        result.es.push_back(sync_error(X, m));
    };
    Trajectory traj =
        integrate_network(cfg.system, X0, cfg.t_burn, cfg.t_end, cfg.dt, cfg.method, opts, obs);
    result.diverged = traj.diverged;

    double tail_start = cfg.t_end - options.tail_fraction * (cfg.t_end - cfg.t_burn);
    double limsup = 0.0;
    for (std::size_t i = 0; i < result.times.size(); ++i) {
        if (result.times[i] >= tail_start) limsup = std::max(limsup, result.es[i]);
    }
    result.limsup_estimate = limsup;

    LaplacianBundle bundle = build_laplacian(cfg.system.weights);
    CouplingSpec cs;
    cs.Gamma = cfg.system.coupling.Gamma;
    cs.beta_spectrum = eigenvalues(cs.Gamma);
    try {
        result.gamma = compute_gamma(bundle, cs);
        result.bound = persistence_bound(options.C, cfg.system.perturbations->eps0,
                                         cfg.system.alpha, result.gamma, options.rho);
        result.bound_valid = true;
        if (result.bound.asymptotic_error > 0.0) {
            result.ratio_to_bound = result.limsup_estimate / result.bound.asymptotic_error;
        }
    } catch (const std::exception&) {
        result.bound_valid = false;
    }
    return result;
}

Perturbations constant_biases(int n, int m, double eps0, std::uint64_t seed) {
    if (eps0 < 0.0) throw std::invalid_argument("constant_biases: eps0 must be >= 0");
    Perturbations p;
    p.eps0 = eps0;
    SeededSampler sampler(seed);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd dir = sampler.unit_vector(m);
        p.g.emplace_back([dir, eps0](double, std::span<const double>, std::span<double> out) {
            for (Eigen::Index k = 0; k < dir.size(); ++k) out[k] = eps0 * dir(k);
        });
    }
    return p;
}

}  // namespace syncnet
