#include "syncnet/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>

namespace syncnet {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(path + "/" + it.key(), "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& path, const char* key,
                  std::optional<double> def = {}) {
    const json* v = find(obj, key);
    if (!v) {
        if (def) return *def;
        throw ConfigError(path + "/" + key, "required number is missing");
    }
    if (!v->is_number()) throw ConfigError(path + "/" + key, "expected a number");
    return v->get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key,
                       std::optional<std::uint64_t> def = {}) {
    const json* v = find(obj, key);
    if (!v) {
        if (def) return *def;
        throw ConfigError(path + "/" + key, "required integer is missing");
    }
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
        throw ConfigError(path + "/" + key, "expected an integer");
    }
    return v->get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       std::optional<std::string> def = {}) {
    const json* v = find(obj, key);
    if (!v) {
        if (def) return *def;
        throw ConfigError(path + "/" + key, "required string is missing");
    }
    if (!v->is_string()) throw ConfigError(path + "/" + key, "expected a string");
    return v->get<std::string>();
}

RealMatrix get_matrix(const json& obj, const std::string& path, const char* key,
                      bool require_square) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError(path + "/" + key, "required matrix is missing");
    if (!v->is_array() || v->empty()) throw ConfigError(path + "/" + key, "expected a 2D array");
    const std::size_t rows = v->size();
    std::size_t cols = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        const json& row = (*v)[i];
        if (!row.is_array()) throw ConfigError(path + "/" + key, "expected a 2D array");
        if (i == 0) cols = row.size();
        if (row.size() != cols) {
            throw ConfigError(path + "/" + key,
                              "ragged matrix: row 0 has " + std::to_string(cols) + " entries, row " +
                                  std::to_string(i) + " has " + std::to_string(row.size()));
        }
    }
    if (require_square && rows != cols) {
        throw ConfigError(path + "/" + key, "expected square matrix, got " + std::to_string(rows) +
                                                "x" + std::to_string(cols));
    }
    RealMatrix M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const json& cell = (*v)[i][j];
            if (!cell.is_number()) {
                throw ConfigError(path + "/" + key + "/" + std::to_string(i) + "/" +
                                      std::to_string(j),
                                  "expected a number");
            }
            M(i, j) = cell.get<double>();
            if (!std::isfinite(M(i, j))) {
                throw ConfigError(path + "/" + key, "non-finite entry");
            }
        }
    }
    return M;
}

std::pair<double, double> get_interval(const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v || !v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        throw ConfigError(path + "/" + key, "expected [lo, hi]");
    }
    return {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

json matrix_to_json(const RealMatrix& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

Command parse_command(const std::string& name) {
    if (name == "analyze") return Command::Analyze;
    if (name == "simulate") return Command::Simulate;
    if (name == "critical") return Command::Critical;
    if (name == "sweep") return Command::Sweep;
    if (name == "persistence") return Command::Persistence;
    throw ConfigError("/command", "unknown command '" + name + "'");
}

const char* command_name(Command c) {
    switch (c) {
        case Command::Analyze: return "analyze";
        case Command::Simulate: return "simulate";
        case Command::Critical: return "critical";
        case Command::Sweep: return "sweep";
        case Command::Persistence: return "persistence";
    }
    return "?";
}

bool needs_dynamics(Command c) { return c != Command::Analyze; }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("JSON syntax error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("", "top level must be an object");
    check_keys(root, "", {"command", "system", "run", "sweep", "persistence", "analyze", "output"});

    ExperimentConfig cfg;
    cfg.command = parse_command(get_string(root, "", "command"));

    const json* system = find(root, "system");
    if (!system || !system->is_object()) throw ConfigError("/system", "required object");
    check_keys(*system, "/system",
               {"field", "field_matrix", "W", "coupling", "alpha", "perturbations"});

    cfg.field_name = get_string(*system, "/system", "field",
                                needs_dynamics(cfg.command) ? std::optional<std::string>{}
                                                            : std::optional<std::string>{"none"});
    if (needs_dynamics(cfg.command) && cfg.field_name != "lorenz" &&
        cfg.field_name != "nonautonomous_linear" && cfg.field_name != "linear") {
        throw ConfigError("/system/field",
                          "unknown field '" + cfg.field_name +
                              "' (expected lorenz, nonautonomous_linear or linear)");
    }
    if (cfg.field_name == "linear") {
        cfg.field_matrix = get_matrix(*system, "/system", "field_matrix", true);
    } else if (find(*system, "field_matrix")) {
        throw ConfigError("/system/field_matrix", "only valid for field == 'linear'");
    }

    cfg.W = get_matrix(*system, "/system", "W", true);
    for (Eigen::Index i = 0; i < cfg.W.rows(); ++i) {
        if (cfg.W(i, i) != 0.0) {
            throw ConfigError("/system/W", "diagonal must be zero (row " + std::to_string(i) + ")");
        }
    }

    const json* coupling = find(*system, "coupling");
    if (!coupling || !coupling->is_object()) throw ConfigError("/system/coupling", "required object");
    const int m = cfg.field_name == "lorenz" ? 3
                  : cfg.field_name == "nonautonomous_linear" ? 2
                  : cfg.field_name == "linear" ? static_cast<int>(cfg.field_matrix.rows())
                                               : -1;
    if (find(*coupling, "Gamma")) {
        check_keys(*coupling, "/system/coupling", {"Gamma"});
        cfg.Gamma = get_matrix(*coupling, "/system/coupling", "Gamma", true);
        cfg.coupling_is_family = false;
        if (m > 0 && cfg.Gamma.rows() != m) {
            throw ConfigError("/system/coupling/Gamma",
                              "coupling is " + std::to_string(cfg.Gamma.rows()) + "x" +
                                  std::to_string(cfg.Gamma.cols()) + " but the field dimension is " +
                                  std::to_string(m));
        }
    } else {
        check_keys(*coupling, "/system/coupling", {"family", "beta"});
        cfg.coupling_is_family = true;
        cfg.coupling_family = get_string(*coupling, "/system/coupling", "family");
        if (cfg.coupling_family != "identity" && cfg.coupling_family != "jordan_block") {
            throw ConfigError("/system/coupling/family",
                              "expected 'identity' or 'jordan_block'");
        }
        cfg.coupling_beta = get_number(*coupling, "/system/coupling", "beta",
                                       cfg.command == Command::Sweep ? std::optional<double>{1.0}
                                                                     : std::nullopt);
    }

    cfg.alpha = get_number(*system, "/system", "alpha", 0.0);
    if (cfg.alpha < 0.0) throw ConfigError("/system/alpha", "must be >= 0");

    if (const json* pert = find(*system, "perturbations")) {
        if (!pert->is_object()) throw ConfigError("/system/perturbations", "expected object");
        check_keys(*pert, "/system/perturbations", {"eps0", "kind", "seed"});
        std::string kind = get_string(*pert, "/system/perturbations", "kind", "constant_bias");
        if (kind != "constant_bias") {
            throw ConfigError("/system/perturbations/kind", "only 'constant_bias' is supported");
        }
        cfg.has_perturbations = true;
        cfg.pert_eps0 = get_number(*pert, "/system/perturbations", "eps0");
        if (cfg.pert_eps0 < 0.0) throw ConfigError("/system/perturbations/eps0", "must be >= 0");
        cfg.pert_seed = get_uint(*pert, "/system/perturbations", "seed", 12345);
    }

    // run block
    const json empty = json::object();
    const json* runj = find(root, "run");
    if (runj && !runj->is_object()) throw ConfigError("/run", "expected object");
    const json& runb = runj ? *runj : empty;
    check_keys(runb, "/run",
               {"t0", "t_burn", "t_end", "dt", "method", "delta", "seed", "sync_tol", "rate_min",
                "rate_fit_window", "divergence_guard", "initial_state", "scatter", "store_stride"});
    const bool lorenz = cfg.field_name == "lorenz";
    cfg.t0 = get_number(runb, "/run", "t0", 0.0);
    cfg.t_burn = get_number(runb, "/run", "t_burn", lorenz ? cfg.t0 + 20.0 : cfg.t0);
    cfg.t_end = get_number(runb, "/run", "t_end", cfg.t_burn + 50.0);
    cfg.dt = get_number(runb, "/run", "dt", lorenz ? 1e-4 : 1e-3);
    std::string method = get_string(runb, "/run", "method", "rk6");
    if (method == "rk4") {
        cfg.method = RKMethod::RK4;
    } else if (method == "rk6") {
        cfg.method = RKMethod::RK6;
    } else {
        throw ConfigError("/run/method", "expected 'rk4' or 'rk6'");
    }
    cfg.delta = get_number(runb, "/run", "delta", 1e-3);
    cfg.seed = get_uint(runb, "/run", "seed", 1);
    cfg.sync_tol = get_number(runb, "/run", "sync_tol", 1e-6);
    cfg.rate_min = get_number(runb, "/run", "rate_min", 0.05);
    cfg.divergence_guard = get_number(runb, "/run", "divergence_guard", 1e6);
    if (find(runb, "rate_fit_window")) {
        cfg.rate_fit_window = get_interval(runb, "/run", "rate_fit_window");
    }
    if (const json* init = find(runb, "initial_state")) {
        if (!init->is_array()) throw ConfigError("/run/initial_state", "expected array");
        Eigen::VectorXd s(init->size());
        for (std::size_t i = 0; i < init->size(); ++i) {
            if (!(*init)[i].is_number()) throw ConfigError("/run/initial_state", "expected numbers");
            s(i) = (*init)[i].get<double>();
        }
        if (m > 0 && s.size() != m) {
            throw ConfigError("/run/initial_state", "length " + std::to_string(s.size()) +
                                                        " does not match the field dimension " +
                                                        std::to_string(m));
        }
        cfg.initial_state = s;
    }
    std::string scatter = get_string(runb, "/run", "scatter", "ball");
    if (scatter == "ball") {
        cfg.scatter = ScatterMode::Ball;
    } else if (scatter == "mean_zero") {
        cfg.scatter = ScatterMode::MeanZero;
    } else {
        throw ConfigError("/run/scatter", "expected 'ball' or 'mean_zero'");
    }
    cfg.store_stride = static_cast<int>(get_uint(runb, "/run", "store_stride", 64));

    // sweep block
    const json* sweepj = find(root, "sweep");
    if (sweepj && !sweepj->is_object()) throw ConfigError("/sweep", "expected object");
    if (cfg.command == Command::Sweep || cfg.command == Command::Critical) {
        const json& sw = sweepj ? *sweepj : empty;
        check_keys(sw, "/sweep",
                   {"beta_grid", "beta_log_grid", "bracket", "tol", "tol_rel", "bracket_cap",
                    "fit_range"});
        if (cfg.command == Command::Sweep) {
            const json* grid = find(sw, "beta_grid");
            const json* lg = find(sw, "beta_log_grid");
            if ((grid == nullptr) == (lg == nullptr)) {
                throw ConfigError("/sweep", "provide exactly one of beta_grid, beta_log_grid");
            }
            if (grid) {
                if (!grid->is_array() || grid->empty()) {
                    throw ConfigError("/sweep/beta_grid", "expected non-empty array");
                }
                for (const auto& v : *grid) {
                    if (!v.is_number()) throw ConfigError("/sweep/beta_grid", "expected numbers");
                    cfg.beta_grid.push_back(v.get<double>());
                }
            } else {
                check_keys(*lg, "/sweep/beta_log_grid", {"from", "to", "count"});
                double from = get_number(*lg, "/sweep/beta_log_grid", "from");
                double to = get_number(*lg, "/sweep/beta_log_grid", "to");
                auto count = get_uint(*lg, "/sweep/beta_log_grid", "count");
                if (!(from > 0.0 && to > from && count >= 2)) {
                    throw ConfigError("/sweep/beta_log_grid", "need 0 < from < to and count >= 2");
                }
                for (std::uint64_t i = 0; i < count; ++i) {
                    double f = double(i) / double(count - 1);
                    cfg.beta_grid.push_back(from * std::pow(to / from, f));
                }
            }
            if (find(sw, "fit_range")) cfg.fit_range = get_interval(sw, "/sweep", "fit_range");
        }
        if (find(sw, "bracket")) cfg.bracket = get_interval(sw, "/sweep", "bracket");
        cfg.tol_abs = get_number(sw, "/sweep", "tol", 0.0);
        cfg.tol_rel = get_number(sw, "/sweep", "tol_rel", 0.01);
        cfg.bracket_cap = get_number(sw, "/sweep", "bracket_cap", 1e7);
    } else if (sweepj) {
        throw ConfigError("/sweep", "only valid for the sweep and critical commands");
    }

    // persistence block
    const json* persj = find(root, "persistence");
    if (persj && !persj->is_object()) throw ConfigError("/persistence", "expected object");
    if (cfg.command == Command::Persistence) {
        const json& pb = persj ? *persj : empty;
        check_keys(pb, "/persistence", {"tail_fraction", "C", "rho"});
        cfg.tail_fraction = get_number(pb, "/persistence", "tail_fraction", 0.3);
        cfg.pers_C = get_number(pb, "/persistence", "C", 1.0);
        cfg.pers_rho = get_number(pb, "/persistence", "rho", 0.0);
        if (!cfg.has_perturbations) {
            throw ConfigError("/system/perturbations", "required for the persistence command");
        }
    } else if (persj) {
        throw ConfigError("/persistence", "only valid for the persistence command");
    }

    // analyze block
    const json* anj = find(root, "analyze");
    if (anj && !anj->is_object()) throw ConfigError("/analyze", "expected object");
    if (anj && cfg.command != Command::Analyze) {
        throw ConfigError("/analyze", "only valid for the analyze command");
    }
    if (cfg.command == Command::Analyze) {
        const json& ab = anj ? *anj : empty;
        check_keys(ab, "/analyze", {"varrho", "jordan_eps_ratio", "K", "sigma"});
        cfg.varrho = get_number(ab, "/analyze", "varrho", 1.0);
        cfg.jordan_eps_ratio = get_number(ab, "/analyze", "jordan_eps_ratio", 0.5);
        cfg.K = get_number(ab, "/analyze", "K", 1.0);
        if (find(ab, "sigma")) cfg.sigma = get_number(ab, "/analyze", "sigma");
    }

    // output block
    const json* outj = find(root, "output");
    if (outj && !outj->is_object()) throw ConfigError("/output", "expected object");
    const json& ob = outj ? *outj : empty;
    check_keys(ob, "/output", {"csv_form", "report", "trajectory_csv", "spread_csv", "sweep_csv",
                               "es_csv"});
    std::string form = get_string(ob, "/output", "csv_form", "wide");
    if (form == "wide") {
        cfg.csv_form = CsvForm::Wide;
    } else if (form == "long") {
        cfg.csv_form = CsvForm::Long;
    } else {
        throw ConfigError("/output/csv_form", "expected 'wide' or 'long'");
    }
    cfg.report_name = get_string(ob, "/output", "report", "report.json");
    cfg.trajectory_csv = get_string(ob, "/output", "trajectory_csv", "trajectory.csv");
    cfg.spread_csv = get_string(ob, "/output", "spread_csv", "spread.csv");
    cfg.sweep_csv = get_string(ob, "/output", "sweep_csv", "sweep.csv");
    cfg.es_csv = get_string(ob, "/output", "es_csv", "es.csv");

    // cross-field validation that needs several blocks
    if (needs_dynamics(cfg.command)) {
        if (!(cfg.t0 <= cfg.t_burn && cfg.t_burn < cfg.t_end)) {
            throw ConfigError("/run", "need t0 <= t_burn < t_end");
        }
        if (cfg.command == Command::Sweep && !cfg.coupling_is_family) {
            throw ConfigError("/system/coupling", "sweep requires a coupling family");
        }
    }

    // --- normalized echo ---
    json echo;
    echo["command"] = command_name(cfg.command);
    json sys;
    sys["field"] = cfg.field_name;
    if (cfg.field_name == "linear") sys["field_matrix"] = matrix_to_json(cfg.field_matrix);
    sys["W"] = matrix_to_json(cfg.W);
    if (cfg.coupling_is_family) {
        sys["coupling"] = {{"family", cfg.coupling_family}, {"beta", cfg.coupling_beta}};
    } else {
        sys["coupling"] = {{"Gamma", matrix_to_json(cfg.Gamma)}};
    }
    sys["alpha"] = cfg.alpha;
    if (cfg.has_perturbations) {
        sys["perturbations"] = {{"kind", "constant_bias"},
                                {"eps0", cfg.pert_eps0},
                                {"seed", cfg.pert_seed}};
    }
    echo["system"] = sys;

    json runo;
    runo["t0"] = cfg.t0;
    runo["t_burn"] = cfg.t_burn;
    runo["t_end"] = cfg.t_end;
    runo["dt"] = cfg.dt;
    runo["method"] = cfg.method == RKMethod::RK4 ? "rk4" : "rk6";
    runo["delta"] = cfg.delta;
    runo["seed"] = cfg.seed;
    runo["sync_tol"] = cfg.sync_tol;
    runo["rate_min"] = cfg.rate_min;
    runo["divergence_guard"] = cfg.divergence_guard;
    if (cfg.rate_fit_window) {
        runo["rate_fit_window"] = {cfg.rate_fit_window->first, cfg.rate_fit_window->second};
    }
    if (cfg.initial_state) {
        json arr = json::array();
        for (Eigen::Index i = 0; i < cfg.initial_state->size(); ++i) {
            arr.push_back((*cfg.initial_state)(i));
        }
        runo["initial_state"] = arr;
    }
    runo["scatter"] = cfg.scatter == ScatterMode::Ball ? "ball" : "mean_zero";
    runo["store_stride"] = cfg.store_stride;
    echo["run"] = runo;

    if (cfg.command == Command::Sweep || cfg.command == Command::Critical) {
        json sw;
        if (cfg.command == Command::Sweep) {
            sw["beta_grid"] = cfg.beta_grid;
            if (cfg.fit_range) sw["fit_range"] = {cfg.fit_range->first, cfg.fit_range->second};
        }
        sw["bracket"] = {cfg.bracket.first, cfg.bracket.second};
        sw["tol"] = cfg.tol_abs;
        sw["tol_rel"] = cfg.tol_rel;
        sw["bracket_cap"] = cfg.bracket_cap;
        echo["sweep"] = sw;
    }
    if (cfg.command == Command::Persistence) {
        echo["persistence"] = {{"tail_fraction", cfg.tail_fraction},
                               {"C", cfg.pers_C},
                               {"rho", cfg.pers_rho}};
    }
    if (cfg.command == Command::Analyze) {
        json ab;
        ab["varrho"] = cfg.varrho;
        ab["jordan_eps_ratio"] = cfg.jordan_eps_ratio;
        ab["K"] = cfg.K;
        if (cfg.sigma) ab["sigma"] = *cfg.sigma;
        echo["analyze"] = ab;
    }
    json outo;
    outo["csv_form"] = form;
    outo["report"] = cfg.report_name;
    outo["trajectory_csv"] = cfg.trajectory_csv;
    outo["spread_csv"] = cfg.spread_csv;
    outo["sweep_csv"] = cfg.sweep_csv;
    outo["es_csv"] = cfg.es_csv;
    echo["output"] = outo;

    cfg.effective = echo;
    return cfg;
}

void apply_seed_override(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.effective["run"]["seed"] = seed;
}

int field_dimension(const ExperimentConfig& cfg) {
    if (cfg.field_name == "lorenz") return 3;
    if (cfg.field_name == "nonautonomous_linear") return 2;
    if (cfg.field_name == "linear") return static_cast<int>(cfg.field_matrix.rows());
    return static_cast<int>(cfg.Gamma.rows());
}

VectorField build_field(const ExperimentConfig& cfg) {
    if (cfg.field_name == "lorenz") return builtin_lorenz();
    if (cfg.field_name == "nonautonomous_linear") return builtin_nonautonomous_linear().field;
    if (cfg.field_name == "linear") return linear_field(cfg.field_matrix);
    throw ConfigError("/system/field", "no dynamics for field '" + cfg.field_name + "'");
}

CouplingFunction build_coupling(const ExperimentConfig& cfg, std::optional<double> beta) {
    if (!cfg.coupling_is_family) return linear_coupling(cfg.Gamma);
    const int m = field_dimension(cfg);
    double b = beta.value_or(cfg.coupling_beta);
    RealMatrix G;
    if (cfg.coupling_family == "identity") {
        G = b * RealMatrix::Identity(m, m);
    } else {
        G = b * RealMatrix::Identity(m, m);
        for (int i = 0; i + 1 < m; ++i) G(i, i + 1) = 1.0;
    }
    return linear_coupling(G);
}

NetworkSystem build_system(const ExperimentConfig& cfg) {
    NetworkSystem sys;
    sys.field = build_field(cfg);
    sys.coupling = build_coupling(cfg);
    sys.weights = make_weight_matrix(cfg.W);
    sys.alpha = cfg.alpha;
    if (cfg.has_perturbations) {
        sys.perturbations =
            constant_biases(sys.weights.n, sys.field.dim, cfg.pert_eps0, cfg.pert_seed);
    }
    return sys;
}

RunConfig build_run_config(const ExperimentConfig& cfg) {
    RunConfig rc;
    rc.system = build_system(cfg);
    rc.t0 = cfg.t0;
    rc.t_burn = cfg.t_burn;
    rc.t_end = cfg.t_end;
    rc.dt = cfg.dt;
    rc.method = cfg.method;
    rc.delta = cfg.delta;
    rc.seed = cfg.seed;
    rc.sync_tol = cfg.sync_tol;
    rc.rate_min = cfg.rate_min;
    rc.rate_fit_window = cfg.rate_fit_window;
    rc.divergence_guard = cfg.divergence_guard;
    rc.initial_state = cfg.initial_state;
    rc.scatter = cfg.scatter;
    rc.store_stride = cfg.store_stride;
    return rc;
}

namespace {

void append_double(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string series_csv(const char* header, const std::vector<double>& t,
                       const std::vector<double>& v) {
    std::string out = header;
    out += "\r\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        append_double(out, t[i]);
        out += ',';
        append_double(out, v[i]);
        out += "\r\n";
    }
    return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json run_analyze(const ExperimentConfig& cfg) {
    LaplacianBundle bundle = build_laplacian(make_weight_matrix(cfg.W));
    RealMatrix Gamma = cfg.coupling_is_family
                           ? build_coupling(cfg).Gamma
                           : cfg.Gamma;
    CouplingSpec coupling;
    try {
        coupling = make_coupling(Gamma);
    } catch (const std::invalid_argument&) {
        // defective coupling given directly in Jordan form
        coupling = coupling_from_jordan(ComplexMatrix::Identity(Gamma.rows(), Gamma.cols()),
                                        Gamma.cast<Complex>());
    }
    SyncAnalysis analysis =
        make_sync_analysis(bundle, coupling, cfg.varrho, cfg.jordan_eps_ratio, cfg.K);

    json r;
    r["gamma"] = analysis.gamma;
    r["rho_bound"] = analysis.rho_bound;
    r["alpha_threshold"] =
        analysis.alpha_threshold ? json(*analysis.alpha_threshold) : json(nullptr);
    r["rate_at_alpha"] = analysis.rate_at(cfg.alpha);
    r["C_estimate"] = number_or_null(analysis.C_estimate);
    r["a3_satisfied"] = analysis.a3_satisfied;
    r["zero_multiplicity"] = bundle.zero_multiplicity;
    r["connectivity"] = connectivity(make_weight_matrix(cfg.W));
    r["rho_breakdown"] = {{"c_factor", analysis.rho_breakdown.c_factor},
                          {"kappa_Q", analysis.rho_breakdown.kappa_Q},
                          {"kappa_P", analysis.rho_breakdown.kappa_P},
                          {"jordan_eps", analysis.rho_breakdown.jordan_eps}};
    json lspec = json::array();
    for (const auto& z : bundle.spectrum) lspec.push_back({z.real(), z.imag()});
    r["laplacian_spectrum"] = lspec;
    json bspec = json::array();
    for (const auto& z : coupling.beta_spectrum) bspec.push_back({z.real(), z.imag()});
    r["coupling_spectrum"] = bspec;
    if (cfg.sigma && analysis.a3_satisfied && cfg.alpha > *analysis.alpha_threshold) {
        r["delta_estimate"] = delta_estimate(cfg.alpha, analysis.gamma, analysis.rho_bound,
                                             *cfg.sigma, analysis.C_estimate, analysis.kappa_P_inf);
    }
    return r;
}

}  // namespace

int run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool quiet) {
    json report;
    report["command"] = cfg.effective["command"];
    report["config"] = cfg.effective;

    int status = 0;
    try {
        std::filesystem::create_directories(out_dir);
    } catch (const std::exception& e) {
        if (!quiet) std::cerr << "syncnet: " << e.what() << "\n";
        return 1;
    }

    try {
        switch (cfg.command) {
            case Command::Analyze: {
                report["results"] = run_analyze(cfg);
                break;
            }
            case Command::Simulate: {
                RunConfig rc = build_run_config(cfg);
                SyncRunResult res = classify_run(rc);
                write_file(out_dir / cfg.spread_csv, series_csv("t,spread", res.times, res.spread));
                write_file(out_dir / cfg.trajectory_csv,
                           trajectory_to_csv(res.trajectory, rc.system.m(), cfg.csv_form));
                json r;
                r["synchronised"] = res.synchronised;
                r["diverged"] = res.diverged;
                r["last_valid_time"] = res.trajectory.last_valid_time;
                r["decay_rate"] = res.decay_rate;
                r["initial_spread"] = res.initial_spread;
                r["final_spread"] = res.final_spread;
                r["floored"] = res.fit.floored;
                report["results"] = r;
                break;
            }
            case Command::Critical: {
                RunConfig rc = build_run_config(cfg);
                CriticalSearchOptions opts;
                opts.tol_abs = cfg.tol_abs;
                opts.tol_rel = cfg.tol_rel;
                opts.bracket_cap = cfg.bracket_cap;
                LaplacianBundle bundle = build_laplacian(rc.system.weights);
                CouplingSpec cs;
                cs.Gamma = rc.system.coupling.Gamma;
                cs.beta_spectrum = eigenvalues(cs.Gamma);
                opts.beta = cfg.coupling_is_family
                                ? cfg.coupling_beta
                                : [&] {
                                      double bm = cs.beta_spectrum.front().real();
                                      for (const auto& z : cs.beta_spectrum)
                                          bm = std::min(bm, z.real());
                                      return bm;
                                  }();
                try {
                    opts.gamma = compute_gamma(bundle, cs);
                } catch (const std::exception&) {
                    opts.gamma = std::numeric_limits<double>::quiet_NaN();
                }
                CriticalCouplingResult res = find_critical_coupling(rc, cfg.bracket, opts);
                json r;
                r["alpha_c"] = number_or_null(res.alpha_c);
                r["rho_c"] = number_or_null(res.rho_c);
                r["rho_c_gamma"] = number_or_null(res.rho_c_gamma);
                r["bisection_width"] = res.bisection_width;
                r["evaluations"] = res.evaluations;
                r["at_lower_edge"] = res.at_lower_edge;
                r["no_threshold"] = res.no_threshold;
                report["results"] = r;
                if (res.no_threshold) status = 2;
                break;
            }
            case Command::Sweep: {
                SweepSpec spec;
                spec.base = build_run_config(cfg);
                const ExperimentConfig* cc = &cfg;
                spec.coupling_family = [cc](double beta) { return build_coupling(*cc, beta); };
                spec.beta_grid = cfg.beta_grid;
                spec.bracket = cfg.bracket;
                spec.search.tol_abs = cfg.tol_abs;
                spec.search.tol_rel = cfg.tol_rel;
                spec.search.bracket_cap = cfg.bracket_cap;
                spec.fit_range = cfg.fit_range;
                SweepResult res = beta_sweep(spec);

                std::string csv = "beta,alpha_c,rho_c,bisection_width,evaluations\r\n";
                for (const auto& p : res.points) {
                    append_double(csv, p.beta);
                    csv += ',';
                    if (p.no_threshold) {
                        csv += ",,";
                    } else {
                        append_double(csv, p.alpha_c);
                        csv += ',';
                        append_double(csv, p.rho_c);
                        csv += ',';
                    }
                    append_double(csv, p.bisection_width);
                    csv += ',' + std::to_string(p.evaluations) + "\r\n";
                }
                write_file(out_dir / cfg.sweep_csv, csv);

                json points = json::array();
                json gaps = json::array();
                for (const auto& p : res.points) {
                    json pj;
                    pj["beta"] = p.beta;
                    pj["alpha_c"] = p.no_threshold ? json(nullptr) : json(p.alpha_c);
                    pj["rho_c"] = p.no_threshold ? json(nullptr) : json(p.rho_c);
                    pj["rho_c_gamma"] = number_or_null(p.rho_c_gamma);
                    pj["bisection_width"] = p.bisection_width;
                    pj["evaluations"] = p.evaluations;
                    pj["at_lower_edge"] = p.at_lower_edge;
                    pj["no_threshold"] = p.no_threshold;
                    points.push_back(pj);
                    if (p.no_threshold) gaps.push_back(p.beta);
                }
                json r;
                r["points"] = points;
                r["gaps"] = gaps;
                r["loglog_slope"] = res.slope_defined ? json(res.loglog_slope) : json(nullptr);
                r["points_in_fit"] = res.points_in_fit;
                report["results"] = r;
                break;
            }
            case Command::Persistence: {
                RunConfig rc = build_run_config(cfg);
                PersistenceOptions popts;
                popts.tail_fraction = cfg.tail_fraction;
                popts.C = cfg.pers_C;
                popts.rho = cfg.pers_rho;
                PersistenceResult res = persistence_experiment(rc, popts);
                write_file(out_dir / cfg.es_csv, series_csv("t,e_s", res.times, res.es));
                json r;
                r["limsup_estimate"] = res.limsup_estimate;
                r["gamma"] = res.gamma;
                r["diverged"] = res.diverged;
                r["bound_valid"] = res.bound_valid;
                if (res.bound_valid) {
                    r["bound"] = {{"eps0", res.bound.eps0},
                                  {"asymptotic_error", res.bound.asymptotic_error},
                                  {"K_corollary", res.bound.K_corollary}};
                    r["ratio_to_bound"] = number_or_null(res.ratio_to_bound);
                }
                report["results"] = r;
                if (res.diverged) status = 2;
                break;
            }
        }
    } catch (const ConfigError& e) {
        report["error"] = e.what();
        status = 1;
    } catch (const std::invalid_argument& e) {
        report["error"] = e.what();
        status = 1;
    } catch (const std::exception& e) {
        report["error"] = e.what();
        status = 2;
    }

    try {
        write_file(out_dir / cfg.report_name, report.dump(2) + "\n");
    } catch (const std::exception& e) {
        if (!quiet) std::cerr << "syncnet: " << e.what() << "\n";
        return 1;
    }
    if (!quiet) {
        std::cout << "syncnet: wrote " << (out_dir / cfg.report_name).string() << " (exit "
                  << status << ")\n";
    }
    return status;
}

}  // namespace syncnet
