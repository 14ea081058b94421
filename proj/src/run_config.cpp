#include "bsdelab/run_config.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "bsdelab/cache.hpp"
#include "bsdelab/pairwise.hpp"

namespace bsde {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& value, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + value + "'");
    }
}

long long parse_integer(const std::string& value, const std::string& where) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected an integer, got '" + value + "'");
    }
}

std::uint64_t parse_seed(const std::string& value, const std::string& where) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected an unsigned integer, got '" + value + "'");
    }
}

bool parse_boolean(const std::string& value, const std::string& where) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError(where + ": expected true/false, got '" + value + "'");
}

std::vector<Index> parse_index_list(const std::string& value, const std::string& where) {
    std::vector<Index> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(static_cast<Index>(parse_integer(item, where)));
    }
    if (out.empty()) throw ConfigError(where + ": expected a comma-separated list");
    return out;
}

std::vector<int> parse_int_list(const std::string& value, const std::string& where) {
    std::vector<int> out;
    for (Index v : parse_index_list(value, where)) out.push_back(static_cast<int>(v));
    return out;
}

StateSampling parse_sampling(const std::string& value, const std::string& where) {
    if (value == "cell-start") return StateSampling::CellStart;
    if (value == "per-knot") return StateSampling::PerKnot;
    throw ConfigError(where + ": expected cell-start or per-knot, got '" + value + "'");
}

void apply_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                 const std::string& where) {
    if (key == "grid.horizon") cfg.horizon = parse_double(value, where);
    else if (key == "grid.steps") cfg.steps = static_cast<Index>(parse_integer(value, where));
    else if (key == "ensemble.paths") cfg.paths = static_cast<Index>(parse_integer(value, where));
    else if (key == "ensemble.seed") cfg.seed = parse_seed(value, where);
    else if (key == "ensemble.model") cfg.model.kind = filtration_kind_from_string(value);
    else if (key == "ensemble.initial-std") cfg.model.initial_std = parse_double(value, where);
    else if (key == "problem.terminal") cfg.terminal_name = value;
    else if (key == "problem.constant") cfg.terminal_constant = parse_double(value, where);
    else if (key == "problem.g-power") cfg.g_power = static_cast<int>(parse_integer(value, where));
    else if (key == "problem.driver") cfg.driver_name = value;
    else if (key == "driver.a" || key == "driver.b" || key == "driver.c" || key == "driver.kappa")
        cfg.driver_params[key.substr(7)] = parse_double(value, where);
    else if (key == "basis.cell-knots") cfg.basis.cell_knots = static_cast<Index>(parse_integer(value, where));
    else if (key == "basis.degree") cfg.basis.state_degree = static_cast<int>(parse_integer(value, where));
    else if (key == "basis.sampling") cfg.basis.sampling = parse_sampling(value, where);
    else if (key == "regression.degree") cfg.regression.degree = static_cast<int>(parse_integer(value, where));
    else if (key == "regression.ridge") {
        if (value == "auto") cfg.regression.ridge = std::nullopt;
        else cfg.regression.ridge = parse_double(value, where);
    }
    else if (key == "regression.standardize") cfg.regression.standardize = parse_boolean(value, where);
    else if (key == "regression.interactions") cfg.regression.interactions = parse_boolean(value, where);
    else if (key == "picard.tolerance") cfg.picard.tolerance = parse_double(value, where);
    else if (key == "picard.max-iterations") cfg.picard.max_iterations = static_cast<int>(parse_integer(value, where));
    else if (key == "picard.theta") cfg.picard.theta = parse_double(value, where);
    else if (key == "picard.max-bisections") cfg.picard.max_bisections = static_cast<int>(parse_integer(value, where));
    else if (key == "verification.tests") cfg.verification_tests = static_cast<int>(parse_integer(value, where));
    else if (key == "verification.seed") cfg.verification_seed = parse_seed(value, where);
    else if (key == "compare.terminal") cfg.compare_terminal_name = value;
    else if (key == "compare.constant") cfg.compare_terminal_constant = parse_double(value, where);
    else if (key == "compare.g-power") cfg.compare_g_power = static_cast<int>(parse_integer(value, where));
    else if (key == "compare.driver") cfg.compare_driver_name = value;
    else if (key == "compare.a" || key == "compare.b" || key == "compare.c" || key == "compare.kappa")
        cfg.compare_driver_params[key.substr(8)] = parse_double(value, where);
    else if (key == "compare.tol") cfg.compare_tol = parse_double(value, where);
    else if (key == "consistency.split-knot") cfg.split_knot = static_cast<Index>(parse_integer(value, where));
    else if (key == "sweep.oracle") cfg.sweep_oracle = value;
    else if (key == "sweep.grid-steps") cfg.sweep.grid_steps = parse_index_list(value, where);
    else if (key == "sweep.grid-paths") cfg.sweep.grid_paths = static_cast<Index>(parse_integer(value, where));
    else if (key == "sweep.path-counts") cfg.sweep.path_counts = parse_index_list(value, where);
    else if (key == "sweep.path-steps") cfg.sweep.path_steps = static_cast<Index>(parse_integer(value, where));
    else if (key == "sweep.degrees") cfg.sweep.state_degrees = parse_int_list(value, where);
    else if (key == "sweep.degree-steps") cfg.sweep.degree_steps = static_cast<Index>(parse_integer(value, where));
    else if (key == "sweep.degree-paths") cfg.sweep.degree_paths = static_cast<Index>(parse_integer(value, where));
    else if (key == "sweep.seed") cfg.sweep.seed = parse_seed(value, where);
    else throw ConfigError(where + ": unknown key '" + key + "'");
}

} // namespace

RunConfig RunConfig::from_string(const std::string& text, const std::string& name) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string where = name + ":" + std::to_string(line_no);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        apply_entry(cfg, key, value, where);
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str(), path.filename().string());
}

void RunConfig::echo(RunReport& report) const {
    report.add_number("config.grid.horizon", horizon);
    report.add_integer("config.grid.steps", steps);
    report.add_integer("config.ensemble.paths", paths);
    report.add("config.ensemble.seed", std::to_string(seed));
    report.add("config.ensemble.model", to_string(model.kind));
    if (model.has_initial()) report.add_number("config.ensemble.initial-std", model.initial_std);
    report.add("config.problem.terminal", terminal_name);
    report.add_number("config.problem.constant", terminal_constant);
    report.add_integer("config.problem.g-power", g_power);
    report.add("config.problem.driver", driver_name);
    for (const auto& [k, v] : driver_params) report.add_number("config.driver." + k, v);
    report.add_integer("config.basis.cell-knots", basis.cell_knots);
    report.add_integer("config.basis.degree", basis.state_degree);
    report.add("config.basis.sampling",
               basis.sampling == StateSampling::CellStart ? "cell-start" : "per-knot");
    report.add_integer("config.regression.degree", regression.degree);
    report.add("config.regression.ridge",
               regression.ridge ? format_number(*regression.ridge) : "auto");
    report.add_boolean("config.regression.standardize", regression.standardize);
    report.add_boolean("config.regression.interactions", regression.interactions);
    report.add_number("config.picard.tolerance", picard.tolerance);
    report.add_integer("config.picard.max-iterations", picard.max_iterations);
    report.add_number("config.picard.theta", picard.theta);
    report.add_integer("config.picard.max-bisections", picard.max_bisections);
    report.add_integer("config.verification.tests", verification_tests);
    report.add("config.verification.seed", std::to_string(verification_seed));
}

Matrix build_terminal_values(const std::string& name, double constant, int g_power,
                             const PathEnsemble& ens) {
    Matrix terminal(ens.paths(), 1);
    const Index j_end = ens.steps();
    if (name == "constant") {
        terminal.col(0).setConstant(constant);
    } else if (name == "w(T)") {
        terminal.col(0) = ens.brownian().col(j_end);
    } else if (name == "w(T)^2") {
        terminal.col(0) = ens.brownian().col(j_end).array().square();
    } else if (name == "w'(T)") {
        if (!ens.has_auxiliary())
            throw ConfigError("problem.terminal: w'(T) requires ensemble.model = enlarged-brownian");
        terminal.col(0) = ens.aux_brownian().col(j_end);
    } else if (name == "integral-of-g-dw'") {
        if (!ens.has_auxiliary())
            throw ConfigError(
                "problem.terminal: integral-of-g-dw' requires ensemble.model = enlarged-brownian");
        if (g_power < 0) throw ConfigError("problem.g-power must be >= 0");
        terminal.col(0).setZero();
        for (Index j = 0; j < j_end; ++j) {
            double g = 1.0;
            for (int p = 0; p < g_power; ++p) g *= ens.grid().knot(j);
            terminal.col(0) += g * ens.aux_increments().col(j);
        }
    } else {
        throw ConfigError("problem.terminal: unknown terminal condition '" + name + "'");
    }
    return terminal;
}

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void add_solution_lines(RunReport& report, const TranspositionSolution& sol,
                        const PathEnsemble& ens) {
    report.add_number("result.y.sup-l2", sol.diag.y_sup_l2);
    report.add_number("result.Y.l2-l2", sol.diag.Y_l2_l2);
    Array y0 = sol.y.component(0).col(0).array();
    report.add_number("result.y.mean-at-0", pairwise_mean(y0));
    report.add_number("result.terminal.rms", rms(sol.terminal));
    report.add_number("diag.gram.condition", sol.diag.gram_condition);
    report.add_boolean("diag.gram.near-singular", sol.diag.gram_near_singular);
    report.add_number("diag.galerkin.ridge", sol.diag.galerkin_ridge);
    report.add_number("diag.galerkin.solve-residual", sol.diag.galerkin_solve_residual);
    report.add_number("diag.galerkin.sampling-se", sol.diag.galerkin_se);
    report.add_number("diag.regression.max-residual", sol.diag.regression_max_residual);
    report.add_number("diag.regression.se", sol.diag.regression_se);
    report.add_number("diag.regression.ridge-max", sol.diag.regression_ridge_max);
    report.add_number("diag.corrected-identity-residual", sol.diag.corrected_identity_residual);
    report.add_number("diag.bias-scale", sol.diag.bias_scale());
    (void)ens;
}

} // namespace

RunResult run_solve(const RunConfig& config, const std::filesystem::path& out_dir,
                    bool with_verification) {
    RunResult result;
    Timer timer;
    config.echo(result.report);

    const TimeGrid grid = build_uniform_grid(config.horizon, config.steps);
    const PathEnsemble ens = simulate_ensemble(grid, config.model, config.paths, config.seed);
    const Matrix terminal =
        build_terminal_values(config.terminal_name, config.terminal_constant, config.g_power, ens);
    const DriverSpec driver = driver_from_registry(config.driver_name, config.driver_params);
    const GalerkinBasis basis = build_tensor_basis(ens, config.basis, 1);

    TranspositionSolution sol;
    PicardTrace trace;
    if (driver.lipschitz() == 0.0 && config.driver_name == "zero") {
        LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1), terminal};
        sol = solve_linear(problem, ens, basis, config.regression);
        result.report.add("result.solver", "linear");
    } else {
        sol = solve_semilinear(driver, terminal, ens, config.basis, config.regression,
                               config.picard, &trace);
        result.report.add("result.solver", "picard");
        result.report.add_integer("picard.windows", static_cast<long long>(trace.windows.size()));
        for (std::size_t w = 0; w < trace.windows.size(); ++w) {
            const auto& wt = trace.windows[w];
            const std::string prefix = "picard.window." + std::to_string(w);
            result.report.add_integer(prefix + ".begin", wt.window.begin);
            result.report.add_integer(prefix + ".end", wt.window.end);
            result.report.add_integer(prefix + ".iterations",
                                      static_cast<long long>(wt.iterations.size()));
            result.report.add_number(prefix + ".max-ratio", wt.max_ratio);
            result.report.add_boolean(prefix + ".converged", wt.converged);
        }
        result.report.add_boolean("picard.contraction-ok", trace.contraction_ok());
        if (!trace.contraction_ok()) result.verification_failed = true;
    }
    add_solution_lines(result.report, sol, ens);

    LinearBSDEProblem ratio_problem{sol.driver_values, terminal};
    const AprioriRatio ratio = apriori_ratio(sol, ratio_problem);
    if (ratio.value) result.report.add_number("result.apriori-ratio", *ratio.value);
    else result.report.add("result.apriori-ratio", ratio.zero_data ? "undefined(0/0)" : "undefined(!)");

    if (with_verification) {
        const VerificationReport suite = random_test_suite(sol, ens, basis,
                                                           config.verification_tests,
                                                           config.verification_seed);
        for (std::size_t t = 0; t < suite.tests.size(); ++t) {
            const auto& outcome = suite.tests[t];
            const std::string prefix = "verification.test." + std::to_string(t);
            result.report.add(prefix + ".label", outcome.label);
            result.report.add_number(prefix + ".residual", outcome.residual);
            result.report.add_number(prefix + ".se", outcome.se);
            result.report.add_number(prefix + ".bias-tolerance", outcome.bias_tolerance);
            result.report.add_boolean(prefix + ".pass", outcome.pass);
        }
        result.report.add_integer("verification.passed", suite.passed());
        result.report.add_integer("verification.total", static_cast<long long>(suite.tests.size()));
        if (!suite.all_pass()) result.verification_failed = true;
    }

    std::filesystem::create_directories(out_dir);
    export_csv(sol, grid, out_dir / "solution.csv");
    result.report.add_number("timing.total-seconds", timer.seconds());
    result.report.write(out_dir / "report.txt");
    return result;
}

RunResult run_compare(const RunConfig& config, const std::filesystem::path& out_dir) {
    RunResult result;
    Timer timer;
    config.echo(result.report);
    result.report.add("config.compare.terminal", config.compare_terminal_name);
    result.report.add_number("config.compare.constant", config.compare_terminal_constant);
    result.report.add("config.compare.driver", config.compare_driver_name);
    for (const auto& [k, v] : config.compare_driver_params)
        result.report.add_number("config.compare." + k, v);

    const TimeGrid grid = build_uniform_grid(config.horizon, config.steps);
    const PathEnsemble ens = simulate_ensemble(grid, config.model, config.paths, config.seed);
    const DriverSpec upper = driver_from_registry(config.driver_name, config.driver_params);
    const DriverSpec lower =
        driver_from_registry(config.compare_driver_name, config.compare_driver_params);
    const Matrix upper_terminal =
        build_terminal_values(config.terminal_name, config.terminal_constant, config.g_power, ens);
    const Matrix lower_terminal = build_terminal_values(
        config.compare_terminal_name, config.compare_terminal_constant, config.compare_g_power, ens);

    const TranspositionSolution sol_upper = solve_semilinear(
        upper, upper_terminal, ens, config.basis, config.regression, config.picard);
    const TranspositionSolution sol_lower = solve_semilinear(
        lower, lower_terminal, ens, config.basis, config.regression, config.picard);

    const double tol = config.compare_tol
                           ? *config.compare_tol
                           : 5.0 * (sol_upper.diag.bias_scale() + sol_lower.diag.bias_scale());
    const ComparisonReport cmp = comparison_check(sol_upper, upper, sol_lower, lower, tol);
    result.report.add_boolean("compare.setup-ok", cmp.setup_ok);
    if (!cmp.setup_message.empty()) result.report.add("compare.setup-message", cmp.setup_message);
    result.report.add_number("compare.tol", cmp.tol);
    result.report.add_number("compare.min-gap", cmp.min_gap);
    result.report.add_boolean("compare.pass", cmp.pass);
    result.report.add_boolean("compare.equality-detected", cmp.equality_detected);
    result.report.add_boolean("compare.equality-consistent", cmp.equality_consistent);
    if (!cmp.setup_ok) result.solver_failed = true;
    else if (!cmp.pass || !cmp.equality_consistent) result.verification_failed = true;

    std::filesystem::create_directories(out_dir);
    result.report.add_number("timing.total-seconds", timer.seconds());
    result.report.write(out_dir / "report.txt");
    return result;
}

RunResult run_consistency(const RunConfig& config, const std::filesystem::path& out_dir) {
    RunResult result;
    Timer timer;
    config.echo(result.report);
    if (config.driver_name != "zero")
        throw ConfigError("the consistency check is defined for the zero driver");

    const TimeGrid grid = build_uniform_grid(config.horizon, config.steps);
    const PathEnsemble ens = simulate_ensemble(grid, config.model, config.paths, config.seed);
    const Matrix terminal =
        build_terminal_values(config.terminal_name, config.terminal_constant, config.g_power, ens);
    LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1), terminal};
    const Index split = config.split_knot.value_or(config.steps / 2);
    const ConsistencyReport rep =
        time_consistency_check(problem, ens, config.basis, config.regression, split);
    result.report.add_integer("consistency.split-knot", split);
    result.report.add_number("consistency.y-distance", rep.y_distance);
    result.report.add_number("consistency.Y-distance", rep.Y_distance);
    result.report.add_number("consistency.tolerance", rep.tolerance);
    result.report.add_boolean("consistency.pass", rep.pass);
    if (!rep.pass) result.verification_failed = true;

    std::filesystem::create_directories(out_dir);
    result.report.add_number("timing.total-seconds", timer.seconds());
    result.report.write(out_dir / "report.txt");
    return result;
}

RunResult run_sweep(const RunConfig& config, const std::filesystem::path& out_dir) {
    RunResult result;
    Timer timer;
    config.echo(result.report);
    OracleKind kind;
    if (config.sweep_oracle == "brownian") kind = OracleKind::BrownianTerminal;
    else if (config.sweep_oracle == "ito") kind = OracleKind::ItoSquare;
    else throw ConfigError("sweep.oracle: expected brownian or ito");

    const RefinementTable table =
        refinement_study(kind, config.sweep, config.basis, config.regression);
    auto add_rows = [&](const std::string& name, const std::vector<RefinementRow>& rows) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const std::string prefix = "sweep." + name + "." + std::to_string(r);
            result.report.add_integer(prefix + ".steps", rows[r].steps);
            result.report.add_integer(prefix + ".paths", rows[r].paths);
            result.report.add_integer(prefix + ".degree", rows[r].state_degree);
            result.report.add_number(prefix + ".y-error", rows[r].y_error);
            result.report.add_number(prefix + ".Y-error", rows[r].Y_error);
            result.report.add_number(prefix + ".combined-error", rows[r].combined_error);
            result.report.add_number(prefix + ".duality-se", rows[r].duality_se);
        }
    };
    add_rows("grid", table.grid_rows);
    add_rows("paths", table.path_rows);
    add_rows("degree", table.degree_rows);
    result.report.add_boolean("sweep.grid-monotone", table.grid_monotone);
    result.report.add_boolean("sweep.se-scaling-ok", table.se_scaling_ok);
    result.report.add_boolean("sweep.degree-monotone", table.degree_monotone);

    std::filesystem::create_directories(out_dir);
    result.report.add_number("timing.total-seconds", timer.seconds());
    result.report.write(out_dir / "report.txt");
    return result;
}

RunResult run_cache(const RunConfig& config, const std::filesystem::path& cache_path,
                    const std::filesystem::path& out_dir) {
    RunResult result;
    Timer timer;
    config.echo(result.report);
    const TimeGrid grid = build_uniform_grid(config.horizon, config.steps);
    const PathEnsemble ens = simulate_ensemble(grid, config.model, config.paths, config.seed);
    cache_save(ens, cache_path);
    const PathEnsemble loaded = cache_load(cache_path);
    const bool equal = ensembles_equal(ens, loaded);
    result.report.add("cache.path", cache_path.string());
    result.report.add_boolean("cache.round-trip-exact", equal);
    if (!equal) result.verification_failed = true;

    std::filesystem::create_directories(out_dir);
    result.report.add_number("timing.total-seconds", timer.seconds());
    result.report.write(out_dir / "report.txt");
    return result;
}

} // namespace bsde
