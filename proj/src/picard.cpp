#include "bsdelab/picard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bsde {

namespace {

GalerkinBasis window_basis(const PathEnsemble& ens, const BasisSpec& spec, KnotWindow w,
                           Index dim) {
    return GalerkinBasis(ens, uniform_cells(w.begin, w.end, spec.cell_knots), w.end,
                         spec.state_degree, dim, spec.sampling);
}

/// Flat propagation of the terminal: p0_j = E(terminal | knot j), P0 = 0.
AdaptedProcess flat_initial_iterate(const Matrix& terminal, KnotWindow w,
                                    const PathEnsemble& ens, const RegressionSpec& spec) {
    const Index dim = terminal.cols();
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix::Zero(ens.paths(), ens.knot_count()));
    for (Index j = w.begin; j < w.end; ++j) {
        const Matrix fitted = condexp_slice(terminal, j, ens, spec);
        for (Index k = 0; k < dim; ++k) comps[static_cast<std::size_t>(k)].col(j) = fitted.col(k);
    }
    for (Index k = 0; k < dim; ++k) comps[static_cast<std::size_t>(k)].col(w.end) = terminal.col(k);
    return detail::from_values(ens, std::move(comps));
}

AdaptedProcess driver_values_on_window(const DriverSpec& driver, const AdaptedProcess& y,
                                       const AdaptedProcess& Y, KnotWindow w) {
    const PathEnsemble& ens = y.ensemble();
    const Index dim = y.dim();
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix::Zero(ens.paths(), ens.knot_count()));
    std::vector<double> yv(static_cast<std::size_t>(dim)), qv(yv.size()), fv(yv.size());
    for (Index j = w.begin; j < w.end; ++j) {
        for (Index i = 0; i < ens.paths(); ++i) {
            for (Index k = 0; k < dim; ++k) {
                yv[static_cast<std::size_t>(k)] = y.component(k)(i, j);
                qv[static_cast<std::size_t>(k)] = Y.component(k)(i, j);
            }
            InformationState state(ens, i, j);
            driver.evaluate(state, yv.data(), qv.data(), fv.data(), dim);
            for (Index k = 0; k < dim; ++k)
                comps[static_cast<std::size_t>(k)](i, j) = fv[static_cast<std::size_t>(k)];
        }
    }
    return detail::from_values(ens, std::move(comps));
}

double iterate_distance(const AdaptedProcess& y_new, const AdaptedProcess& y_old,
                        const AdaptedProcess& q_new, const AdaptedProcess& q_old, KnotWindow w) {
    AdaptedProcess dy = y_new - y_old;
    AdaptedProcess dq = q_new - q_old;
    return sup_l2_norm(dy, w.begin, w.end) + l2_l2_norm(dq, w.begin, w.end);
}

void merge_diag(SolveDiagnostics& into, const SolveDiagnostics& from) {
    into.gram_condition = std::max(into.gram_condition, from.gram_condition);
    into.gram_near_singular = into.gram_near_singular || from.gram_near_singular;
    into.galerkin_ridge = std::max(into.galerkin_ridge, from.galerkin_ridge);
    into.galerkin_solve_residual += from.galerkin_solve_residual;
    into.galerkin_se = std::hypot(into.galerkin_se, from.galerkin_se);
    into.regression_max_residual = std::max(into.regression_max_residual,
                                            from.regression_max_residual);
    into.regression_se = std::max(into.regression_se, from.regression_se);
    into.regression_ridge_max = std::max(into.regression_ridge_max, from.regression_ridge_max);
}

} // namespace

std::vector<TimeWindow> plan_windows(double horizon, double lipschitz, double theta) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (lipschitz < 0.0) throw ConfigError("Lipschitz constant must be >= 0");
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
    if (lipschitz == 0.0) return {TimeWindow{0.0, horizon}};
    // K (d + sqrt(d)) = theta, a quadratic in sqrt(d).
    const double x = 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * theta / lipschitz));
    const double d = x * x;
    if (d >= horizon) return {TimeWindow{0.0, horizon}};
    const auto count = static_cast<int>(std::ceil(horizon / d - 1e-9));
    std::vector<TimeWindow> windows(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double end = horizon - static_cast<double>(k) * d;
        const double begin = k + 1 == count ? 0.0 : end - d;
        windows[static_cast<std::size_t>(count - 1 - k)] = TimeWindow{begin, end};
    }
    return windows;
}

WindowSolveResult picard_window(const DriverSpec& driver, const Matrix& terminal,
                                KnotWindow window, const PathEnsemble& ens,
                                const BasisSpec& basis_spec, const RegressionSpec& reg_spec,
                                const PicardConfig& config, std::optional<double> galerkin_ridge,
                                int depth) {
    if (!(config.tolerance > 0.0)) throw ConfigError("picard tolerance must be positive");
    if (!(config.theta > 0.0 && config.theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
    const Index dim = terminal.cols();
    const GalerkinBasis basis = window_basis(ens, basis_spec, window, dim);

    WindowSolveResult result;
    WindowTrace trace;
    trace.window = window;
    trace.bisection_depth = depth;

    // A driver with zero Lipschitz constant cannot depend on (y, Y): one
    // linear solve is the fixed point.
    if (driver.lipschitz() == 0.0) {
        AdaptedProcess zeros = AdaptedProcess::zeros(ens, dim);
        AdaptedProcess f = driver_values_on_window(driver, zeros, zeros, window);
        TranspositionSolution sol =
            detail::solve_window(f, terminal, window, ens, basis, reg_spec, galerkin_ridge);
        trace.iterations.push_back({0.0, std::numeric_limits<double>::quiet_NaN()});
        trace.converged = true;
        result.y = std::move(sol.y);
        result.Y = std::move(sol.Y);
        result.diag = sol.diag;
        result.traces.push_back(std::move(trace));
        return result;
    }

    AdaptedProcess p = flat_initial_iterate(terminal, window, ens, reg_spec);
    AdaptedProcess q = AdaptedProcess::zeros(ens, dim);
    double previous_distance = std::numeric_limits<double>::quiet_NaN();

    for (int it = 1; it <= config.max_iterations; ++it) {
        AdaptedProcess f = driver_values_on_window(driver, p, q, window);
        TranspositionSolution sol =
            detail::solve_window(f, terminal, window, ens, basis, reg_spec, galerkin_ridge);
        const double distance = iterate_distance(sol.y, p, sol.Y, q, window);
        const double ratio = distance / previous_distance; // NaN on the first pass
        trace.iterations.push_back({distance, ratio});
        if (std::isfinite(ratio) && previous_distance > config.tolerance)
            trace.max_ratio = std::max(trace.max_ratio, ratio);

        if (distance < config.tolerance) {
            trace.converged = true;
            result.y = std::move(sol.y);
            result.Y = std::move(sol.Y);
            result.diag = sol.diag;
            result.traces.push_back(std::move(trace));
            return result;
        }

        if (std::isfinite(ratio) && ratio >= 1.0 && previous_distance > config.tolerance) {
            if (depth < config.max_bisections && window.end - window.begin >= 2) {
                const Index mid = window.begin + (window.end - window.begin) / 2;
                WindowSolveResult right = picard_window(driver, terminal, {mid, window.end}, ens,
                                                        basis_spec, reg_spec, config,
                                                        galerkin_ridge, depth + 1);
                Matrix mid_terminal(ens.paths(), dim);
                for (Index k = 0; k < dim; ++k) mid_terminal.col(k) = right.y.component(k).col(mid);
                WindowSolveResult left = picard_window(driver, mid_terminal, {window.begin, mid},
                                                       ens, basis_spec, reg_spec, config,
                                                       galerkin_ridge, depth + 1);
                // Stitch: later knots from the right half, earlier from the left.
                std::vector<Matrix> y_comps, q_comps;
                for (Index k = 0; k < dim; ++k) {
                    Matrix yk = right.y.component(k);
                    yk.middleCols(window.begin, mid - window.begin) =
                        left.y.component(k).middleCols(window.begin, mid - window.begin);
                    y_comps.push_back(std::move(yk));
                    Matrix qk = right.Y.component(k);
                    qk.middleCols(window.begin, mid - window.begin) =
                        left.Y.component(k).middleCols(window.begin, mid - window.begin);
                    q_comps.push_back(std::move(qk));
                }
                result.y = detail::from_values(ens, std::move(y_comps));
                result.Y = detail::from_values(ens, std::move(q_comps));
                result.diag = right.diag;
                merge_diag(result.diag, left.diag);
                result.traces = std::move(right.traces);
                for (auto& t : left.traces) result.traces.push_back(std::move(t));
                return result;
            }
        }

        previous_distance = distance;
        p = std::move(sol.y);
        q = std::move(sol.Y);
    }
    throw ConvergenceError("Picard iteration did not converge within " +
                               std::to_string(config.max_iterations) + " iterations",
                           trace);
}

TranspositionSolution solve_semilinear(const DriverSpec& driver, const Matrix& terminal,
                                       const PathEnsemble& ens, const BasisSpec& basis_spec,
                                       const RegressionSpec& reg_spec, const PicardConfig& config,
                                       PicardTrace* trace, std::optional<double> galerkin_ridge) {
    if (terminal.rows() != ens.paths()) throw std::invalid_argument("terminal path count mismatch");
    const Index dim = terminal.cols();
    audit_lipschitz(driver, ens, dim);

    // Window plan in time, then snapped to grid knots (at least one step per
    // window; sub-step plans collapse to single-step windows).
    std::vector<TimeWindow> plan;
    if (config.window_boundaries) {
        std::vector<double> edges = *config.window_boundaries;
        for (double e : edges)
            if (!(e > 0.0 && e < ens.grid().horizon()))
                throw ConfigError("window boundaries must lie strictly inside (0, T)");
        edges.push_back(0.0);
        edges.push_back(ens.grid().horizon());
        std::sort(edges.begin(), edges.end());
        for (std::size_t k = 0; k + 1 < edges.size(); ++k)
            if (edges[k + 1] > edges[k]) plan.push_back({edges[k], edges[k + 1]});
        if (plan.empty()) throw ConfigError("empty window plan");
    } else {
        plan = plan_windows(ens.grid().horizon(), driver.lipschitz(), config.theta);
    }
    std::vector<KnotWindow> windows;
    Index end_knot = ens.steps();
    for (auto it = plan.rbegin(); it != plan.rend(); ++it) {
        if (end_knot == 0) break;
        Index begin_knot = 0;
        if (it->begin > 0.0) {
            begin_knot = end_knot - 1;
            while (begin_knot > 0 &&
                   ens.grid().knot(begin_knot) > it->begin + 1e-12 * ens.grid().horizon())
                --begin_knot;
        }
        windows.push_back({begin_knot, end_knot});
        end_knot = begin_knot;
    }
    if (end_knot != 0) windows.push_back({0, end_knot});

    // Solve backward from the horizon, handing y at each window start back as
    // the terminal of the next window (exact copy).
    TranspositionSolution sol;
    sol.window = {0, ens.steps()};
    sol.terminal = terminal;
    std::vector<Matrix> y_comps(static_cast<std::size_t>(dim),
                                Matrix::Zero(ens.paths(), ens.knot_count()));
    std::vector<Matrix> q_comps = y_comps;
    Matrix window_terminal = terminal;
    PicardTrace local_trace;
    bool first_window = true;
    for (const KnotWindow& w : windows) {
        WindowSolveResult res = picard_window(driver, window_terminal, w, ens, basis_spec,
                                              reg_spec, config, galerkin_ridge);
        for (Index k = 0; k < dim; ++k) {
            const Index cols = w.end - w.begin + (first_window ? 1 : 0);
            y_comps[static_cast<std::size_t>(k)].middleCols(w.begin, cols) =
                res.y.component(k).middleCols(w.begin, cols);
            q_comps[static_cast<std::size_t>(k)].middleCols(w.begin, w.end - w.begin) =
                res.Y.component(k).middleCols(w.begin, w.end - w.begin);
        }
        if (first_window) {
            sol.diag = res.diag;
            first_window = false;
        } else {
            merge_diag(sol.diag, res.diag);
        }
        window_terminal.resize(ens.paths(), dim);
        for (Index k = 0; k < dim; ++k)
            window_terminal.col(k) = res.y.component(k).col(w.begin);
        for (auto& t : res.traces) local_trace.windows.push_back(std::move(t));
    }
    sol.y = detail::from_values(ens, std::move(y_comps));
    sol.Y = detail::from_values(ens, std::move(q_comps));

    // Global martingale from the converged driver values.
    sol.driver_values = driver_values_on_window(driver, sol.y, sol.Y, {0, ens.steps()});
    detail::attach_martingale(sol, ens);
    sol.diag.y_sup_l2 = sup_l2_norm(sol.y);
    sol.diag.Y_l2_l2 = l2_l2_norm(sol.Y);
    if (trace) *trace = std::move(local_trace);
    return sol;
}

} // namespace bsde
