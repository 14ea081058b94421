#include "bsdelab/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsdelab/pairwise.hpp"
#include "bsdelab/rng.hpp"

namespace bsde {

namespace {

double feature_from_state(const InformationState& s, Index knot, Index idx) {
    if (idx == 0) return s.brownian(knot);
    Index next = 1;
    if (s.has_auxiliary()) {
        if (idx == next) return s.aux(knot);
        ++next;
    }
    if (s.has_initial() && idx == next) return s.initial();
    throw std::invalid_argument("feature index out of range");
}

double feature_raw(const PathEnsemble& ens, Index path, Index knot, Index idx) {
    if (idx == 0) return ens.brownian()(path, knot);
    Index next = 1;
    if (ens.has_auxiliary()) {
        if (idx == next) return ens.aux_brownian()(path, knot);
        ++next;
    }
    if (ens.has_initial() && idx == next) return ens.initial_values()(path);
    throw std::invalid_argument("feature index out of range");
}

ResidualStat residual_impl(const TranspositionSolution& sol, const PathEnsemble& ens,
                           const DualityTest& test, bool pseudo) {
    const Index dim = sol.y.dim();
    if (test.u.empty() || test.v.empty()) throw std::invalid_argument("test u/v must be set");
    if (test.u.dim() != dim || test.v.dim() != dim)
        throw std::invalid_argument("test dimension mismatch");
    if (test.start_knot < sol.window.begin || test.start_knot >= sol.window.end)
        throw std::out_of_range("test start knot outside the solution window");

    TestProcessInput in;
    in.start_knot = test.start_knot;
    in.start_value = test.start_value;
    in.drift = test.u;
    in.diffusion = pseudo ? AdaptedProcess::zeros(ens, dim) : test.v;
    const AdaptedProcess z = simulate_test_process(ens, in);
    const Matrix eta = build_start_values(ens, in);

    const Index j0 = test.start_knot;
    const Index j_end = sol.window.end;
    const TimeGrid& grid = ens.grid();
    Array acc = Array::Zero(ens.paths());
    for (Index k = 0; k < dim; ++k) {
        const Matrix& zk = z.component(k);
        const Matrix& yk = sol.y.component(k);
        const Matrix& qk = sol.Y.component(k);
        const Matrix& fk = sol.driver_values.component(k);
        const Matrix& uk = test.u.component(k);
        const Matrix& vk = pseudo ? in.diffusion.component(k) : test.v.component(k);
        acc += zk.col(j_end).array() * sol.terminal.col(k).array();
        acc -= eta.col(k).array() * yk.col(j0).array();
        for (Index j = j0; j < j_end; ++j) {
            const double dt = grid.dt(j);
            acc -= (zk.col(j).array() * fk.col(j).array() +
                    uk.col(j).array() * yk.col(j).array() +
                    vk.col(j).array() * qk.col(j).array()) *
                   dt;
        }
    }
    const MeanWithError m = pairwise_mean_se(acc);
    return {m.mean, m.standard_error};
}

AdaptedProcess shift_process(const AdaptedProcess& p, double shift) {
    std::vector<Matrix> comps;
    comps.reserve(static_cast<std::size_t>(p.dim()));
    for (Index k = 0; k < p.dim(); ++k) comps.push_back(p.component(k).array() + shift);
    return detail::from_values(p.ensemble(), std::move(comps));
}

} // namespace

ResidualStat duality_residual(const TranspositionSolution& sol, const PathEnsemble& ens,
                              const DualityTest& test) {
    return residual_impl(sol, ens, test, false);
}

ResidualStat pseudo_duality_residual(const TranspositionSolution& sol, const PathEnsemble& ens,
                                     const DualityTest& test) {
    return residual_impl(sol, ens, test, true);
}

TranspositionSolution with_shifted_Y(const TranspositionSolution& sol, double shift) {
    TranspositionSolution out = sol;
    out.Y = shift_process(sol.Y, shift);
    return out;
}

TranspositionSolution with_shifted_y(const TranspositionSolution& sol, double shift) {
    TranspositionSolution out = sol;
    out.y = shift_process(sol.y, shift);
    return out;
}

VerificationReport random_test_suite(const TranspositionSolution& sol, const PathEnsemble& ens,
                                     const GalerkinBasis& basis, int n_tests,
                                     std::uint64_t seed) {
    if (n_tests < 1) throw ConfigError("n_tests must be >= 1");
    const Index dim = sol.y.dim();
    const Index n = ens.paths();
    const Index j_steps = ens.steps();
    const Index q = InformationState(ens, 0, 0).feature_count();

    VerificationReport report;
    for (int t = 0; t < n_tests; ++t) {
        const auto tu = static_cast<std::uint64_t>(t);
        std::uint64_t sub = 0;
        auto bits = [&] { return rng::key(seed, rng::kChannelScratch + 2, tu, sub++); };
        auto unif = [&] { return 2.0 * rng::to_unit(bits()) - 1.0; };

        DualityTest test;
        test.start_knot = sol.window.begin +
                          static_cast<Index>(bits() % static_cast<std::uint64_t>(
                                                          sol.window.end - sol.window.begin));
        const Index j0 = test.start_knot;
        test.label = "random-" + std::to_string(t) + "(t0=" + std::to_string(j0) + ")";

        // Start value: random quadratic of one knot-j0 feature per component.
        const Index eta_feat = static_cast<Index>(bits() % static_cast<std::uint64_t>(q));
        Vector c0(dim), c1(dim), c2(dim);
        for (Index k = 0; k < dim; ++k) {
            c0(k) = unif();
            c1(k) = unif();
            c2(k) = 0.5 * unif();
        }
        auto raw_eta = [c0, c1, c2, eta_feat, dim](const InformationState& s) {
            const double f = s.features()(eta_feat);
            Vector v(dim);
            for (Index k = 0; k < dim; ++k) v(k) = c0(k) + c1(k) * f + c2(k) * f * f;
            return v;
        };
        {
            TestProcessInput probe;
            probe.start_knot = j0;
            probe.start_value = raw_eta;
            probe.drift = AdaptedProcess::zeros(ens, dim);
            probe.diffusion = AdaptedProcess::zeros(ens, dim);
            const double norm = rms(build_start_values(ens, probe));
            const double scale = norm > 1e-12 ? 1.0 / norm : 1.0;
            test.start_value = [raw_eta, scale](const InformationState& s) {
                return Vector(scale * raw_eta(s));
            };
        }

        // Drift: piecewise constant on the basis cells, affine in the feature
        // observed at each segment start (adapted by construction).
        {
            std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                                      Matrix::Zero(n, ens.knot_count()));
            for (Index c = 0; c < basis.cell_count(); ++c) {
                const Index lo = std::max(basis.cell_begin(c), j0);
                const Index hi = basis.cell_end(c);
                if (lo >= hi) continue;
                for (Index k = 0; k < dim; ++k) {
                    const double a = unif();
                    const double b = unif();
                    const Index idx = static_cast<Index>(bits() % static_cast<std::uint64_t>(q));
                    Matrix& uk = comps[static_cast<std::size_t>(k)];
                    for (Index i = 0; i < n; ++i) {
                        const double val = a + b * feature_raw(ens, i, lo, idx);
                        for (Index j = lo; j < hi; ++j) uk(i, j) = val;
                    }
                }
            }
            AdaptedProcess u = detail::from_values(ens, std::move(comps));
            const double norm = l2_l2_norm(u, j0, j_steps);
            if (norm > 1e-12) u *= 1.0 / norm;
            test.u = std::move(u);
        }

        // Diffusion: a random combination of the Galerkin elements, zeroed
        // before the start knot. Inside the span the projection identity
        // makes the Y pairing exact in sample, so residuals isolate real
        // defects instead of basis truncation.
        {
            std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                                      Matrix::Zero(n, ens.knot_count()));
            for (Index e = 0; e < basis.size(); ++e) {
                const double coef = unif();
                const auto& elem = basis.element(e);
                const Index lo = std::max(basis.cell_begin(elem.cell), j0);
                const Index hi = basis.cell_end(elem.cell);
                if (lo >= hi) continue;
                Matrix& vk = comps[static_cast<std::size_t>(elem.component)];
                for (Index j = lo; j < hi; ++j)
                    for (Index i = 0; i < n; ++i) vk(i, j) += coef * basis.element_value(e, i, j);
            }
            AdaptedProcess v = detail::from_values(ens, std::move(comps));
            const double norm = l2_l2_norm(v, j0, j_steps);
            if (norm > 1e-12) v *= 1.0 / norm;
            test.v = std::move(v);
        }

        TestOutcome outcome;
        outcome.label = test.label;
        outcome.has_diffusion = l2_l2_norm(test.v, j0, j_steps) > 0.0;
        TestProcessInput norm_probe;
        norm_probe.start_knot = j0;
        norm_probe.start_value = test.start_value;
        norm_probe.drift = test.u;
        norm_probe.diffusion = test.v;
        const double test_norm = rms(build_start_values(ens, norm_probe)) +
                                 l2_l2_norm(test.u, j0, j_steps) +
                                 l2_l2_norm(test.v, j0, j_steps);
        outcome.bias_tolerance = 5.0 * sol.diag.bias_scale() * test_norm;
        const ResidualStat stat = duality_residual(sol, ens, test);
        outcome.residual = stat.residual;
        outcome.se = stat.se;
        outcome.pass = std::abs(stat.residual) <= 3.0 * stat.se + outcome.bias_tolerance;
        report.tests.push_back(std::move(outcome));
    }
    return report;
}

DecompositionStat orthogonal_decomposition_check(const TranspositionSolution& sol,
                                                 const PathEnsemble& ens,
                                                 const AdaptedProcess& probe) {
    if (probe.dim() != sol.y.dim()) throw std::invalid_argument("probe dimension mismatch");
    const Index j_end = sol.window.end;
    const Matrix y_int = ito_integral(sol.Y, j_end);
    const Matrix probe_int = ito_integral(probe, j_end);
    Array inner = Array::Zero(ens.paths());
    Array norm_sq = Array::Zero(ens.paths());
    for (Index k = 0; k < sol.y.dim(); ++k) {
        Array defect = sol.M.component(k).col(j_end).array() -
                       sol.M.component(k).col(sol.window.begin).array() - y_int.col(k).array();
        inner += defect * probe_int.col(k).array();
        norm_sq += defect.square();
    }
    DecompositionStat out;
    const MeanWithError m = pairwise_mean_se(inner);
    out.statistic = m.mean;
    out.se = m.standard_error;
    out.residual_norm = std::sqrt(pairwise_mean(norm_sq));
    out.bias_tolerance = (sol.diag.galerkin_se + sol.diag.regression_se) *
                         l2_l2_norm(probe, sol.window.begin, sol.window.end);
    out.pass = std::abs(out.statistic) <= 3.0 * out.se + out.bias_tolerance;
    return out;
}

ComparisonReport comparison_check(const TranspositionSolution& sol_upper,
                                  const DriverSpec& driver_upper,
                                  const TranspositionSolution& sol_lower,
                                  const DriverSpec& driver_lower, double tol) {
    ComparisonReport report;
    report.tol = tol;
    if (sol_upper.y.dim() != 1 || sol_lower.y.dim() != 1)
        throw std::invalid_argument("comparison is one-dimensional only");
    const PathEnsemble& ens = sol_upper.y.ensemble();
    if (!ens.same_scenarios(sol_lower.y.ensemble())) {
        report.setup_message = "solutions not computed on common random numbers";
        return report;
    }
    const Index n = ens.paths();
    const Index j_steps = ens.steps();
    const double scale = 1.0 + sol_upper.terminal.cwiseAbs().maxCoeff() +
                         sol_lower.terminal.cwiseAbs().maxCoeff();
    const double tiny = 1e-10 * scale;

    // Hypotheses first: terminal ordering pathwise, driver ordering on
    // sampled arguments.
    if ((sol_upper.terminal - sol_lower.terminal).minCoeff() < -tiny) {
        report.setup_message = "terminal ordering hypothesis violated";
        return report;
    }
    std::uint64_t sub = 0;
    for (int s = 0; s < 400; ++s) {
        auto bits = [&] { return rng::key(0xC0817, rng::kChannelScratch + 3, 0, sub++); };
        const Index i = static_cast<Index>(bits() % static_cast<std::uint64_t>(n));
        const Index j = static_cast<Index>(bits() % static_cast<std::uint64_t>(j_steps));
        const double y_arg = 6.0 * rng::to_unit(bits()) - 3.0;
        const double q_arg = 6.0 * rng::to_unit(bits()) - 3.0;
        InformationState state(ens, i, j);
        double fu = 0.0, fl = 0.0;
        driver_upper.evaluate(state, &y_arg, &q_arg, &fu, 1);
        driver_lower.evaluate(state, &y_arg, &q_arg, &fl, 1);
        if (fu > fl + tiny) {
            report.setup_message = "driver ordering hypothesis violated on sampled arguments";
            return report;
        }
    }
    report.setup_ok = true;

    // Driver gap along the lower solution, needed by the equality criterion.
    Matrix gap(n, j_steps);
    for (Index j = 0; j < j_steps; ++j) {
        for (Index i = 0; i < n; ++i) {
            InformationState state(ens, i, j);
            const double y_arg = sol_lower.y.component(0)(i, j);
            const double q_arg = sol_lower.Y.component(0)(i, j);
            double fu = 0.0, fl = 0.0;
            driver_upper.evaluate(state, &y_arg, &q_arg, &fu, 1);
            driver_lower.evaluate(state, &y_arg, &q_arg, &fl, 1);
            gap(i, j) = fl - fu; // >= 0 under the hypothesis
        }
    }
    const bool terminal_equal =
        (sol_upper.terminal - sol_lower.terminal).cwiseAbs().maxCoeff() <= tiny;

    report.equality_at_knot.assign(static_cast<std::size_t>(j_steps) + 1, 0);
    report.equality_expected_at_knot.assign(static_cast<std::size_t>(j_steps) + 1, 0);
    report.min_gap = std::numeric_limits<double>::infinity();
    double suffix_gap = 0.0;
    for (Index j = j_steps; j >= 0; --j) {
        const Vector diff =
            sol_upper.y.component(0).col(j) - sol_lower.y.component(0).col(j);
        report.min_gap = std::min(report.min_gap, diff.minCoeff());
        report.equality_at_knot[static_cast<std::size_t>(j)] =
            diff.cwiseAbs().maxCoeff() <= tol ? 1 : 0;
        report.equality_expected_at_knot[static_cast<std::size_t>(j)] =
            (terminal_equal && suffix_gap <= tiny) ? 1 : 0;
        if (j > 0) suffix_gap = std::max(suffix_gap, gap.col(j - 1).cwiseAbs().maxCoeff());
    }
    report.pass = report.min_gap >= -tol;
    report.equality_detected =
        std::any_of(report.equality_at_knot.begin(), report.equality_at_knot.end(),
                    [](char c) { return c != 0; });
    report.equality_consistent = true;
    for (std::size_t j = 0; j < report.equality_at_knot.size(); ++j)
        if (report.equality_expected_at_knot[j] && !report.equality_at_knot[j])
            report.equality_consistent = false;
    return report;
}

ConsistencyReport time_consistency_check(const LinearBSDEProblem& problem,
                                         const PathEnsemble& ens, const BasisSpec& basis_spec,
                                         const RegressionSpec& reg_spec, Index split_knot) {
    if (split_knot <= 0 || split_knot >= ens.steps())
        throw ConfigError("split knot must lie strictly inside (0, J)");
    const Index dim = problem.terminal.cols();

    const GalerkinBasis full_basis = build_tensor_basis(ens, basis_spec, dim);
    const TranspositionSolution full = solve_linear(problem, ens, full_basis, reg_spec);

    // Restricted basis: the full cells clipped at the split knot.
    std::vector<Index> starts{split_knot};
    for (Index s : full_basis.cell_starts())
        if (s > split_knot) starts.push_back(s);
    const GalerkinBasis sub_basis(ens, starts, ens.steps(), basis_spec.state_degree, dim,
                                  basis_spec.sampling);
    const TranspositionSolution sub = detail::solve_window(
        problem.f, problem.terminal, {split_knot, ens.steps()}, ens, sub_basis, reg_spec,
        std::nullopt);

    ConsistencyReport report;
    AdaptedProcess dy = full.y - sub.y;
    AdaptedProcess dq = full.Y - sub.Y;
    report.y_distance = sup_l2_norm(dy, split_knot, ens.steps());
    report.Y_distance = l2_l2_norm(dq, split_knot, ens.steps());

    // When the split falls inside a full cell the restricted projection sees
    // a genuinely different first cell; budget its mass on top of the
    // sampling scales.
    Index boundary = ens.steps();
    for (Index s : full_basis.cell_starts())
        if (s >= split_knot) {
            boundary = s;
            break;
        }
    const double leak =
        boundary > split_knot ? 2.0 * l2_l2_norm(full.Y, split_knot, boundary) : 0.0;
    report.tolerance = 10.0 * (full.diag.bias_scale() + sub.diag.bias_scale()) + leak +
                       1e-9 * (1.0 + rms(problem.terminal));
    report.pass = report.y_distance <= report.tolerance &&
                  report.Y_distance <= report.tolerance;
    return report;
}

ConsistencyReport consistency_compare(const TranspositionSolution& full,
                                      const TranspositionSolution& restricted, Index split_knot,
                                      double tolerance) {
    ConsistencyReport report;
    report.tolerance = tolerance;
    if (!full.y.ensemble().same_scenarios(restricted.y.ensemble())) {
        report.crn_valid = false;
        report.message = "comparison invalid without common random numbers";
        return report;
    }
    const Index j_end = full.window.end;
    double y_dist = 0.0;
    double q_dist_sq = 0.0;
    const TimeGrid& grid = full.y.ensemble().grid();
    Array per_path = Array::Zero(full.y.paths());
    Array per_path_q = Array::Zero(full.y.paths());
    for (Index i = 0; i < full.y.paths(); ++i) {
        double best = 0.0;
        double acc = 0.0;
        for (Index j = split_knot; j <= j_end; ++j) {
            double sq = 0.0;
            for (Index k = 0; k < full.y.dim(); ++k) {
                const double d = full.y.component(k)(i, j) - restricted.y.component(k)(i, j);
                sq += d * d;
            }
            best = std::max(best, sq);
            if (j < j_end) {
                double qs = 0.0;
                for (Index k = 0; k < full.y.dim(); ++k) {
                    const double d = full.Y.component(k)(i, j) - restricted.Y.component(k)(i, j);
                    qs += d * d;
                }
                acc += qs * grid.dt(j);
            }
        }
        per_path(i) = best;
        per_path_q(i) = acc;
    }
    y_dist = std::sqrt(pairwise_mean(per_path));
    q_dist_sq = pairwise_mean(per_path_q);
    report.y_distance = y_dist;
    report.Y_distance = std::sqrt(q_dist_sq);
    report.pass = report.y_distance <= tolerance && report.Y_distance <= tolerance;
    return report;
}

LinearBSDEProblem oracle_problem(OracleKind kind, const PathEnsemble& ens) {
    LinearBSDEProblem problem;
    const Index j_end = ens.steps();
    problem.terminal.resize(ens.paths(), 1);
    if (kind == OracleKind::BrownianTerminal) {
        problem.terminal.col(0) = ens.brownian().col(j_end);
        problem.f = AdaptedProcess::zeros(ens, 1);
    } else {
        problem.terminal.col(0) = ens.brownian().col(j_end).array().square();
        problem.f = AdaptedProcess::constant(ens, 1.0);
    }
    return problem;
}

namespace {

/// Errors of a coarse solution against the closed-form oracle, measured by
/// left-constant embedding on the fine grid the ensemble was coarsened from.
std::pair<double, double> embedding_errors(OracleKind kind, const TranspositionSolution& sol,
                                           const PathEnsemble& fine, Index factor) {
    const Index n = fine.paths();
    const TimeGrid& fine_grid = fine.grid();
    Array y_acc = Array::Zero(n);
    Array q_acc = Array::Zero(n);
    for (Index jf = 0; jf < fine.steps(); ++jf) {
        const Index jc = jf / factor;
        const double dt = fine_grid.dt(jf);
        for (Index i = 0; i < n; ++i) {
            const double w = fine.brownian()(i, jf);
            const double y_oracle = kind == OracleKind::BrownianTerminal ? w : w * w;
            const double q_oracle = kind == OracleKind::BrownianTerminal ? 1.0 : 2.0 * w;
            const double dy = sol.y.component(0)(i, jc) - y_oracle;
            const double dq = sol.Y.component(0)(i, jc) - q_oracle;
            y_acc(i) += dy * dy * dt;
            q_acc(i) += dq * dq * dt;
        }
    }
    return {std::sqrt(pairwise_mean(y_acc)), std::sqrt(pairwise_mean(q_acc))};
}

double mean_duality_se(const TranspositionSolution& sol, const PathEnsemble& ens,
                       const GalerkinBasis& basis, int n_tests, std::uint64_t seed) {
    const VerificationReport rep = random_test_suite(sol, ens, basis, n_tests, seed);
    double acc = 0.0;
    for (const auto& t : rep.tests) acc += t.se;
    return acc / static_cast<double>(rep.tests.size());
}

bool non_increasing(const std::vector<double>& xs) {
    for (std::size_t k = 1; k < xs.size(); ++k)
        if (xs[k] > xs[k - 1] + 1e-12 * std::max(1.0, xs[k - 1])) return false;
    return true;
}

} // namespace

RefinementTable refinement_study(OracleKind kind, const RefinementPlan& plan,
                                 const BasisSpec& basis_spec, const RegressionSpec& reg_spec) {
    if (plan.grid_steps.empty() || plan.path_counts.empty() || plan.state_degrees.empty())
        throw ConfigError("refinement plan lists must be nonempty");
    RefinementTable table;
    const FiltrationModel natural = FiltrationModel::natural();

    // Grid refinement at fixed (large) path count, nested ensembles.
    {
        const Index j_max = *std::max_element(plan.grid_steps.begin(), plan.grid_steps.end());
        for (Index j : plan.grid_steps)
            if (j < 1 || j_max % j != 0)
                throw ConfigError("grid step counts must divide the maximum");
        const PathEnsemble fine =
            simulate_ensemble(build_uniform_grid(1.0, j_max), natural, plan.grid_paths, plan.seed);
        std::vector<double> combined;
        for (Index j : plan.grid_steps) {
            const Index factor = j_max / j;
            std::optional<PathEnsemble> storage;
            if (factor > 1) storage = coarsen_ensemble(fine, factor);
            const PathEnsemble& ens = factor > 1 ? *storage : fine;
            const GalerkinBasis basis = build_tensor_basis(ens, basis_spec, 1);
            const LinearBSDEProblem problem = oracle_problem(kind, ens);
            const TranspositionSolution sol = solve_linear(problem, ens, basis, reg_spec);
            auto [y_err, q_err] = embedding_errors(kind, sol, fine, factor);
            RefinementRow row;
            row.steps = j;
            row.paths = plan.grid_paths;
            row.state_degree = basis_spec.state_degree;
            row.y_error = y_err;
            row.Y_error = q_err;
            row.combined_error = std::hypot(y_err, q_err);
            row.duality_se = mean_duality_se(sol, ens, basis, 3, plan.seed + 11);
            combined.push_back(row.combined_error);
            table.grid_rows.push_back(row);
        }
        table.grid_monotone = non_increasing(combined);
    }

    // Path refinement at fixed grid: duality standard errors ~ 1 / sqrt(N).
    {
        std::vector<double> scaled;
        for (Index n_paths : plan.path_counts) {
            const PathEnsemble ens = simulate_ensemble(build_uniform_grid(1.0, plan.path_steps),
                                                       natural, n_paths, plan.seed + 1);
            const GalerkinBasis basis = build_tensor_basis(ens, basis_spec, 1);
            const LinearBSDEProblem problem = oracle_problem(kind, ens);
            const TranspositionSolution sol = solve_linear(problem, ens, basis, reg_spec);
            RefinementRow row;
            row.steps = plan.path_steps;
            row.paths = n_paths;
            row.state_degree = basis_spec.state_degree;
            const Matrix& w = ens.brownian();
            Array y_acc = Array::Zero(n_paths);
            Array q_acc = Array::Zero(n_paths);
            for (Index j = 0; j < ens.steps(); ++j) {
                const double dt = ens.grid().dt(j);
                for (Index i = 0; i < n_paths; ++i) {
                    const double y_oracle =
                        kind == OracleKind::BrownianTerminal ? w(i, j) : w(i, j) * w(i, j);
                    const double q_oracle =
                        kind == OracleKind::BrownianTerminal ? 1.0 : 2.0 * w(i, j);
                    const double dy = sol.y.component(0)(i, j) - y_oracle;
                    const double dq = sol.Y.component(0)(i, j) - q_oracle;
                    y_acc(i) += dy * dy * dt;
                    q_acc(i) += dq * dq * dt;
                }
            }
            row.y_error = std::sqrt(pairwise_mean(y_acc));
            row.Y_error = std::sqrt(pairwise_mean(q_acc));
            row.combined_error = std::hypot(row.y_error, row.Y_error);
            row.duality_se = mean_duality_se(sol, ens, basis, 5, plan.seed + 12);
            scaled.push_back(row.duality_se * std::sqrt(static_cast<double>(n_paths)));
            table.path_rows.push_back(row);
        }
        table.se_scaling_ok = true;
        for (std::size_t k = 1; k < scaled.size(); ++k) {
            const double ratio = scaled[k] / scaled[0];
            if (!(ratio > 0.5 && ratio < 2.0)) table.se_scaling_ok = false;
        }
    }

    // Subspace refinement: projection error in the state degree.
    {
        const PathEnsemble ens = simulate_ensemble(build_uniform_grid(1.0, plan.degree_steps),
                                                   natural, plan.degree_paths, plan.seed + 2);
        const LinearBSDEProblem problem = oracle_problem(kind, ens);
        std::vector<double> q_errors;
        for (int degree : plan.state_degrees) {
            BasisSpec spec = basis_spec;
            spec.state_degree = degree;
            const GalerkinBasis basis = build_tensor_basis(ens, spec, 1);
            const TranspositionSolution sol = solve_linear(problem, ens, basis, reg_spec);
            RefinementRow row;
            row.steps = plan.degree_steps;
            row.paths = plan.degree_paths;
            row.state_degree = degree;
            const Matrix& w = ens.brownian();
            Array q_acc = Array::Zero(plan.degree_paths);
            for (Index j = 0; j < ens.steps(); ++j) {
                const double dt = ens.grid().dt(j);
                for (Index i = 0; i < plan.degree_paths; ++i) {
                    const double q_oracle =
                        kind == OracleKind::BrownianTerminal ? 1.0 : 2.0 * w(i, j);
                    const double dq = sol.Y.component(0)(i, j) - q_oracle;
                    q_acc(i) += dq * dq * dt;
                }
            }
            row.Y_error = std::sqrt(pairwise_mean(q_acc));
            row.combined_error = row.Y_error;
            row.duality_se = 0.0;
            q_errors.push_back(row.Y_error);
            table.degree_rows.push_back(row);
        }
        table.degree_monotone = non_increasing(q_errors);
    }
    return table;
}

} // namespace bsde
