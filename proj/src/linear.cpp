#include "bsdelab/linear.hpp"

#include <cmath>
#include <stdexcept>

namespace bsde {

namespace {

void check_problem(const LinearBSDEProblem& problem, const PathEnsemble& ens) {
    if (problem.f.empty()) throw std::invalid_argument("problem.f must be set (use zeros)");
    if (&problem.f.ensemble() != &ens)
        throw std::invalid_argument("problem.f must live on the given ensemble");
    if (problem.terminal.rows() != ens.paths() || problem.terminal.cols() != problem.f.dim())
        throw std::invalid_argument("terminal shape mismatch");
    if (!problem.terminal.allFinite())
        throw std::invalid_argument("terminal contains non-finite values");
}

/// Regression pass over a window; records slice diagnostics into diag.
AdaptedProcess regress_y(const AdaptedProcess& f, const Matrix& terminal, KnotWindow window,
                         const PathEnsemble& ens, const RegressionSpec& spec,
                         SolveDiagnostics& diag) {
    const Index dim = terminal.cols();
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix::Zero(ens.paths(), ens.knot_count()));
    for (Index k = 0; k < dim; ++k) comps[static_cast<std::size_t>(k)].col(window.end) = terminal.col(k);

    Matrix suffix = Matrix::Zero(ens.paths(), dim); // sum_{j' in [j, end)} f dt
    Matrix target(ens.paths(), dim);
    for (Index j = window.end - 1; j >= window.begin; --j) {
        for (Index k = 0; k < dim; ++k)
            suffix.col(k) += f.component(k).col(j) * ens.grid().dt(j);
        target = terminal - suffix;
        SliceFit fit = condexp_slice_fit(target, j, ens, spec);
        for (Index k = 0; k < dim; ++k) comps[static_cast<std::size_t>(k)].col(j) = fit.fitted.col(k);
        diag.regression_max_residual = std::max(diag.regression_max_residual, fit.residual_rms);
        diag.regression_se = std::max(diag.regression_se, fit.fit_se);
        diag.regression_ridge_max = std::max(diag.regression_ridge_max, fit.ridge_used);
    }
    return detail::from_values(ens, std::move(comps));
}

} // namespace

namespace detail {

TranspositionSolution solve_window(const AdaptedProcess& f, const Matrix& terminal,
                                   KnotWindow window, const PathEnsemble& ens,
                                   const GalerkinBasis& basis, const RegressionSpec& spec,
                                   std::optional<double> galerkin_ridge) {
    if (window.begin < 0 || window.end > ens.steps() || window.begin >= window.end)
        throw std::invalid_argument("bad knot window");
    if (basis.window_begin() != window.begin || basis.window_end() != window.end)
        throw std::invalid_argument("basis cells must partition the solve window");
    if (&basis.ensemble() != &ens) throw std::invalid_argument("basis ensemble mismatch");

    TranspositionSolution sol;
    sol.window = window;
    sol.terminal = terminal;
    sol.y = regress_y(f, terminal, window, ens, spec, sol.diag);

    GalerkinInfo ginfo;
    sol.Y = solve_Y_galerkin(basis, f, terminal, galerkin_ridge, &ginfo);
    sol.diag.gram_condition = ginfo.gram_condition;
    sol.diag.gram_near_singular = ginfo.near_singular;
    sol.diag.galerkin_ridge = ginfo.ridge_used;
    sol.diag.galerkin_solve_residual = ginfo.solve_residual;
    sol.diag.galerkin_se = ginfo.sampling_se;

    sol.driver_values = f;
    sol.diag.y_sup_l2 = sup_l2_norm(sol.y, window.begin, window.end);
    sol.diag.Y_l2_l2 = l2_l2_norm(sol.Y, window.begin, window.end);
    return sol;
}

} // namespace detail

AdaptedProcess solve_y_regression(const LinearBSDEProblem& problem, const PathEnsemble& ens,
                                  const RegressionSpec& spec) {
    check_problem(problem, ens);
    SolveDiagnostics diag;
    return regress_y(problem.f, problem.terminal, {0, ens.steps()}, ens, spec, diag);
}

/// M_j = y_j - prefix_j; the corrected-identity residual is
/// max |y_j - (y_T - suffix_j + M_j - M_J)| over the window.
void detail::attach_martingale(TranspositionSolution& sol, const PathEnsemble& ens) {
    const Index dim = sol.y.dim();
    const KnotWindow w = sol.window;
    std::vector<Matrix> m_comps(static_cast<std::size_t>(dim),
                                Matrix::Zero(ens.paths(), ens.knot_count()));
    for (Index k = 0; k < dim; ++k) {
        Matrix& mk = m_comps[static_cast<std::size_t>(k)];
        const Matrix& fk = sol.driver_values.component(k);
        Vector prefix = Vector::Zero(ens.paths());
        for (Index j = w.begin; j <= w.end; ++j) {
            mk.col(j) = sol.y.component(k).col(j) - prefix;
            if (j < w.end) prefix += fk.col(j) * ens.grid().dt(j);
        }
    }
    sol.M = detail::from_values(ens, std::move(m_comps));

    double worst = 0.0;
    for (Index k = 0; k < dim; ++k) {
        const Matrix& yk = sol.y.component(k);
        const Matrix& mk = sol.M.component(k);
        const Matrix& fk = sol.driver_values.component(k);
        Vector suffix = Vector::Zero(ens.paths());
        for (Index j = w.end - 1; j >= w.begin; --j) {
            suffix += fk.col(j) * ens.grid().dt(j);
            const Vector recon = sol.terminal.col(k) - suffix + mk.col(j) - mk.col(w.end);
            worst = std::max(worst, (yk.col(j) - recon).cwiseAbs().maxCoeff());
        }
    }
    sol.diag.corrected_identity_residual = worst;
}

TranspositionSolution solve_linear(const LinearBSDEProblem& problem, const PathEnsemble& ens,
                                   const GalerkinBasis& basis, const RegressionSpec& spec,
                                   std::optional<double> galerkin_ridge) {
    check_problem(problem, ens);
    TranspositionSolution sol = detail::solve_window(problem.f, problem.terminal,
                                                     {0, ens.steps()}, ens, basis, spec,
                                                     galerkin_ridge);
    detail::attach_martingale(sol, ens);
    return sol;
}

AprioriRatio apriori_ratio(const TranspositionSolution& sol, const LinearBSDEProblem& problem) {
    AprioriRatio out;
    const double numerator = sol.diag.y_sup_l2 + sol.diag.Y_l2_l2;
    const double denominator = l2_l1_norm(problem.f) + rms(problem.terminal);
    if (denominator == 0.0) {
        if (numerator == 0.0)
            out.zero_data = true;
        else
            out.inconsistent = true;
        return out;
    }
    out.value = numerator / denominator;
    return out;
}

} // namespace bsde
