#ifndef BSDELAB_LINEAR_HPP
#define BSDELAB_LINEAR_HPP

#include <optional>

#include "bsdelab/calculus.hpp"
#include "bsdelab/galerkin.hpp"
#include "bsdelab/regression.hpp"

namespace bsde {

/// Linear problem: non-homogeneous adapted term f and a terminal value
/// measurable at the last knot.
struct LinearBSDEProblem {
    AdaptedProcess f;  // pass AdaptedProcess::zeros(...) for the homogeneous case
    Matrix terminal;   // N x n
};

/// A knot range [begin, end]; integrand sums run over [begin, end).
struct KnotWindow {
    Index begin = 0;
    Index end = 0;
};

struct SolveDiagnostics {
    // Galerkin side
    double gram_condition = 0.0;
    bool gram_near_singular = false;
    double galerkin_ridge = 0.0;
    double galerkin_solve_residual = 0.0;
    double galerkin_se = 0.0;
    // Regression side
    double regression_max_residual = 0.0; // max over slices of the raw LS residual rms
    double regression_se = 0.0;           // max over slices of the fitted-surface noise scale
    double regression_ridge_max = 0.0;
    // Structure
    double corrected_identity_residual = 0.0;
    // Norms
    double y_sup_l2 = 0.0;
    double Y_l2_l2 = 0.0;

    /// Error-scale budget used by verification bias tolerances. The Galerkin
    /// sampling noise is deliberately absent: test diffusions drawn inside
    /// the projection span pair exactly with Y in sample, so only the
    /// regression surface noise and the linear-solve residual bias a test.
    double bias_scale() const { return regression_se + galerkin_solve_residual; }
};

/// The solved pair (y, Y) together with the associated martingale M,
/// the driver values along the solution, and solve diagnostics.
struct TranspositionSolution {
    AdaptedProcess y;
    AdaptedProcess Y;
    AdaptedProcess M;             // M_j = y_j - sum_{j' < j} f_j' dt_j'
    AdaptedProcess driver_values; // f along the solution
    Matrix terminal;
    KnotWindow window;
    SolveDiagnostics diag;
};

/// y_j = E( terminal - sum_{j' in [j, J)} f dt | knot j ) via slice regression;
/// the last knot returns the terminal exactly.
AdaptedProcess solve_y_regression(const LinearBSDEProblem& problem, const PathEnsemble& ens,
                                  const RegressionSpec& spec);

/// Full linear solve: y by regression, Y by Galerkin projection, M by the
/// martingale relation. Supply a basis whose cells partition [0, J).
TranspositionSolution solve_linear(const LinearBSDEProblem& problem, const PathEnsemble& ens,
                                   const GalerkinBasis& basis, const RegressionSpec& spec,
                                   std::optional<double> galerkin_ridge = std::nullopt);

struct AprioriRatio {
    std::optional<double> value;
    bool zero_data = false;    // 0/0: degenerate problem, not a failure
    bool inconsistent = false; // nonzero solution from zero data: solver bug flag
};

/// (sup_l2(y) + l2_l2(Y)) / (l2_l1(f) + rms(terminal)).
AprioriRatio apriori_ratio(const TranspositionSolution& sol, const LinearBSDEProblem& problem);

namespace detail {

/// Window solve shared by the full linear solve and the Picard iteration:
/// terminal sits at window.end, the basis cells must partition
/// [window.begin, window.end). M is left empty; callers assemble it globally.
TranspositionSolution solve_window(const AdaptedProcess& f, const Matrix& terminal,
                                   KnotWindow window, const PathEnsemble& ens,
                                   const GalerkinBasis& basis, const RegressionSpec& spec,
                                   std::optional<double> galerkin_ridge);

/// Build M from y and the driver values over the solution window and record
/// the corrected-identity residual.
void attach_martingale(TranspositionSolution& sol, const PathEnsemble& ens);

} // namespace detail

} // namespace bsde

#endif
