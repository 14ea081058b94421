#ifndef BSDELAB_REGRESSION_HPP
#define BSDELAB_REGRESSION_HPP

#include <optional>
#include <vector>

#include "bsdelab/adapted_process.hpp"

namespace bsde {

/// Least-squares conditional expectation operator: polynomial features of the
/// knot-j information state, intercept always present, optional per-slice
/// standardization, ridge defaulting to 1e-8 times the squared largest design
/// singular value.
struct RegressionSpec {
    int degree = 3;
    std::optional<double> ridge = std::nullopt; // nullopt: automatic rule above
    bool standardize = true;
    bool interactions = true; // cross monomials when several features exist
};

/// Multi-indices over `vars` variables with total degree 1..degree
/// (the intercept is handled separately). Without interactions only pure
/// powers of single variables are produced.
std::vector<std::vector<int>> monomial_exponents(Index vars, int degree, bool interactions);

/// Design matrix for one knot: intercept column followed by the monomial
/// columns, standardized per slice when requested. Zero-variance columns are
/// zeroed out (the intercept absorbs them).
Matrix design_matrix(const PathEnsemble& ens, Index knot, const RegressionSpec& spec);

struct SliceFit {
    Matrix fitted;       // N x n
    double residual_rms; // pooled across components
    double fit_se;       // residual_rms * sqrt(columns / N): fitted-surface noise scale
    double ridge_used;
    Index columns;
};

/// Least-squares fit of per-path targets on knot-j features. The fitted
/// values are knot-j measurable by construction. Throws ConditioningError for
/// a rank-deficient design when ridge is explicitly zero.
SliceFit condexp_slice_fit(const Matrix& target, Index knot, const PathEnsemble& ens,
                           const RegressionSpec& spec);
Matrix condexp_slice(const Matrix& target, Index knot, const PathEnsemble& ens,
                     const RegressionSpec& spec);

/// condexp_slice at every knot; the terminal knot returns the target itself.
AdaptedProcess condexp_process(const Matrix& target, const PathEnsemble& ens,
                               const RegressionSpec& spec);

/// max_j rms( E(X_{j+1} | knot j) - X_j ): near zero iff X is a discrete
/// martingale up to regression error.
double martingale_residual(const AdaptedProcess& x, const RegressionSpec& spec);

} // namespace bsde

#endif
