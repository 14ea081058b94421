#ifndef BSDELAB_CALCULUS_HPP
#define BSDELAB_CALCULUS_HPP

#include "bsdelab/adapted_process.hpp"

namespace bsde {

// Left-endpoint (Ito, non-anticipating) discretizations throughout.

/// Per-path stochastic integral of v against the primary increments up to
/// knot `up_to`: sum_{j < up_to} v[i][j] dw[i][j]. Returns N x dim.
Matrix ito_integral(const AdaptedProcess& v, Index up_to);

/// Per-path left Riemann sum over knots [from, to): sum u[i][j] dt_j.
Matrix time_integral(const AdaptedProcess& u, Index from, Index to);

/// sqrt( mean_i max_j |x[i][j]|^2 ) over a knot range (inclusive ends).
double sup_l2_norm(const AdaptedProcess& x, Index first_knot, Index last_knot);
double sup_l2_norm(const AdaptedProcess& x);

/// sqrt( mean_i sum_j |x[i][j]|^2 dt_j ) over integrand knots [first, last).
double l2_l2_norm(const AdaptedProcess& x, Index first_knot, Index last_knot);
double l2_l2_norm(const AdaptedProcess& x);

/// sqrt( mean_i ( sum_j |x[i][j]| dt_j )^2 ): the L^2(Omega; L^1) norm.
double l2_l1_norm(const AdaptedProcess& x);

/// sqrt( mean_i |row_i|^2 ) of per-path values (N x dim or a vector).
double rms(const Matrix& path_values);

} // namespace bsde

#endif
