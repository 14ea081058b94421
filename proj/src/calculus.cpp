#include "bsdelab/calculus.hpp"

#include <cmath>
#include <stdexcept>

#include "bsdelab/pairwise.hpp"

namespace bsde {

namespace {

void check_range(const AdaptedProcess& x, Index first, Index last) {
    if (x.empty()) throw std::invalid_argument("empty adapted process");
    if (first < 0 || last >= x.knot_count() || first > last)
        throw std::out_of_range("knot range out of bounds");
}

} // namespace

Matrix ito_integral(const AdaptedProcess& v, Index up_to) {
    if (v.empty()) throw std::invalid_argument("empty adapted process");
    if (up_to < 0 || up_to >= v.knot_count()) throw std::out_of_range("knot index out of bounds");
    const Matrix& dw = v.ensemble().increments();
    Matrix out(v.paths(), v.dim());
    for (Index k = 0; k < v.dim(); ++k) {
        const Matrix& c = v.component(k);
        for (Index i = 0; i < v.paths(); ++i) {
            double acc = 0.0;
            for (Index j = 0; j < up_to; ++j) acc += c(i, j) * dw(i, j);
            out(i, k) = acc;
        }
    }
    return out;
}

Matrix time_integral(const AdaptedProcess& u, Index from, Index to) {
    if (u.empty()) throw std::invalid_argument("empty adapted process");
    if (from < 0 || to > u.ensemble().steps() || from > to)
        throw std::out_of_range("knot range out of bounds");
    const TimeGrid& grid = u.ensemble().grid();
    Matrix out(u.paths(), u.dim());
    for (Index k = 0; k < u.dim(); ++k) {
        const Matrix& c = u.component(k);
        for (Index i = 0; i < u.paths(); ++i) {
            double acc = 0.0;
            for (Index j = from; j < to; ++j) acc += c(i, j) * grid.dt(j);
            out(i, k) = acc;
        }
    }
    return out;
}

double sup_l2_norm(const AdaptedProcess& x, Index first_knot, Index last_knot) {
    check_range(x, first_knot, last_knot);
    Array per_path = Array::Zero(x.paths());
    for (Index i = 0; i < x.paths(); ++i) {
        double best = 0.0;
        for (Index j = first_knot; j <= last_knot; ++j) {
            double sq = 0.0;
            for (Index k = 0; k < x.dim(); ++k) {
                const double v = x.component(k)(i, j);
                sq += v * v;
            }
            if (sq > best) best = sq;
        }
        per_path(i) = best;
    }
    return std::sqrt(pairwise_mean(per_path));
}

double sup_l2_norm(const AdaptedProcess& x) {
    return sup_l2_norm(x, 0, x.knot_count() - 1);
}

double l2_l2_norm(const AdaptedProcess& x, Index first_knot, Index last_knot) {
    if (x.empty()) throw std::invalid_argument("empty adapted process");
    if (first_knot < 0 || last_knot > x.ensemble().steps() || first_knot > last_knot)
        throw std::out_of_range("knot range out of bounds");
    const TimeGrid& grid = x.ensemble().grid();
    Array per_path = Array::Zero(x.paths());
    for (Index i = 0; i < x.paths(); ++i) {
        double acc = 0.0;
        for (Index j = first_knot; j < last_knot; ++j) {
            double sq = 0.0;
            for (Index k = 0; k < x.dim(); ++k) {
                const double v = x.component(k)(i, j);
                sq += v * v;
            }
            acc += sq * grid.dt(j);
        }
        per_path(i) = acc;
    }
    return std::sqrt(pairwise_mean(per_path));
}

double l2_l2_norm(const AdaptedProcess& x) {
    return l2_l2_norm(x, 0, x.ensemble().steps());
}

double l2_l1_norm(const AdaptedProcess& x) {
    if (x.empty()) throw std::invalid_argument("empty adapted process");
    const TimeGrid& grid = x.ensemble().grid();
    Array per_path = Array::Zero(x.paths());
    for (Index i = 0; i < x.paths(); ++i) {
        double acc = 0.0;
        for (Index j = 0; j < x.ensemble().steps(); ++j) {
            double sq = 0.0;
            for (Index k = 0; k < x.dim(); ++k) {
                const double v = x.component(k)(i, j);
                sq += v * v;
            }
            acc += std::sqrt(sq) * grid.dt(j);
        }
        per_path(i) = acc * acc;
    }
    return std::sqrt(pairwise_mean(per_path));
}

double rms(const Matrix& path_values) {
    if (path_values.rows() == 0) return 0.0;
    Array per_path(path_values.rows());
    for (Index i = 0; i < path_values.rows(); ++i) per_path(i) = path_values.row(i).squaredNorm();
    return std::sqrt(pairwise_mean(per_path));
}

} // namespace bsde
