#include "bsdelab/galerkin.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bsdelab/pairwise.hpp"
#include "bsdelab/regression.hpp"

namespace bsde {

namespace {

/// Raw state feature lookups, in the same order as InformationState::features.
struct FeatureView {
    const Matrix* w = nullptr;
    const Matrix* aux = nullptr;
    const Vector* xi = nullptr;

    explicit FeatureView(const PathEnsemble& ens) {
        w = &ens.brownian();
        if (ens.has_auxiliary()) aux = &ens.aux_brownian();
        if (ens.has_initial()) xi = &ens.initial_values();
    }

    double monomial(Index i, Index j, const std::vector<int>& expo) const {
        if (expo.empty()) return 1.0;
        double v = 1.0;
        std::size_t f = 0;
        for (int e = expo[f]; e > 0; --e) v *= (*w)(i, j);
        ++f;
        if (aux) {
            for (int e = expo[f]; e > 0; --e) v *= (*aux)(i, j);
            ++f;
        }
        if (xi) {
            for (int e = expo[f]; e > 0; --e) v *= (*xi)(i);
        }
        return v;
    }
};

bool is_zero_process(const AdaptedProcess& f) {
    if (f.empty()) return true;
    for (Index k = 0; k < f.dim(); ++k)
        if (!f.component(k).isZero(0.0)) return false;
    return true;
}

} // namespace

GalerkinBasis::GalerkinBasis(const PathEnsemble& ens, std::vector<Index> cell_starts,
                             Index window_end, int state_degree, Index dim,
                             StateSampling sampling)
    : ens_(&ens),
      cell_starts_(std::move(cell_starts)),
      window_end_(window_end),
      state_degree_(state_degree),
      dim_(dim),
      sampling_(sampling) {
    if (cell_starts_.empty()) throw ConfigError("basis needs at least one cell");
    if (state_degree_ < 0) throw ConfigError("state degree must be >= 0");
    if (dim_ < 1) throw ConfigError("dimension must be >= 1");
    if (window_end_ > ens.steps() || cell_starts_.front() < 0 ||
        cell_starts_.back() >= window_end_)
        throw ConfigError("basis cells must partition a knot range inside [0, J)");
    for (std::size_t c = 0; c + 1 < cell_starts_.size(); ++c)
        if (cell_starts_[c + 1] <= cell_starts_[c])
            throw ConfigError("basis cells must be nonempty and increasing");

    const Index q = InformationState(ens, 0, 0).feature_count();
    monomials_.emplace_back(); // the constant
    for (auto& e : monomial_exponents(q, state_degree_, true)) monomials_.push_back(std::move(e));

    elements_.reserve(static_cast<std::size_t>(cell_count() * dim_) * monomials_.size());
    for (Index c = 0; c < cell_count(); ++c)
        for (Index d = 0; d < dim_; ++d)
            for (const auto& expo : monomials_) elements_.push_back(Element{c, d, expo});
}

double GalerkinBasis::element_value(Index k, Index path, Index knot) const {
    const Element& e = element(k);
    if (knot < cell_begin(e.cell) || knot >= cell_end(e.cell)) return 0.0;
    const Index state_knot = sampling_ == StateSampling::CellStart ? cell_begin(e.cell) : knot;
    return FeatureView(*ens_).monomial(path, state_knot, e.exponents);
}

AdaptedProcess GalerkinBasis::element_process(Index k) const {
    const Element& e = element(k);
    std::vector<Matrix> comps(static_cast<std::size_t>(dim_),
                              Matrix::Zero(ens_->paths(), ens_->knot_count()));
    Matrix& target = comps[static_cast<std::size_t>(e.component)];
    const FeatureView view(*ens_);
    for (Index j = cell_begin(e.cell); j < cell_end(e.cell); ++j) {
        const Index state_knot = sampling_ == StateSampling::CellStart ? cell_begin(e.cell) : j;
        for (Index i = 0; i < ens_->paths(); ++i)
            target(i, j) = view.monomial(i, state_knot, e.exponents);
    }
    return detail::from_values(*ens_, std::move(comps));
}

std::vector<Index> uniform_cells(Index begin, Index end, Index cell_knots) {
    if (cell_knots < 1) throw ConfigError("cell size must be >= 1 knots");
    if (begin < 0 || end <= begin) throw ConfigError("empty knot range for basis cells");
    std::vector<Index> starts;
    for (Index s = begin; s < end; s += cell_knots) starts.push_back(s);
    return starts;
}

GalerkinBasis build_tensor_basis(const PathEnsemble& ens, const std::vector<Index>& cell_starts,
                                 int state_degree, Index dim, StateSampling sampling) {
    return GalerkinBasis(ens, cell_starts, ens.steps(), state_degree, dim, sampling);
}

GalerkinBasis build_tensor_basis(const PathEnsemble& ens, const BasisSpec& spec, Index dim) {
    return GalerkinBasis(ens, uniform_cells(0, ens.steps(), spec.cell_knots), ens.steps(),
                         spec.state_degree, dim, spec.sampling);
}

GramInfo assemble_gram(const GalerkinBasis& basis) {
    const PathEnsemble& ens = basis.ensemble();
    const Index m = basis.size();
    const Index n = ens.paths();
    const TimeGrid& grid = ens.grid();
    const FeatureView view(ens);

    GramInfo info;
    info.matrix = Matrix::Zero(m, m);
    Array buffer(n);

    for (Index k = 0; k < m; ++k) {
        const auto& ek = basis.element(k);
        for (Index l = k; l < m; ++l) {
            const auto& el = basis.element(l);
            if (ek.cell != el.cell || ek.component != el.component) continue;
            const Index a = basis.cell_begin(ek.cell);
            const Index b = basis.cell_end(ek.cell);
            if (basis.sampling() == StateSampling::CellStart) {
                double cell_time = 0.0;
                for (Index j = a; j < b; ++j) cell_time += grid.dt(j);
                for (Index i = 0; i < n; ++i)
                    buffer(i) = view.monomial(i, a, ek.exponents) *
                                view.monomial(i, a, el.exponents) * cell_time;
            } else {
                buffer.setZero();
                for (Index j = a; j < b; ++j) {
                    const double dt = grid.dt(j);
                    for (Index i = 0; i < n; ++i)
                        buffer(i) += view.monomial(i, j, ek.exponents) *
                                     view.monomial(i, j, el.exponents) * dt;
                }
            }
            info.matrix(k, l) = info.matrix(l, k) = pairwise_mean(buffer);
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(info.matrix);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double lambda_min = eig.eigenvalues().minCoeff();
    info.condition = lambda_min > 0.0 ? lambda_max / lambda_min
                                      : std::numeric_limits<double>::infinity();
    info.near_singular = !(lambda_min > 1e-12 * std::max(lambda_max, 1e-300));
    return info;
}

Vector assemble_rhs(const GalerkinBasis& basis, const AdaptedProcess& f, const Matrix& terminal) {
    const PathEnsemble& ens = basis.ensemble();
    const Index n = ens.paths();
    const TimeGrid& grid = ens.grid();
    const Matrix& dw = ens.increments();
    const FeatureView view(ens);
    const bool with_f = !is_zero_process(f);
    if (terminal.rows() != n || terminal.cols() != basis.dim())
        throw std::invalid_argument("terminal shape mismatch");
    if (with_f && (&f.ensemble() != &ens || f.dim() != basis.dim()))
        throw std::invalid_argument("non-homogeneous term shape mismatch");

    // Suffix time integrals of f from each cell boundary to the window end,
    // so the constant tail of every stochastic integral is a single product.
    const Index cells = basis.cell_count();
    std::vector<Matrix> f_suffix; // per component: N x (cells + 1)
    if (with_f) {
        f_suffix.assign(static_cast<std::size_t>(basis.dim()), Matrix::Zero(n, cells + 1));
        for (Index d = 0; d < basis.dim(); ++d) {
            Matrix& sfx = f_suffix[static_cast<std::size_t>(d)];
            const Matrix& fd = f.component(d);
            for (Index c = cells - 1; c >= 0; --c) {
                sfx.col(c) = sfx.col(c + 1);
                for (Index j = basis.cell_begin(c); j < basis.cell_end(c); ++j)
                    sfx.col(c) += fd.col(j) * grid.dt(j);
            }
        }
    }

    Vector r(basis.size());
    Array z(n), acc(n), psi(n);
    for (Index k = 0; k < basis.size(); ++k) {
        const auto& e = basis.element(k);
        const Index a = basis.cell_begin(e.cell);
        const Index b = basis.cell_end(e.cell);
        const Matrix* fd = with_f ? &f.component(e.component) : nullptr;
        z.setZero();
        acc.setZero();
        for (Index j = a; j < b; ++j) {
            if (with_f) acc -= z * fd->col(j).array() * grid.dt(j);
            const Index state_knot = basis.sampling() == StateSampling::CellStart ? a : j;
            for (Index i = 0; i < n; ++i) psi(i) = view.monomial(i, state_knot, e.exponents);
            z += psi * dw.col(j).array();
        }
        if (with_f)
            acc -= z * f_suffix[static_cast<std::size_t>(e.component)].col(e.cell + 1).array();
        acc += z * terminal.col(e.component).array();
        r(k) = pairwise_mean(acc);
    }
    return r;
}

AdaptedProcess solve_Y_galerkin(const GalerkinBasis& basis, const AdaptedProcess& f,
                                const Matrix& terminal, std::optional<double> ridge,
                                GalerkinInfo* info) {
    const PathEnsemble& ens = basis.ensemble();
    const Index n = ens.paths();
    const Index m = basis.size();
    const TimeGrid& grid = ens.grid();
    const FeatureView view(ens);

    GramInfo gram = assemble_gram(basis);
    const Vector r = assemble_rhs(basis, f, terminal);

    double lambda;
    if (ridge) {
        lambda = *ridge;
        if (lambda < 0.0) throw ConfigError("ridge must be >= 0");
        if (lambda == 0.0 && gram.near_singular)
            throw ConditioningError(
                "numerically singular Gram system; supply a ridge parameter > 0");
    } else {
        lambda = 1e-10 * gram.matrix.trace() / static_cast<double>(m);
    }

    Matrix regularized = gram.matrix;
    regularized.diagonal().array() += lambda;
    Eigen::LDLT<Matrix> ldlt(regularized);
    const Vector coeff = ldlt.solve(r);

    std::vector<Matrix> comps(static_cast<std::size_t>(basis.dim()),
                              Matrix::Zero(n, ens.knot_count()));
    for (Index k = 0; k < m; ++k) {
        const auto& e = basis.element(k);
        if (coeff(k) == 0.0) continue;
        Matrix& target = comps[static_cast<std::size_t>(e.component)];
        for (Index j = basis.cell_begin(e.cell); j < basis.cell_end(e.cell); ++j) {
            const Index state_knot =
                basis.sampling() == StateSampling::CellStart ? basis.cell_begin(e.cell) : j;
            for (Index i = 0; i < n; ++i)
                target(i, j) += coeff(k) * view.monomial(i, state_knot, e.exponents);
        }
    }
    AdaptedProcess y_process = detail::from_values(ens, std::move(comps));

    if (info) {
        info->gram_condition = gram.condition;
        info->near_singular = gram.near_singular;
        info->ridge_used = lambda;
        info->solve_residual = (regularized * coeff - r).norm();
        info->coefficients = coeff;

        // Monte Carlo error estimate of the projection: per (cell, component)
        // block, tr(G_block^-1 Cov(rho)) / N with rho the per-path residual of
        // the moment equations evaluated at the solved coefficients.
        const bool with_f = !is_zero_process(f);
        const Matrix& dw = ens.increments();
        double se_sq = 0.0;
        std::vector<Index> block; // element indices of the current block
        for (Index c = 0; c < basis.cell_count(); ++c) {
            for (Index d = 0; d < basis.dim(); ++d) {
                block.clear();
                for (Index k = 0; k < m; ++k)
                    if (basis.element(k).cell == c && basis.element(k).component == d)
                        block.push_back(k);
                const Index p = static_cast<Index>(block.size());
                if (p == 0) continue;
                Matrix rho(n, p);
                const Matrix* fd = with_f ? &f.component(d) : nullptr;
                const Matrix& ym = y_process.component(d);
                for (Index t = 0; t < p; ++t) {
                    const auto& e = basis.element(block[static_cast<std::size_t>(t)]);
                    Array z = Array::Zero(n), acc = Array::Zero(n), psi(n);
                    for (Index j = basis.cell_begin(c); j < basis.cell_end(c); ++j) {
                        const Index state_knot =
                            basis.sampling() == StateSampling::CellStart ? basis.cell_begin(c) : j;
                        for (Index i = 0; i < n; ++i)
                            psi(i) = view.monomial(i, state_knot, e.exponents);
                        if (with_f) acc -= z * fd->col(j).array() * grid.dt(j);
                        acc -= psi * ym.col(j).array() * grid.dt(j); // Gram part times c
                        z += psi * dw.col(j).array();
                    }
                    // constant tail of Z against f and the terminal pairing
                    if (with_f) {
                        Array tail = Array::Zero(n);
                        for (Index j = basis.cell_end(c); j < basis.window_end(); ++j)
                            tail += fd->col(j).array() * grid.dt(j);
                        acc -= z * tail;
                    }
                    acc += z * terminal.col(d).array();
                    rho.col(t) = acc.matrix();
                }
                Vector mean_rho(p);
                for (Index t = 0; t < p; ++t) mean_rho(t) = pairwise_mean(Array(rho.col(t).array()));
                Matrix cov(p, p);
                Array buf(n);
                for (Index s = 0; s < p; ++s)
                    for (Index t = s; t < p; ++t) {
                        buf = (rho.col(s).array() - mean_rho(s)) *
                              (rho.col(t).array() - mean_rho(t));
                        cov(s, t) = cov(t, s) = pairwise_mean(buf);
                    }
                Matrix g_block(p, p);
                for (Index s = 0; s < p; ++s)
                    for (Index t = 0; t < p; ++t)
                        g_block(s, t) =
                            gram.matrix(block[static_cast<std::size_t>(s)],
                                        block[static_cast<std::size_t>(t)]);
                g_block.diagonal().array() += lambda + 1e-300;
                se_sq += (g_block.ldlt().solve(cov)).trace() / static_cast<double>(n);
            }
        }
        info->sampling_se = std::sqrt(std::max(0.0, se_sq));
    }
    return y_process;
}

} // namespace bsde
