#include "bsdelab/regression.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "bsdelab/calculus.hpp"
#include "bsdelab/pairwise.hpp"

namespace bsde {

namespace {

void append_exponents(std::vector<std::vector<int>>& out, std::vector<int>& current,
                      Index var, int remaining) {
    if (var == static_cast<Index>(current.size())) {
        out.push_back(current);
        return;
    }
    for (int e = 0; e <= remaining; ++e) {
        current[static_cast<std::size_t>(var)] = e;
        append_exponents(out, current, var + 1, remaining - e);
    }
    current[static_cast<std::size_t>(var)] = 0;
}

Matrix raw_features(const PathEnsemble& ens, Index knot) {
    const Index q = InformationState(ens, 0, knot).feature_count();
    Matrix f(ens.paths(), q);
    for (Index i = 0; i < ens.paths(); ++i)
        f.row(i) = InformationState(ens, i, knot).features().transpose();
    return f;
}

/// Symmetric p x p normal matrix and p x n right side, accumulated pairwise
/// over paths.
void accumulate_normal_equations(const Matrix& design, const Matrix& target, Matrix& a,
                                 Matrix& b) {
    const Index n = design.rows();
    const Index p = design.cols();
    a.resize(p, p);
    b.resize(p, target.cols());
    Array buffer(n);
    for (Index r = 0; r < p; ++r) {
        for (Index c = r; c < p; ++c) {
            buffer = design.col(r).array() * design.col(c).array();
            a(r, c) = a(c, r) = pairwise_sum(buffer);
        }
        for (Index c = 0; c < target.cols(); ++c) {
            buffer = design.col(r).array() * target.col(c).array();
            b(r, c) = pairwise_sum(buffer);
        }
    }
}

} // namespace

std::vector<std::vector<int>> monomial_exponents(Index vars, int degree, bool interactions) {
    if (vars < 1) throw std::invalid_argument("at least one variable required");
    if (degree < 0) throw std::invalid_argument("degree must be >= 0");
    std::vector<std::vector<int>> out;
    if (degree == 0) return out;
    if (interactions) {
        std::vector<std::vector<int>> all;
        std::vector<int> current(static_cast<std::size_t>(vars), 0);
        append_exponents(all, current, 0, degree);
        for (auto& e : all) {
            int total = 0;
            for (int v : e) total += v;
            if (total >= 1) out.push_back(e);
        }
    } else {
        for (Index v = 0; v < vars; ++v) {
            for (int d = 1; d <= degree; ++d) {
                std::vector<int> e(static_cast<std::size_t>(vars), 0);
                e[static_cast<std::size_t>(v)] = d;
                out.push_back(e);
            }
        }
    }
    return out;
}

Matrix design_matrix(const PathEnsemble& ens, Index knot, const RegressionSpec& spec) {
    if (spec.degree < 0) throw ConfigError("regression degree must be >= 0");
    if (spec.ridge && *spec.ridge < 0.0) throw ConfigError("ridge must be >= 0");
    const Matrix feats = raw_features(ens, knot);
    const auto expo = monomial_exponents(feats.cols(), spec.degree, spec.interactions);
    const Index n = ens.paths();
    Matrix design(n, 1 + static_cast<Index>(expo.size()));
    design.col(0).setOnes();
    for (std::size_t m = 0; m < expo.size(); ++m) {
        Array col = Array::Ones(n);
        for (Index v = 0; v < feats.cols(); ++v) {
            for (int e = 0; e < expo[m][static_cast<std::size_t>(v)]; ++e)
                col *= feats.col(v).array();
        }
        design.col(1 + static_cast<Index>(m)) = col.matrix();
    }
    if (spec.standardize) {
        for (Index c = 1; c < design.cols(); ++c) {
            const double mu = pairwise_mean(Array(design.col(c).array()));
            Array centered = design.col(c).array() - mu;
            const double sd = std::sqrt(pairwise_mean(Array(centered.square())));
            if (sd <= 1e-14 * (1.0 + std::abs(mu))) {
                design.col(c).setZero(); // degenerate slice column; intercept covers it
            } else {
                design.col(c) = (centered / sd).matrix();
            }
        }
    }
    return design;
}

SliceFit condexp_slice_fit(const Matrix& target, Index knot, const PathEnsemble& ens,
                           const RegressionSpec& spec) {
    if (target.rows() != ens.paths()) throw std::invalid_argument("target path count mismatch");
    if (!target.allFinite()) throw std::invalid_argument("target contains non-finite values");
    if (knot < 0 || knot > ens.steps()) throw std::out_of_range("knot out of bounds");

    const Matrix design = design_matrix(ens, knot, spec);
    const Index n = design.rows();
    const Index p = design.cols();

    Matrix a, b;
    accumulate_normal_equations(design, target, a, b);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double lambda_min = eig.eigenvalues().minCoeff();

    double ridge;
    if (spec.ridge) {
        ridge = *spec.ridge;
        if (ridge == 0.0 && lambda_min <= 1e-12 * std::max(lambda_max, 1e-300))
            throw ConditioningError(
                "rank-deficient regression design at knot " + std::to_string(knot) +
                "; supply a ridge parameter > 0");
    } else {
        ridge = 1e-8 * lambda_max;
    }

    Matrix regularized = a;
    regularized.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(regularized);
    const Matrix coeff = ldlt.solve(b);

    SliceFit fit;
    fit.fitted = design * coeff;
    Array res_sq = Array::Zero(n);
    for (Index c = 0; c < target.cols(); ++c)
        res_sq += (target.col(c) - fit.fitted.col(c)).array().square();
    fit.residual_rms = std::sqrt(pairwise_mean(res_sq));
    fit.fit_se = fit.residual_rms * std::sqrt(static_cast<double>(p) / static_cast<double>(n));
    fit.ridge_used = ridge;
    fit.columns = p;
    return fit;
}

Matrix condexp_slice(const Matrix& target, Index knot, const PathEnsemble& ens,
                     const RegressionSpec& spec) {
    return condexp_slice_fit(target, knot, ens, spec).fitted;
}

AdaptedProcess condexp_process(const Matrix& target, const PathEnsemble& ens,
                               const RegressionSpec& spec) {
    const Index dim = target.cols();
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix(ens.paths(), ens.knot_count()));
    for (Index j = 0; j < ens.steps(); ++j) {
        const Matrix fitted = condexp_slice(target, j, ens, spec);
        for (Index k = 0; k < dim; ++k) comps[static_cast<std::size_t>(k)].col(j) = fitted.col(k);
    }
    for (Index k = 0; k < dim; ++k)
        comps[static_cast<std::size_t>(k)].col(ens.steps()) = target.col(k);
    return detail::from_values(ens, std::move(comps));
}

double martingale_residual(const AdaptedProcess& x, const RegressionSpec& spec) {
    if (x.empty()) throw std::invalid_argument("empty adapted process");
    const PathEnsemble& ens = x.ensemble();
    double worst = 0.0;
    Matrix target(ens.paths(), x.dim());
    // Fit the increment instead of the level: E(X_{j+1} - X_j | knot j) = 0
    // characterizes a discrete martingale even when X_j itself carries
    // history the slice features cannot express. The two forms coincide
    // whenever X_j lies in the feature span.
    for (Index j = 0; j < ens.steps(); ++j) {
        for (Index k = 0; k < x.dim(); ++k)
            target.col(k) = x.component(k).col(j + 1) - x.component(k).col(j);
        const Matrix fitted = condexp_slice(target, j, ens, spec);
        worst = std::max(worst, rms(fitted));
    }
    return worst;
}

} // namespace bsde
