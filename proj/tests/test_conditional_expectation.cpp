#include <doctest.h>

#include <cmath>

#include "bsdelab/calculus.hpp"
#include "bsdelab/pairwise.hpp"
#include "bsdelab/regression.hpp"

using namespace bsde;

TEST_SUITE_BEGIN("conditional_expectation");

namespace {

PathEnsemble make_ens(Index steps, Index paths, std::uint64_t seed,
                      FiltrationModel model = FiltrationModel::natural()) {
    return simulate_ensemble(build_uniform_grid(1.0, steps), model, paths, seed);
}

Matrix column(const Vector& v) {
    Matrix m(v.size(), 1);
    m.col(0) = v;
    return m;
}

} // namespace

TEST_CASE("brownian martingale: fitted values track w(t) and improve with N") {
    // Oracle: E(w(T) | F_t) = w(t) exactly.
    RegressionSpec spec;
    auto l2_error_at = [&](Index paths, Index knot) {
        const PathEnsemble ens = make_ens(16, paths, 31);
        const Matrix target = column(ens.brownian().col(16));
        const Matrix fitted = condexp_slice(target, knot, ens, spec);
        return rms(Matrix(fitted.col(0) - ens.brownian().col(knot)));
    };
    const double coarse = l2_error_at(2000, 8);
    const double fine = l2_error_at(50000, 8);
    CHECK(fine < coarse);
    CHECK(fine <= 0.02);
}

TEST_CASE("constants are reproduced exactly through the intercept") {
    const PathEnsemble ens = make_ens(8, 5000, 3);
    const Matrix target = Matrix::Constant(5000, 1, 3.25);
    RegressionSpec spec;
    spec.ridge = 0.0; // exact reproduction is the zero-ridge claim
    const Matrix fitted = condexp_slice(target, 4, ens, spec);
    CHECK((fitted.col(0).array() - 3.25).abs().maxCoeff() <= 1e-10);
    RegressionSpec auto_ridge;
    const Matrix fitted2 = condexp_slice(target, 4, ens, auto_ridge);
    CHECK((fitted2.col(0).array() - 3.25).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("terminal slice interpolation is exact for in-span targets") {
    const PathEnsemble ens = make_ens(8, 4000, 7);
    const Matrix target = column(ens.brownian().col(8).array().square().matrix());
    RegressionSpec spec;
    spec.degree = 2;
    spec.ridge = 0.0;
    const Matrix fitted = condexp_slice(target, 8, ens, spec);
    CHECK(rms(Matrix(fitted - target)) <= 1e-8);
}

TEST_CASE("rank-deficient design with explicit zero ridge is a conditioning error") {
    // At knot 0 the brownian feature is identically zero, so the monomial
    // columns vanish and only the intercept survives.
    const PathEnsemble ens = make_ens(8, 1000, 9);
    const Matrix target = column(ens.brownian().col(8));
    RegressionSpec spec;
    spec.ridge = 0.0;
    CHECK_THROWS_AS(condexp_slice(target, 0, ens, spec), ConditioningError);
    spec.ridge = 1e-10; // the advised escape hatch
    CHECK_NOTHROW(condexp_slice(target, 0, ens, spec));
}

TEST_CASE("condexp_process returns the target at the terminal knot") {
    const PathEnsemble ens = make_ens(8, 3000, 11);
    const Matrix target = column(ens.brownian().col(8));
    RegressionSpec spec;
    const AdaptedProcess fit = condexp_process(target, ens, spec);
    for (Index i = 0; i < 20; ++i) CHECK(fit.value(i, 8) == target(i, 0));
    // Interior knots track w(t).
    for (Index j = 1; j < 8; ++j) {
        Matrix diff(ens.paths(), 1);
        diff.col(0) = fit.component(0).col(j) - ens.brownian().col(j);
        CHECK(rms(diff) <= 0.06);
    }
    const AdaptedProcess zero = condexp_process(Matrix::Zero(3000, 1), ens, spec);
    CHECK(sup_l2_norm(zero) <= 1e-12);
}

TEST_CASE("revealed initial variable is its own conditional expectation") {
    const PathEnsemble ens = make_ens(8, 20000, 13, FiltrationModel::initial_enlargement(1.0));
    const Matrix target = column(ens.initial_values());
    RegressionSpec spec;
    const AdaptedProcess fit = condexp_process(target, ens, spec);
    for (Index j = 0; j <= 8; ++j) {
        Matrix diff(ens.paths(), 1);
        diff.col(0) = fit.component(0).col(j) - ens.initial_values();
        CHECK(rms(diff) <= 0.02);
    }
}

TEST_CASE("martingale residual separates martingales from drifting processes") {
    const PathEnsemble ens = make_ens(16, 30000, 17);
    RegressionSpec spec;

    const AdaptedProcess w = make_adapted(ens, [](const InformationState& s) { return s.brownian(); });
    CHECK(martingale_residual(w, spec) <= 0.01);

    // Deterministic drift: the fitted increment is dt at every knot.
    const AdaptedProcess t = make_adapted(ens, [](const InformationState& s) { return s.time(); });
    CHECK(martingale_residual(t, spec) == doctest::Approx(1.0 / 16.0).epsilon(1e-6));

    // Compensated square oracle: w(t)^2 - t is a martingale.
    const AdaptedProcess comp = make_adapted(ens, [](const InformationState& s) {
        return s.brownian() * s.brownian() - s.time();
    });
    CHECK(martingale_residual(comp, spec) <= 0.02);
    const double n_small = martingale_residual(comp, spec);
    const PathEnsemble small = make_ens(16, 2000, 17);
    const AdaptedProcess comp_small = make_adapted(small, [](const InformationState& s) {
        return s.brownian() * s.brownian() - s.time();
    });
    CHECK(martingale_residual(comp_small, spec) > n_small); // shrinks with N
}

TEST_CASE("tower property within regression tolerance for nested spans") {
    // Polynomial families in w are population-nested across knots.
    const PathEnsemble ens = make_ens(16, 50000, 19);
    RegressionSpec spec;
    const Matrix target = column(ens.brownian().col(16).array().square().matrix());
    const Index j1 = 12, j0 = 6;
    const Matrix inner = condexp_slice(target, j1, ens, spec);
    const Matrix two_step = condexp_slice(inner, j0, ens, spec);
    const Matrix one_step = condexp_slice(target, j0, ens, spec);
    CHECK(rms(Matrix(two_step - one_step)) <= 0.03);
}

TEST_CASE("projection orthogonality and contraction at zero ridge") {
    const PathEnsemble ens = make_ens(8, 10000, 23);
    RegressionSpec spec;
    spec.ridge = 0.0;
    const Index knot = 5;
    const Matrix target = column(ens.brownian().col(8).array().cube().matrix());
    const Matrix fitted = condexp_slice(target, knot, ens, spec);
    const Matrix design = design_matrix(ens, knot, spec);
    const Vector residual = target.col(0) - fitted.col(0);
    for (Index c = 0; c < design.cols(); ++c) {
        const double inner = pairwise_mean(Array(design.col(c).array() * residual.array()));
        CHECK(std::abs(inner) <= 1e-8 * (1.0 + rms(target)));
    }
    // Exact sample contraction of the orthogonal projection.
    CHECK(rms(fitted) <= rms(target) * (1.0 + 1e-12));
}

TEST_CASE("monomial enumeration with and without interactions") {
    const auto with = monomial_exponents(2, 2, true);
    CHECK(with.size() == 5); // (0,1),(0,2),(1,0),(1,1),(2,0)
    const auto without = monomial_exponents(2, 2, false);
    CHECK(without.size() == 4); // pure powers only
    CHECK_THROWS_AS(monomial_exponents(0, 2, true), std::invalid_argument);
}

TEST_SUITE_END();
