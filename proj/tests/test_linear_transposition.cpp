#include <doctest.h>

#include <cmath>

#include "bsdelab/linear.hpp"
#include "bsdelab/pairwise.hpp"

using namespace bsde;

TEST_SUITE_BEGIN("linear_transposition");

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

TEST_CASE("tensor basis enumeration") {
    const PathEnsemble ens = make_ens(8, 50, 1);

    const GalerkinBasis single = build_tensor_basis(ens, {0}, 0);
    CHECK(single.size() == 1);
    const AdaptedProcess e0 = single.element_process(0);
    for (Index j = 0; j < 8; ++j) CHECK(e0.value(7, j) == 1.0);
    CHECK(e0.value(7, 8) == 0.0); // integrand convention: nothing at the last knot

    const GalerkinBasis indicators = build_tensor_basis(ens, uniform_cells(0, 8, 1), 0);
    CHECK(indicators.size() == 8);
    for (Index k = 0; k < 8; ++k)
        for (Index j = 0; j < 8; ++j)
            CHECK(indicators.element_process(k).value(3, j) == (j == k ? 1.0 : 0.0));

    // Two cells, degree 1: {1, w(t_start)} per cell.
    const GalerkinBasis two = build_tensor_basis(ens, {0, 4}, 1);
    CHECK(two.size() == 4);
    CHECK(two.element_process(0).value(5, 2) == 1.0);
    CHECK(two.element_process(1).value(5, 2) == ens.brownian()(5, 0));
    CHECK(two.element_process(2).value(5, 6) == 1.0);
    CHECK(two.element_process(3).value(5, 6) == ens.brownian()(5, 4));
    CHECK(two.element_process(3).value(5, 2) == 0.0);

    CHECK_THROWS_AS(build_tensor_basis(ens, {0, 4, 4}, 1), ConfigError);
    CHECK_THROWS_AS(build_tensor_basis(ens, {0, 9}, 1), ConfigError);
}

TEST_CASE("gram matrix of deterministic indicator bases") {
    const PathEnsemble ens = make_ens(8, 100, 2);
    const GalerkinBasis indicators = build_tensor_basis(ens, uniform_cells(0, 8, 2), 0);
    const GramInfo info = assemble_gram(indicators);
    CHECK(info.matrix.rows() == 4);
    for (Index k = 0; k < 4; ++k)
        for (Index l = 0; l < 4; ++l)
            CHECK(info.matrix(k, l) == doctest::Approx(k == l ? 0.25 : 0.0));
    CHECK_FALSE(info.near_singular);

    const GalerkinBasis single = build_tensor_basis(ens, {0}, 0);
    const GramInfo one = assemble_gram(single);
    CHECK(one.matrix(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("exact rank deficiency raises the condition warning") {
    // With cell-start sampling the first cell's degree-1 weight is w(0) = 0,
    // an identically zero element, so the Gram matrix is exactly singular.
    const PathEnsemble ens = make_ens(8, 500, 3);
    const GalerkinBasis basis = build_tensor_basis(ens, {0, 4}, 1, 1, StateSampling::CellStart);
    const GramInfo info = assemble_gram(basis);
    CHECK(info.near_singular);
    CHECK(info.condition > 1e12);
    // Explicit zero ridge must refuse; the default ridge handles it.
    LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1), column(ens.brownian().col(8))};
    CHECK_THROWS_AS(solve_Y_galerkin(basis, problem.f, problem.terminal, 0.0), ConditioningError);
    CHECK_NOTHROW(solve_Y_galerkin(basis, problem.f, problem.terminal));
}

TEST_CASE("duality right sides against closed-form moments") {
    const Index n = 40000;
    const PathEnsemble ens = make_ens(16, n, 5);

    // Deterministic terminal, zero f: stochastic integrals have zero mean.
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 16, 4), 1,
                                                   1, StateSampling::PerKnot);
    {
        const Vector r = assemble_rhs(basis, AdaptedProcess::zeros(ens, 1),
                                      Matrix::Constant(n, 1, 2.0));
        for (Index k = 0; k < r.size(); ++k)
            CHECK(std::abs(r(k)) <= 3.0 * 2.0 * std::sqrt(1.0 / static_cast<double>(n)));
    }
    // E[w(T) w(T)] = T against the constant element.
    {
        const GalerkinBasis constant = build_tensor_basis(ens, {0}, 0);
        const Vector r = assemble_rhs(constant, AdaptedProcess::zeros(ens, 1),
                                      column(ens.brownian().col(16)));
        const double se = std::sqrt(2.0 / static_cast<double>(n)); // Var(w_T^2) = 2 T^2
        CHECK(std::abs(r(0) - 1.0) <= 3.0 * se);
    }
    // f = 1, zero terminal, deterministic degree-0 cells: zero-mean integrals.
    {
        const GalerkinBasis cells = build_tensor_basis(ens, uniform_cells(0, 16, 4), 0);
        const Vector r = assemble_rhs(cells, AdaptedProcess::constant(ens, 1.0),
                                      Matrix::Zero(n, 1));
        for (Index k = 0; k < r.size(); ++k)
            CHECK(std::abs(r(k)) <= 3.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("galerkin projection of the oracle problems") {
    const Index n = 20000;
    const PathEnsemble ens = make_ens(32, n, 7);
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 32, 4), 1,
                                                   1, StateSampling::PerKnot);
    // Deterministic terminal: Y vanishes up to coefficient noise (the
    // projection error scales with the terminal's magnitude).
    {
        GalerkinInfo info;
        AdaptedProcess y_m = solve_Y_galerkin(basis, AdaptedProcess::zeros(ens, 1),
                                              Matrix::Constant(n, 1, 5.0), std::nullopt, &info);
        CHECK(l2_l2_norm(y_m) <= 3.0 * info.sampling_se);
        CHECK(l2_l2_norm(y_m) <= 0.05 * 5.0);
    }
    // Martingale representation of w(T): Y = 1.
    {
        GalerkinInfo info;
        AdaptedProcess y_m = solve_Y_galerkin(basis, AdaptedProcess::zeros(ens, 1),
                                              column(ens.brownian().col(32)), std::nullopt, &info);
        AdaptedProcess one = AdaptedProcess::constant(ens, 1.0);
        CHECK(l2_l2_norm(y_m - one) <= 0.08);
        CHECK(info.sampling_se <= 0.08);
        CHECK(info.gram_condition < 1e6);
    }
}

TEST_CASE("independent terminal noise projects to zero (enlarged filtration)") {
    const Index n = 20000;
    const PathEnsemble ens = make_ens(32, n, 9, FiltrationModel::enlarged_brownian());
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 32, 4), 1,
                                                   1, StateSampling::PerKnot);
    AdaptedProcess y_m = solve_Y_galerkin(basis, AdaptedProcess::zeros(ens, 1),
                                          column(ens.aux_brownian().col(32)));
    CHECK(l2_l2_norm(y_m) <= 0.08);
}

TEST_CASE("y regression: constants, the Ito oracle, and the enlarged oracle") {
    const Index n = 20000;
    RegressionSpec reg;
    {
        const PathEnsemble ens = make_ens(16, n, 11);
        LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1), Matrix::Constant(n, 1, -1.5)};
        const AdaptedProcess y = solve_y_regression(problem, ens, reg);
        AdaptedProcess c = AdaptedProcess::constant(ens, -1.5);
        CHECK(sup_l2_norm(y - c) <= 1e-6);
    }
    {
        // f = 1, y_T = w(T)^2: the (T - t) compensator cancels, y = w(t)^2.
        const PathEnsemble ens = make_ens(16, n, 13);
        LinearBSDEProblem problem{AdaptedProcess::constant(ens, 1.0),
                                  column(ens.brownian().col(16).array().square().matrix())};
        const AdaptedProcess y = solve_y_regression(problem, ens, reg);
        const AdaptedProcess w2 = make_adapted(ens, [](const InformationState& s) {
            return s.brownian() * s.brownian();
        });
        CHECK(l2_l2_norm(y - w2) <= 0.05);
    }
    {
        // Enlarged filtration: y_T = w'(T) gives y(t) = w'(t).
        const PathEnsemble ens = make_ens(16, n, 15, FiltrationModel::enlarged_brownian());
        LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1),
                                  column(ens.aux_brownian().col(16))};
        const AdaptedProcess y = solve_y_regression(problem, ens, reg);
        const AdaptedProcess wp = make_adapted(ens, [](const InformationState& s) { return s.aux(); });
        CHECK(sup_l2_norm(y - wp) <= 0.06);
    }
}

TEST_CASE("full linear solve recovers the closed-form pairs") {
    const Index n = 20000;
    const PathEnsemble ens = make_ens(32, n, 17);
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 32, 4), 1,
                                                   1, StateSampling::PerKnot);
    RegressionSpec reg;
    const AdaptedProcess w = make_adapted(ens, [](const InformationState& s) { return s.brownian(); });

    SUBCASE("martingale representation oracle: (w, 1), M = w") {
        LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1), column(ens.brownian().col(32))};
        const TranspositionSolution sol = solve_linear(problem, ens, basis, reg);
        AdaptedProcess one = AdaptedProcess::constant(ens, 1.0);
        CHECK(sup_l2_norm(sol.y - w) <= 0.06);
        CHECK(l2_l2_norm(sol.Y - one) <= 0.08);
        CHECK(sup_l2_norm(sol.M - w) <= 0.06);
        for (Index i = 0; i < 10; ++i) CHECK(sol.y.value(i, 32) == problem.terminal(i, 0));
    }
    SUBCASE("Ito formula oracle: (w^2, 2w)") {
        LinearBSDEProblem problem{AdaptedProcess::constant(ens, 1.0),
                                  column(ens.brownian().col(32).array().square().matrix())};
        const TranspositionSolution sol = solve_linear(problem, ens, basis, reg);
        const AdaptedProcess w2 = make_adapted(ens, [](const InformationState& s) {
            return s.brownian() * s.brownian();
        });
        CHECK(l2_l2_norm(sol.y - w2) / l2_l2_norm(w2) <= 0.08);
        CHECK(l2_l2_norm(sol.Y - 2.0 * w) / l2_l2_norm(2.0 * w) <= 0.10);
        CHECK(sol.diag.corrected_identity_residual <= 1e-10);
    }
    SUBCASE("deterministic problem: (c, 0, c)") {
        LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 1), Matrix::Constant(n, 1, 4.0)};
        const TranspositionSolution sol = solve_linear(problem, ens, basis, reg);
        AdaptedProcess c = AdaptedProcess::constant(ens, 4.0);
        CHECK(sup_l2_norm(sol.y - c) <= 1e-6);
        CHECK(l2_l2_norm(sol.Y) <= 3.0 * sol.diag.galerkin_se);
        CHECK(l2_l2_norm(sol.Y) <= 0.05 * 4.0);
        CHECK(sup_l2_norm(sol.M - c) <= 1e-6);
    }
}

TEST_CASE("solution map is linear in (f, terminal) on a shared ensemble") {
    const Index n = 5000;
    const PathEnsemble ens = make_ens(16, n, 19);
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 16, 4), 1,
                                                   1, StateSampling::PerKnot);
    RegressionSpec reg;
    // Pin the ridges so the regularization is identical across the solves.
    reg.ridge = 1e-7;
    const double gal_ridge = 1e-12;

    LinearBSDEProblem a{AdaptedProcess::constant(ens, 1.0), column(ens.brownian().col(16))};
    LinearBSDEProblem b{make_adapted(ens, [](const InformationState& s) { return 0.5 * s.brownian(); }),
                        column(ens.brownian().col(16).array().square().matrix())};
    LinearBSDEProblem sum{a.f + b.f, a.terminal + b.terminal};

    const TranspositionSolution sa = solve_linear(a, ens, basis, reg, gal_ridge);
    const TranspositionSolution sb = solve_linear(b, ens, basis, reg, gal_ridge);
    const TranspositionSolution ss = solve_linear(sum, ens, basis, reg, gal_ridge);

    CHECK(sup_l2_norm(ss.y - (sa.y + sb.y)) <= 1e-8);
    CHECK(l2_l2_norm(ss.Y - (sa.Y + sb.Y)) <= 1e-8);
}

TEST_CASE("galerkin optimality: the duality holds exactly on basis elements") {
    const Index n = 4000;
    const PathEnsemble ens = make_ens(16, n, 23);
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 16, 4), 1,
                                                   1, StateSampling::PerKnot);
    LinearBSDEProblem problem{AdaptedProcess::constant(ens, 1.0),
                              column(ens.brownian().col(16).array().square().matrix())};
    GalerkinInfo info;
    const AdaptedProcess y_m =
        solve_Y_galerkin(basis, problem.f, problem.terminal, std::nullopt, &info);
    const GramInfo gram = assemble_gram(basis);
    const Vector r = assemble_rhs(basis, problem.f, problem.terminal);
    const Vector lhs = gram.matrix * info.coefficients;
    CHECK((lhs - r).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + r.cwiseAbs().maxCoeff()));
    CHECK(info.solve_residual <= 1e-10);
    // The reconstruction pairs with every element exactly like the right side.
    for (Index k = 0; k < basis.size(); ++k) {
        const AdaptedProcess e_k = basis.element_process(k);
        Array acc = Array::Zero(n);
        for (Index j = 0; j < 16; ++j)
            acc += e_k.component(0).col(j).array() * y_m.component(0).col(j).array() *
                   ens.grid().dt(j);
        CHECK(pairwise_mean(acc) == doctest::Approx(r(k)).epsilon(1e-6));
    }
}

TEST_CASE("a priori ratio diagnostics") {
    const Index n = 3000;
    const PathEnsemble ens = make_ens(16, n, 29);
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 16, 4), 1,
                                                   1, StateSampling::PerKnot);
    RegressionSpec reg;

    LinearBSDEProblem constant{AdaptedProcess::zeros(ens, 1), Matrix::Constant(n, 1, 2.0)};
    const TranspositionSolution sol = solve_linear(constant, ens, basis, reg);
    const AprioriRatio ratio = apriori_ratio(sol, constant);
    REQUIRE(ratio.value.has_value());
    CHECK(*ratio.value == doctest::Approx(1.0).epsilon(0.05));

    LinearBSDEProblem zero{AdaptedProcess::zeros(ens, 1), Matrix::Zero(n, 1)};
    const TranspositionSolution zsol = solve_linear(zero, ens, basis, reg);
    const AprioriRatio zratio = apriori_ratio(zsol, zero);
    CHECK_FALSE(zratio.value.has_value());
    CHECK(zratio.zero_data);
    CHECK_FALSE(zratio.inconsistent);

    // Sweep oracle: ratios bounded by a constant stable under refinement.
    auto sweep_max = [&reg](Index steps, std::uint64_t seed) {
        const PathEnsemble e = make_ens(steps, 2000, seed);
        const GalerkinBasis b = build_tensor_basis(e, uniform_cells(0, steps, 4), 1,
                                                   1, StateSampling::PerKnot);
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const double a0 = 0.2 + static_cast<double>(rep % 5);
            const double c0 = -2.0 + 0.3 * static_cast<double>(rep);
            LinearBSDEProblem p{AdaptedProcess::constant(e, a0),
                                Matrix(c0 * e.brownian().col(steps))};
            const TranspositionSolution s = solve_linear(p, e, b, reg);
            const AprioriRatio r = apriori_ratio(s, p);
            REQUIRE(r.value.has_value());
            worst = std::max(worst, *r.value);
        }
        return worst;
    };
    const double coarse = sweep_max(16, 31);
    const double fine = sweep_max(32, 31);
    CHECK(coarse <= 4.0);
    CHECK(fine <= 4.0);
    CHECK(std::abs(std::log(fine / coarse)) <= std::log(1.5));
}

TEST_CASE("two-dimensional problems decouple componentwise") {
    const Index n = 8000;
    const PathEnsemble ens = make_ens(16, n, 37);
    const GalerkinBasis basis = build_tensor_basis(ens, uniform_cells(0, 16, 4), 1,
                                                   2, StateSampling::PerKnot);
    RegressionSpec reg;
    Matrix terminal(n, 2);
    terminal.col(0) = ens.brownian().col(16);
    terminal.col(1).setConstant(3.0);
    LinearBSDEProblem problem{AdaptedProcess::zeros(ens, 2), terminal};
    const TranspositionSolution sol = solve_linear(problem, ens, basis, reg);
    // Component 0 follows the martingale representation, component 1 is flat.
    Matrix diff0(n, 1), diff1(n, 1);
    diff0.col(0) = sol.y.component(0).col(8) - ens.brownian().col(8);
    diff1.col(0) = sol.y.component(1).col(8).array() - 3.0;
    CHECK(rms(diff0) <= 0.05);
    CHECK(rms(diff1) <= 1e-6);
    Matrix q0(n, 1), q1(n, 1);
    q0.col(0) = sol.Y.component(0).col(8).array() - 1.0;
    q1.col(0) = sol.Y.component(1).col(8);
    CHECK(rms(q0) <= 0.12);
    CHECK(rms(q1) <= 0.12);
}

TEST_SUITE_END();
