#include <doctest.h>

#include <cmath>

#include "bsdelab/calculus.hpp"
#include "bsdelab/pairwise.hpp"
#include "bsdelab/rng.hpp"

using namespace bsde;

TEST_SUITE_BEGIN("stochastic_core");

TEST_CASE("uniform grid knots") {
    const TimeGrid grid = build_uniform_grid(1.0, 4);
    CHECK(grid.knot_count() == 5);
    CHECK(grid.knot(0) == doctest::Approx(0.0));
    CHECK(grid.knot(1) == doctest::Approx(0.25));
    CHECK(grid.knot(4) == doctest::Approx(1.0));

    const TimeGrid single = build_uniform_grid(2.0, 1);
    CHECK(single.knot_count() == 2);
    CHECK(single.knot(1) == doctest::Approx(2.0));

    CHECK_THROWS_AS(build_uniform_grid(1.0, 0), ConfigError);
    CHECK_THROWS_AS(build_uniform_grid(-1.0, 4), ConfigError);
    CHECK_THROWS_AS(build_uniform_grid(0.0, 4), ConfigError);
}

TEST_CASE("seeded determinism") {
    const TimeGrid grid = build_uniform_grid(1.0, 16);
    const PathEnsemble a = simulate_ensemble(grid, FiltrationModel::natural(), 500, 42);
    const PathEnsemble b = simulate_ensemble(grid, FiltrationModel::natural(), 500, 42);
    CHECK(ensembles_equal(a, b));
    CHECK(a.increments() == b.increments());

    const PathEnsemble c = simulate_ensemble(grid, FiltrationModel::natural(), 500, 43);
    CHECK_FALSE(ensembles_equal(a, c));
}

TEST_CASE("gaussian increment moments") {
    const TimeGrid grid = build_uniform_grid(1.0, 8);
    const Index n = 40000;
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::natural(), n, 7);
    for (Index j : {Index(0), Index(3), Index(7)}) {
        const Array col = ens.increments().col(j).array();
        const double dt = grid.dt(j);
        const double mean = pairwise_mean(col);
        const double var = pairwise_mean(Array((col - mean).square()));
        const double se_mean = std::sqrt(dt / static_cast<double>(n));
        const double se_var = dt * std::sqrt(2.0 / static_cast<double>(n));
        CHECK(std::abs(mean) <= 4.0 * se_mean);
        CHECK(std::abs(var - dt) <= 4.0 * se_var);
    }
}

TEST_CASE("model contracts for the noise channels") {
    const TimeGrid grid = build_uniform_grid(1.0, 4);
    const PathEnsemble natural = simulate_ensemble(grid, FiltrationModel::natural(), 10, 1);
    CHECK_FALSE(natural.has_auxiliary());
    CHECK_FALSE(natural.has_initial());
    CHECK_THROWS_AS(natural.aux_increments(), ConfigError);
    CHECK_THROWS_AS(natural.initial_values(), ConfigError);

    const PathEnsemble enlarged =
        simulate_ensemble(grid, FiltrationModel::enlarged_brownian(), 10, 1);
    CHECK(enlarged.has_auxiliary());
    CHECK_FALSE(enlarged.has_initial());

    const PathEnsemble initial =
        simulate_ensemble(grid, FiltrationModel::initial_enlargement(2.0), 10, 1);
    CHECK(initial.has_initial());
    CHECK(initial.initial_values().size() == 10);
}

TEST_CASE("auxiliary noise independent of the primary channel") {
    const TimeGrid grid = build_uniform_grid(1.0, 8);
    const Index n = 40000;
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::enlarged_brownian(), n, 99);
    for (Index j = 0; j < grid.steps(); ++j) {
        const Array a = ens.increments().col(j).array();
        const Array b = ens.aux_increments().col(j).array();
        const double ma = pairwise_mean(a);
        const double mb = pairwise_mean(b);
        Array prod = (a - ma) * (b - mb);
        const double cov = pairwise_mean(prod);
        const double sa = std::sqrt(pairwise_mean(Array((a - ma).square())));
        const double sb = std::sqrt(pairwise_mean(Array((b - mb).square())));
        const double corr = cov / (sa * sb);
        CHECK(std::abs(corr) <= 4.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("anticipation is rejected by the state accessors") {
    const TimeGrid grid = build_uniform_grid(1.0, 8);
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::natural(), 16, 3);
    // A peek one knot ahead must throw, so an anticipating builder cannot run.
    CHECK_THROWS_AS(make_adapted(ens,
                                 [](const InformationState& s) {
                                     return s.knot() < 8 ? s.brownian(s.knot() + 1) : 0.0;
                                 }),
                    AnticipationError);
    // Within the information set everything is readable.
    const AdaptedProcess ok = make_adapted(ens, [](const InformationState& s) {
        return s.knot() > 0 ? s.brownian(s.knot() - 1) : 0.0;
    });
    CHECK(ok.value(3, 4) == ens.brownian()(3, 3));
}

TEST_CASE("ito integral telescopes for constant integrands") {
    const TimeGrid grid = build_uniform_grid(1.0, 16);
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::natural(), 200, 5);
    const AdaptedProcess one = AdaptedProcess::constant(ens, 1.0);
    const Matrix full = ito_integral(one, 16);
    for (Index i = 0; i < 200; ++i) CHECK(full(i, 0) == doctest::Approx(ens.brownian()(i, 16)));
    const AdaptedProcess zero = AdaptedProcess::zeros(ens, 1);
    CHECK(ito_integral(zero, 16).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ito isometry for the brownian integrand") {
    // Oracle: E[(int w dw)^2] = int t dt = T^2/2; on the discrete grid
    // sum t_j dt_j = T^2 (J-1) / (2J).
    const Index j_steps = 200;
    const Index n = 20000;
    const TimeGrid grid = build_uniform_grid(1.0, j_steps);
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::natural(), n, 11);
    const AdaptedProcess w = make_adapted(ens, [](const InformationState& s) { return s.brownian(); });
    const Matrix integral = ito_integral(w, j_steps);

    double discrete_moment = 0.0; // sum of t_j dt_j
    for (Index j = 0; j < j_steps; ++j) discrete_moment += grid.knot(j) * grid.dt(j);

    const Array x = integral.col(0).array();
    const double mean = pairwise_mean(x);
    const double var = pairwise_mean(Array((x - mean).square()));
    // Var of the sample variance via the empirical fourth moment.
    const double m4 = pairwise_mean(Array((x - mean).square().square()));
    const double se_var = std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(n));
    CHECK(std::abs(mean) <= 4.0 * std::sqrt(var / static_cast<double>(n)));
    CHECK(std::abs(var - discrete_moment) <= 4.0 * se_var);

    // Statistical Ito isometry against the squared l2_l2 norm.
    const double norm_sq = l2_l2_norm(w) * l2_l2_norm(w);
    CHECK(std::abs(var - norm_sq) <= 4.0 * se_var);
}

TEST_CASE("time integral left rule") {
    const TimeGrid grid = build_uniform_grid(1.0, 4);
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::natural(), 10, 1);
    const AdaptedProcess one = AdaptedProcess::constant(ens, 1.0);
    const Matrix t_full = time_integral(one, 0, 4);
    CHECK(t_full(0, 0) == doctest::Approx(1.0));
    const AdaptedProcess t_proc = make_adapted(ens, [](const InformationState& s) { return s.time(); });
    const Matrix left_sum = time_integral(t_proc, 0, 4);
    CHECK(left_sum(3, 0) == doctest::Approx(0.375)); // (0 + .25 + .5 + .75) / 4
    CHECK_THROWS_AS(time_integral(one, 3, 9), std::out_of_range);
}

TEST_CASE("norms of constant and brownian processes") {
    const TimeGrid grid = build_uniform_grid(1.0, 256);
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::natural(), 20000, 17);
    const AdaptedProcess c = AdaptedProcess::constant(ens, -2.5);
    CHECK(sup_l2_norm(c) == doctest::Approx(2.5));
    CHECK(l2_l2_norm(c) == doctest::Approx(2.5 * std::sqrt(1.0)));
    CHECK(l2_l1_norm(c) == doctest::Approx(2.5));

    // A horizon different from 1 separates the two norms: |c| vs |c| sqrt(T).
    const PathEnsemble long_ens =
        simulate_ensemble(build_uniform_grid(4.0, 8), FiltrationModel::natural(), 50, 18);
    const AdaptedProcess c4 = AdaptedProcess::constant(long_ens, -2.5);
    CHECK(sup_l2_norm(c4) == doctest::Approx(2.5));
    CHECK(l2_l2_norm(c4) == doctest::Approx(2.5 * 2.0));
    const AdaptedProcess zero = AdaptedProcess::zeros(ens, 3);
    CHECK(sup_l2_norm(zero) == 0.0);
    CHECK(l2_l2_norm(zero) == 0.0);

    // Oracle: l2_l2(w)^2 -> int_0^1 t dt = 1/2 with discrete value (J-1)/(2J).
    const AdaptedProcess w = make_adapted(ens, [](const InformationState& s) { return s.brownian(); });
    double discrete = 0.0;
    for (Index j = 0; j < 256; ++j) discrete += grid.knot(j) * grid.dt(j);
    const double norm = l2_l2_norm(w);
    CHECK(norm * norm == doctest::Approx(discrete).epsilon(0.05));
    CHECK(norm == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
}

TEST_CASE("pairwise summation agrees with compensated reference") {
    Array x(1000);
    for (Index i = 0; i < x.size(); ++i)
        x(i) = std::sin(static_cast<double>(i)) * 1e-3 + (i % 7 == 0 ? 1e7 : -1.0);
    // Kahan reference
    double sum = 0.0, carry = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double y = x(i) - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    CHECK(pairwise_sum(x) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("normal inverse cdf hits reference quantiles") {
    CHECK(rng::normal_inv_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rng::normal_inv_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
    CHECK(rng::normal_inv_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-9));
    CHECK(rng::normal_inv_cdf(0.84134474606854293) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rng::normal_inv_cdf(1e-10) == doctest::Approx(-6.3613409024040557).epsilon(1e-6));
}

TEST_CASE("initial enlargement reveals the variable at knot zero") {
    const TimeGrid grid = build_uniform_grid(1.0, 4);
    const PathEnsemble ens = simulate_ensemble(grid, FiltrationModel::initial_enlargement(1.5), 5000, 23);
    const InformationState s(ens, 7, 0);
    CHECK(s.has_initial());
    CHECK(s.initial() == ens.initial_values()(7));
    CHECK(s.feature_count() == 2);
    const Array xi = ens.initial_values().array();
    const double sd = std::sqrt(pairwise_mean(Array((xi - pairwise_mean(xi)).square())));
    CHECK(sd == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("coarsening preserves shared-knot brownian values") {
    const TimeGrid grid = build_uniform_grid(1.0, 32);
    const PathEnsemble fine = simulate_ensemble(grid, FiltrationModel::natural(), 50, 13);
    const PathEnsemble coarse = coarsen_ensemble(fine, 4);
    CHECK(coarse.steps() == 8);
    for (Index i = 0; i < 50; ++i)
        for (Index j = 0; j <= 8; ++j)
            CHECK(coarse.brownian()(i, j) == doctest::Approx(fine.brownian()(i, j * 4)).epsilon(1e-14));
}

TEST_SUITE_END();
