#include "bsdelab/drivers.hpp"

#include <cmath>

#include "bsdelab/rng.hpp"

namespace bsde {

DriverSpec make_zero_driver() {
    return DriverSpec("zero", 0.0,
                      [](const InformationState&, const double*, const double*, double* out,
                         Index dim) {
                          for (Index k = 0; k < dim; ++k) out[k] = 0.0;
                      });
}

DriverSpec make_affine_driver(double a, double b, double c) {
    return DriverSpec("affine", std::abs(a) + std::abs(b),
                      [a, b, c](const InformationState&, const double* y, const double* Y,
                                double* out, Index dim) {
                          for (Index k = 0; k < dim; ++k) out[k] = a * y[k] + b * Y[k] + c;
                      });
}

DriverSpec make_lipschitz_sin_driver(double kappa) {
    if (kappa < 0.0) throw ConfigError("kappa must be >= 0");
    return DriverSpec("lipschitz-sin", kappa,
                      [kappa](const InformationState&, const double* y, const double*,
                              double* out, Index dim) {
                          for (Index k = 0; k < dim; ++k) out[k] = kappa * std::sin(y[k]);
                      });
}

DriverSpec driver_from_registry(const std::string& name,
                                const std::map<std::string, double>& params) {
    auto get = [&params](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (name == "zero") return make_zero_driver();
    if (name == "affine") return make_affine_driver(get("a", 0.0), get("b", 0.0), get("c", 0.0));
    if (name == "lipschitz-sin") return make_lipschitz_sin_driver(get("kappa", 0.5));
    throw ConfigError("unknown driver name: " + name);
}

void audit_lipschitz(const DriverSpec& driver, const PathEnsemble& ens, Index dim, int samples,
                     std::uint64_t seed) {
    std::vector<double> y1(static_cast<std::size_t>(dim)), y2(y1.size()), q1(y1.size()),
        q2(y1.size()), f1(y1.size()), f2(y1.size());
    std::uint64_t step = 0;
    auto draw = [&](double scale) {
        return scale * (2.0 * rng::uniform(seed, rng::kChannelScratch, 7, step++) - 1.0);
    };
    const double slack = 1e-9;
    for (int s = 0; s < samples; ++s) {
        const Index i = static_cast<Index>(rng::key(seed, rng::kChannelScratch + 1, 0, step++) %
                                           static_cast<std::uint64_t>(ens.paths()));
        const Index j = static_cast<Index>(rng::key(seed, rng::kChannelScratch + 1, 1, step++) %
                                           static_cast<std::uint64_t>(ens.steps()));
        InformationState state(ens, i, j);
        double dy = 0.0, dq = 0.0;
        for (Index k = 0; k < dim; ++k) {
            auto ku = static_cast<std::size_t>(k);
            y1[ku] = draw(3.0);
            y2[ku] = draw(3.0);
            q1[ku] = draw(3.0);
            q2[ku] = draw(3.0);
            dy += (y1[ku] - y2[ku]) * (y1[ku] - y2[ku]);
            dq += (q1[ku] - q2[ku]) * (q1[ku] - q2[ku]);
        }
        driver.evaluate(state, y1.data(), q1.data(), f1.data(), dim);
        driver.evaluate(state, y2.data(), q2.data(), f2.data(), dim);
        double df = 0.0;
        for (Index k = 0; k < dim; ++k) {
            auto ku = static_cast<std::size_t>(k);
            df += (f1[ku] - f2[ku]) * (f1[ku] - f2[ku]);
        }
        const double bound = driver.lipschitz() * (std::sqrt(dy) + std::sqrt(dq));
        if (std::sqrt(df) > bound * (1.0 + slack) + 1e-12)
            throw DriverError("driver '" + driver.name() +
                              "' violates its declared Lipschitz bound on sampled arguments");
    }
}

AdaptedProcess evaluate_driver(const DriverSpec& driver, const AdaptedProcess& y,
                               const AdaptedProcess& Y) {
    if (!y.same_shape(Y)) throw std::invalid_argument("y/Y shape mismatch");
    const PathEnsemble& ens = y.ensemble();
    const Index dim = y.dim();
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix::Zero(ens.paths(), ens.knot_count()));
    std::vector<double> yv(static_cast<std::size_t>(dim)), qv(yv.size()), fv(yv.size());
    for (Index j = 0; j < ens.steps(); ++j) {
        for (Index i = 0; i < ens.paths(); ++i) {
            for (Index k = 0; k < dim; ++k) {
                yv[static_cast<std::size_t>(k)] = y.component(k)(i, j);
                qv[static_cast<std::size_t>(k)] = Y.component(k)(i, j);
            }
            InformationState state(ens, i, j);
            driver.evaluate(state, yv.data(), qv.data(), fv.data(), dim);
            for (Index k = 0; k < dim; ++k)
                comps[static_cast<std::size_t>(k)](i, j) = fv[static_cast<std::size_t>(k)];
        }
    }
    return detail::from_values(ens, std::move(comps));
}

} // namespace bsde
