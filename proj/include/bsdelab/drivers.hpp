#ifndef BSDELAB_DRIVERS_HPP
#define BSDELAB_DRIVERS_HPP

#include <functional>
#include <map>
#include <string>

#include "bsdelab/adapted_process.hpp"

namespace bsde {

/// The semilinear term f(t, y, Y) with its declared Lipschitz constant.
/// Evaluators are componentwise maps fed with the current information state;
/// y and Y are dim-sized arrays.
class DriverSpec {
public:
    using Evaluator = std::function<void(const InformationState& state, const double* y,
                                         const double* Y, double* out, Index dim)>;

    DriverSpec(std::string name, double lipschitz, Evaluator evaluate)
        : name_(std::move(name)), lipschitz_(lipschitz), evaluate_(std::move(evaluate)) {
        if (lipschitz_ < 0.0) throw ConfigError("Lipschitz constant must be >= 0");
        if (!evaluate_) throw ConfigError("driver evaluator missing");
    }

    const std::string& name() const { return name_; }
    double lipschitz() const { return lipschitz_; }
    void evaluate(const InformationState& state, const double* y, const double* Y, double* out,
                  Index dim) const {
        evaluate_(state, y, Y, out, dim);
    }

private:
    std::string name_;
    double lipschitz_;
    Evaluator evaluate_;
};

DriverSpec make_zero_driver();
/// f = a y + b Y + c componentwise, K = |a| + |b|.
DriverSpec make_affine_driver(double a, double b, double c);
/// f = kappa sin(y) componentwise, K = kappa.
DriverSpec make_lipschitz_sin_driver(double kappa);

/// Registry names: "zero", "affine" (params a, b, c), "lipschitz-sin"
/// (param kappa). Unknown names raise ConfigError naming the offender.
DriverSpec driver_from_registry(const std::string& name,
                                const std::map<std::string, double>& params);

/// Spot-check the declared Lipschitz bound on random argument pairs drawn at
/// random (path, knot) states. Throws DriverError on violation.
void audit_lipschitz(const DriverSpec& driver, const PathEnsemble& ens, Index dim,
                     int samples = 1000, std::uint64_t seed = 0x11ce);

/// Driver values along (y, Y) on knots [0, J); the terminal column is zero
/// (left-endpoint integrands never read it).
AdaptedProcess evaluate_driver(const DriverSpec& driver, const AdaptedProcess& y,
                               const AdaptedProcess& Y);

} // namespace bsde

#endif
