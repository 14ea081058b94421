#ifndef BSDELAB_INFORMATION_STATE_HPP
#define BSDELAB_INFORMATION_STATE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bsdelab/ensemble.hpp"
#include "bsdelab/errors.hpp"

namespace bsde {

/// Read-only view of what one path has revealed up to a knot. Builders of
/// adapted processes receive only this object, and every accessor refuses
/// indices beyond the current knot, so anticipation cannot be expressed.
///
/// The deterministic time coordinate is carried separately from the
/// stochastic features: within a fixed knot it is constant across paths.
class InformationState {
public:
    InformationState(const PathEnsemble& ens, Index path, Index knot)
        : ens_(&ens), path_(path), knot_(knot) {}

    Index knot() const { return knot_; }
    double time() const { return ens_->grid().knot(knot_); }
    double horizon() const { return ens_->grid().horizon(); }

    double brownian() const { return ens_->brownian()(path_, knot_); }
    double brownian(Index k) const {
        guard(k);
        return ens_->brownian()(path_, k);
    }

    bool has_auxiliary() const { return ens_->has_auxiliary(); }
    double aux() const { return ens_->aux_brownian()(path_, knot_); }
    double aux(Index k) const {
        guard(k);
        return ens_->aux_brownian()(path_, k);
    }

    bool has_initial() const { return ens_->has_initial(); }
    /// Revealed at t_0 under initial enlargement, hence knot-0 measurable.
    double initial() const { return ens_->initial_values()(path_); }

    /// Stochastic state features at the current knot, in a fixed order:
    /// primary Brownian value, auxiliary value if any, initial value if any.
    Index feature_count() const {
        return 1 + (has_auxiliary() ? 1 : 0) + (has_initial() ? 1 : 0);
    }
    Eigen::VectorXd features() const {
        Eigen::VectorXd f(feature_count());
        Index k = 0;
        f(k++) = brownian();
        if (has_auxiliary()) f(k++) = aux();
        if (has_initial()) f(k++) = initial();
        return f;
    }
    static std::vector<std::string> feature_names(const PathEnsemble& ens) {
        std::vector<std::string> names{"w"};
        if (ens.has_auxiliary()) names.push_back("w_aux");
        if (ens.has_initial()) names.push_back("xi");
        return names;
    }

private:
    void guard(Index k) const {
        if (k < 0 || k > knot_)
            throw AnticipationError("information at knot " + std::to_string(k) +
                                    " requested from knot " + std::to_string(knot_));
    }

    const PathEnsemble* ens_;
    Index path_;
    Index knot_;
};

} // namespace bsde

#endif
