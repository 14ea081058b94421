#ifndef BSDELAB_ADAPTED_PROCESS_HPP
#define BSDELAB_ADAPTED_PROCESS_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "bsdelab/ensemble.hpp"
#include "bsdelab/information_state.hpp"

namespace bsde {

class AdaptedProcess;

namespace detail {
/// Internal factory for solver code whose outputs are adapted by
/// construction (fitted slices, Galerkin reconstructions, Euler loops).
/// Not part of the public building surface.
AdaptedProcess from_values(const PathEnsemble& ens, std::vector<Matrix> components);
} // namespace detail

/// Per-path, per-knot values of an R^n valued process tied to one ensemble.
/// Public construction goes through builders that only see an
/// InformationState, which makes discrete adaptedness structural.
class AdaptedProcess {
public:
    AdaptedProcess() = default;

    static AdaptedProcess zeros(const PathEnsemble& ens, Index dim = 1);
    static AdaptedProcess constant(const PathEnsemble& ens, double value);
    static AdaptedProcess constant(const PathEnsemble& ens, const Vector& value);

    bool empty() const { return ens_ == nullptr; }
    Index dim() const { return static_cast<Index>(components_.size()); }
    Index paths() const { return empty() ? 0 : components_.front().rows(); }
    Index knot_count() const { return empty() ? 0 : components_.front().cols(); }
    const PathEnsemble& ensemble() const;

    const Matrix& component(Index k = 0) const { return components_.at(static_cast<std::size_t>(k)); }
    double value(Index path, Index knot, Index k = 0) const { return component(k)(path, knot); }
    Vector value_vector(Index path, Index knot) const;

    bool same_shape(const AdaptedProcess& other) const;

    AdaptedProcess& operator+=(const AdaptedProcess& other);
    AdaptedProcess& operator-=(const AdaptedProcess& other);
    AdaptedProcess& operator*=(double scale);

    friend AdaptedProcess operator+(AdaptedProcess a, const AdaptedProcess& b) { return a += b; }
    friend AdaptedProcess operator-(AdaptedProcess a, const AdaptedProcess& b) { return a -= b; }
    friend AdaptedProcess operator*(double s, AdaptedProcess a) { return a *= s; }
    friend AdaptedProcess operator*(AdaptedProcess a, double s) { return a *= s; }

private:
    const PathEnsemble* ens_ = nullptr;
    std::vector<Matrix> components_; // each N x (J+1)

    friend AdaptedProcess detail::from_values(const PathEnsemble&, std::vector<Matrix>);
};

/// Build a scalar adapted process; `fn` sees only the information state.
AdaptedProcess make_adapted(const PathEnsemble& ens,
                            const std::function<double(const InformationState&)>& fn);

/// Build an R^n valued adapted process.
AdaptedProcess make_adapted(const PathEnsemble& ens, Index dim,
                            const std::function<Vector(const InformationState&)>& fn);

} // namespace bsde

#endif
