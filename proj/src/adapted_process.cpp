#include "bsdelab/adapted_process.hpp"

#include <stdexcept>

namespace bsde {

namespace detail {
AdaptedProcess from_values(const PathEnsemble& ens, std::vector<Matrix> components) {
    if (components.empty()) throw std::invalid_argument("process needs at least one component");
    for (const Matrix& c : components) {
        if (c.rows() != ens.paths() || c.cols() != ens.knot_count())
            throw std::invalid_argument("component shape does not match the ensemble");
    }
    AdaptedProcess p;
    p.ens_ = &ens;
    p.components_ = std::move(components);
    return p;
}
} // namespace detail

AdaptedProcess AdaptedProcess::zeros(const PathEnsemble& ens, Index dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix::Zero(ens.paths(), ens.knot_count()));
    return detail::from_values(ens, std::move(comps));
}

AdaptedProcess AdaptedProcess::constant(const PathEnsemble& ens, double value) {
    std::vector<Matrix> comps{Matrix::Constant(ens.paths(), ens.knot_count(), value)};
    return detail::from_values(ens, std::move(comps));
}

AdaptedProcess AdaptedProcess::constant(const PathEnsemble& ens, const Vector& value) {
    std::vector<Matrix> comps;
    comps.reserve(static_cast<std::size_t>(value.size()));
    for (Index k = 0; k < value.size(); ++k)
        comps.push_back(Matrix::Constant(ens.paths(), ens.knot_count(), value(k)));
    return detail::from_values(ens, std::move(comps));
}

const PathEnsemble& AdaptedProcess::ensemble() const {
    if (!ens_) throw std::logic_error("empty adapted process");
    return *ens_;
}

Vector AdaptedProcess::value_vector(Index path, Index knot) const {
    Vector v(dim());
    for (Index k = 0; k < dim(); ++k) v(k) = components_[static_cast<std::size_t>(k)](path, knot);
    return v;
}

bool AdaptedProcess::same_shape(const AdaptedProcess& other) const {
    return ens_ == other.ens_ && dim() == other.dim();
}

AdaptedProcess& AdaptedProcess::operator+=(const AdaptedProcess& other) {
    if (!same_shape(other)) throw std::invalid_argument("process shape mismatch");
    for (std::size_t k = 0; k < components_.size(); ++k) components_[k] += other.components_[k];
    return *this;
}

AdaptedProcess& AdaptedProcess::operator-=(const AdaptedProcess& other) {
    if (!same_shape(other)) throw std::invalid_argument("process shape mismatch");
    for (std::size_t k = 0; k < components_.size(); ++k) components_[k] -= other.components_[k];
    return *this;
}

AdaptedProcess& AdaptedProcess::operator*=(double scale) {
    for (Matrix& c : components_) c *= scale;
    return *this;
}

AdaptedProcess make_adapted(const PathEnsemble& ens,
                            const std::function<double(const InformationState&)>& fn) {
    Matrix values(ens.paths(), ens.knot_count());
    for (Index j = 0; j < ens.knot_count(); ++j)
        for (Index i = 0; i < ens.paths(); ++i) values(i, j) = fn(InformationState(ens, i, j));
    return detail::from_values(ens, {std::move(values)});
}

AdaptedProcess make_adapted(const PathEnsemble& ens, Index dim,
                            const std::function<Vector(const InformationState&)>& fn) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
    std::vector<Matrix> comps(static_cast<std::size_t>(dim),
                              Matrix(ens.paths(), ens.knot_count()));
    for (Index j = 0; j < ens.knot_count(); ++j) {
        for (Index i = 0; i < ens.paths(); ++i) {
            Vector v = fn(InformationState(ens, i, j));
            if (v.size() != dim) throw std::invalid_argument("builder returned wrong dimension");
            for (Index k = 0; k < dim; ++k) comps[static_cast<std::size_t>(k)](i, j) = v(k);
        }
    }
    return detail::from_values(ens, std::move(comps));
}

} // namespace bsde
