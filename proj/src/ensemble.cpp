#include "bsdelab/ensemble.hpp"

#include <cmath>

#include "bsdelab/rng.hpp"

namespace bsde {

PathEnsemble::PathEnsemble(TimeGrid grid, FiltrationModel model, std::uint64_t seed,
                           Matrix increments, std::optional<Matrix> aux_increments,
                           std::optional<Vector> initial_values)
    : grid_(std::move(grid)),
      model_(model),
      seed_(seed),
      increments_(std::move(increments)),
      aux_increments_(std::move(aux_increments)),
      initial_values_(std::move(initial_values)) {
    const Index n = increments_.rows();
    const Index j_steps = grid_.steps();
    if (n < 1) throw ConfigError("ensemble needs at least one path");
    if (increments_.cols() != j_steps)
        throw ConfigError("increment column count does not match the grid");
    if (model_.has_auxiliary() != aux_increments_.has_value())
        throw ConfigError("auxiliary increments present iff the model demands them");
    if (model_.has_initial() != initial_values_.has_value())
        throw ConfigError("initial values present iff the model demands them");
    if (aux_increments_ && (aux_increments_->rows() != n || aux_increments_->cols() != j_steps))
        throw ConfigError("auxiliary increment shape mismatch");
    if (initial_values_ && initial_values_->size() != n)
        throw ConfigError("initial value count mismatch");

    auto cumulate = [&](const Matrix& dw) {
        Matrix w(n, j_steps + 1);
        w.col(0).setZero();
        for (Index j = 0; j < j_steps; ++j) w.col(j + 1) = w.col(j) + dw.col(j);
        return w;
    };
    brownian_ = cumulate(increments_);
    if (aux_increments_) aux_brownian_ = cumulate(*aux_increments_);
}

const Matrix& PathEnsemble::aux_increments() const {
    if (!aux_increments_) throw ConfigError("model has no auxiliary noise channel");
    return *aux_increments_;
}

const Matrix& PathEnsemble::aux_brownian() const {
    if (!aux_brownian_) throw ConfigError("model has no auxiliary noise channel");
    return *aux_brownian_;
}

const Vector& PathEnsemble::initial_values() const {
    if (!initial_values_) throw ConfigError("model has no initial random variable");
    return *initial_values_;
}

bool PathEnsemble::same_scenarios(const PathEnsemble& other) const {
    return seed_ == other.seed_ && paths() == other.paths() && model_ == other.model_ &&
           grid_ == other.grid_;
}

PathEnsemble simulate_ensemble(const TimeGrid& grid, const FiltrationModel& model,
                               Index paths, std::uint64_t seed) {
    if (paths < 1) throw ConfigError("path count must be at least 1");
    const Index j_steps = grid.steps();

    auto draw_channel = [&](std::uint64_t channel) {
        Matrix dw(paths, j_steps);
        for (Index j = 0; j < j_steps; ++j) {
            const double scale = std::sqrt(grid.dt(j));
            for (Index i = 0; i < paths; ++i)
                dw(i, j) = scale * rng::gaussian(seed, channel,
                                                 static_cast<std::uint64_t>(i),
                                                 static_cast<std::uint64_t>(j));
        }
        return dw;
    };

    Matrix dw = draw_channel(rng::kChannelPrimary);
    std::optional<Matrix> aux;
    if (model.has_auxiliary()) aux = draw_channel(rng::kChannelAuxiliary);
    std::optional<Vector> initial;
    if (model.has_initial()) {
        Vector xi(paths);
        for (Index i = 0; i < paths; ++i)
            xi(i) = model.initial_std *
                    rng::gaussian(seed, rng::kChannelInitial, static_cast<std::uint64_t>(i), 0);
        initial = std::move(xi);
    }
    return PathEnsemble(grid, model, seed, std::move(dw), std::move(aux), std::move(initial));
}

PathEnsemble coarsen_ensemble(const PathEnsemble& fine, Index factor) {
    if (factor < 1) throw ConfigError("coarsening factor must be >= 1");
    const Index j_fine = fine.steps();
    if (j_fine % factor != 0) throw ConfigError("coarsening factor must divide the step count");
    const Index j_coarse = j_fine / factor;

    std::vector<double> knots(static_cast<std::size_t>(j_coarse) + 1);
    for (Index j = 0; j <= j_coarse; ++j)
        knots[static_cast<std::size_t>(j)] = fine.grid().knot(j * factor);
    TimeGrid grid(std::move(knots));

    auto aggregate = [&](const Matrix& dw_fine) {
        Matrix dw(fine.paths(), j_coarse);
        for (Index j = 0; j < j_coarse; ++j) {
            dw.col(j) = dw_fine.col(j * factor);
            for (Index k = 1; k < factor; ++k) dw.col(j) += dw_fine.col(j * factor + k);
        }
        return dw;
    };

    std::optional<Matrix> aux;
    if (fine.has_auxiliary()) aux = aggregate(fine.aux_increments());
    std::optional<Vector> initial;
    if (fine.has_initial()) initial = fine.initial_values();
    return PathEnsemble(std::move(grid), fine.model(), fine.seed(),
                        aggregate(fine.increments()), std::move(aux), std::move(initial));
}

bool ensembles_equal(const PathEnsemble& a, const PathEnsemble& b) {
    if (!a.same_scenarios(b)) return false;
    if (a.increments() != b.increments()) return false;
    if (a.has_auxiliary() && a.aux_increments() != b.aux_increments()) return false;
    if (a.has_initial() && a.initial_values() != b.initial_values()) return false;
    return true;
}

} // namespace bsde
