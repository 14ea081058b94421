#ifndef BSDELAB_ENSEMBLE_HPP
#define BSDELAB_ENSEMBLE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "bsdelab/filtration.hpp"
#include "bsdelab/time_grid.hpp"

namespace bsde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Array = Eigen::ArrayXd;

/// A seeded scenario set: Gaussian increments of every noise channel on a
/// fixed grid. Immutable after creation; all downstream objects reference it.
class PathEnsemble {
public:
    PathEnsemble(TimeGrid grid, FiltrationModel model, std::uint64_t seed, Matrix increments,
                 std::optional<Matrix> aux_increments, std::optional<Vector> initial_values);

    const TimeGrid& grid() const { return grid_; }
    const FiltrationModel& model() const { return model_; }
    std::uint64_t seed() const { return seed_; }
    Index paths() const { return increments_.rows(); }
    Index steps() const { return grid_.steps(); }
    Index knot_count() const { return grid_.knot_count(); }

    /// N x J matrix of primary Brownian increments.
    const Matrix& increments() const { return increments_; }
    /// N x (J+1) matrix of running primary Brownian values, w(t_0) = 0.
    const Matrix& brownian() const { return brownian_; }

    bool has_auxiliary() const { return aux_increments_.has_value(); }
    const Matrix& aux_increments() const;
    const Matrix& aux_brownian() const;

    bool has_initial() const { return initial_values_.has_value(); }
    const Vector& initial_values() const;

    /// Same (grid, model, N, seed): results computed on either are directly
    /// comparable (common random numbers).
    bool same_scenarios(const PathEnsemble& other) const;

private:
    TimeGrid grid_;
    FiltrationModel model_;
    std::uint64_t seed_;
    Matrix increments_;
    Matrix brownian_;
    std::optional<Matrix> aux_increments_;
    std::optional<Matrix> aux_brownian_;
    std::optional<Vector> initial_values_;
};

/// Simulate a scenario set. Deterministic in (grid, model, paths, seed); the
/// underlying generator is counter-based, one stream per (path, channel).
PathEnsemble simulate_ensemble(const TimeGrid& grid, const FiltrationModel& model,
                               Index paths, std::uint64_t seed);

/// Aggregate increments over groups of `factor` steps. The coarse ensemble
/// shares the fine one's Brownian values at the surviving knots, which makes
/// refinement studies common-random-number comparisons.
PathEnsemble coarsen_ensemble(const PathEnsemble& fine, Index factor);

/// Field-by-field equality (bit exact), as needed by cache round-trip checks.
bool ensembles_equal(const PathEnsemble& a, const PathEnsemble& b);

} // namespace bsde

#endif
