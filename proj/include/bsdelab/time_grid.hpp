#ifndef BSDELAB_TIME_GRID_HPP
#define BSDELAB_TIME_GRID_HPP

#include <Eigen/Dense>
#include <vector>

#include "bsdelab/errors.hpp"

namespace bsde {

using Index = Eigen::Index;

/// Strictly increasing knots t_0 = 0 < t_1 < ... < t_J = T.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> knots) : knots_(std::move(knots)) {
        if (knots_.size() < 2) throw ConfigError("time grid needs at least two knots");
        if (knots_.front() != 0.0) throw ConfigError("time grid must start at 0");
        for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
            if (!(knots_[j + 1] > knots_[j]))
                throw ConfigError("time grid knots must be strictly increasing");
        }
    }

    double horizon() const { return knots_.back(); }
    Index steps() const { return static_cast<Index>(knots_.size()) - 1; }
    Index knot_count() const { return static_cast<Index>(knots_.size()); }
    double knot(Index j) const { return knots_[static_cast<std::size_t>(j)]; }
    double dt(Index j) const { return knots_[static_cast<std::size_t>(j) + 1] - knots_[static_cast<std::size_t>(j)]; }
    const std::vector<double>& knots() const { return knots_; }

    bool operator==(const TimeGrid& other) const { return knots_ == other.knots_; }

private:
    std::vector<double> knots_;
};

/// J + 1 equally spaced knots on [0, horizon].
inline TimeGrid build_uniform_grid(double horizon, Index steps) {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (steps < 1) throw ConfigError("step count must be at least 1");
    std::vector<double> knots(static_cast<std::size_t>(steps) + 1);
    for (Index j = 0; j <= steps; ++j)
        knots[static_cast<std::size_t>(j)] =
            horizon * static_cast<double>(j) / static_cast<double>(steps);
    return TimeGrid(std::move(knots));
}

} // namespace bsde

#endif
