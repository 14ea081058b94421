#ifndef BSDELAB_ERRORS_HPP
#define BSDELAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bsde {

/// Invalid configuration values (grids, path counts, registry names, config files).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A builder asked for information that is not yet available at its knot.
class AnticipationError : public std::logic_error {
public:
    explicit AnticipationError(const std::string& what) : std::logic_error(what) {}
};

/// Rank-deficient regression design or numerically singular Gram system.
class ConditioningError : public std::runtime_error {
public:
    explicit ConditioningError(const std::string& what) : std::runtime_error(what) {}
};

/// A driver violated its declared Lipschitz bound on sampled arguments.
class DriverError : public std::runtime_error {
public:
    explicit DriverError(const std::string& what) : std::runtime_error(what) {}
};

/// File format / IO failure for caches, reports and CSV exports.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bsde

#endif
