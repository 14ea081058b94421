#ifndef BSDELAB_FILTRATION_HPP
#define BSDELAB_FILTRATION_HPP

#include <cstdint>
#include <string>

#include "bsdelab/errors.hpp"

namespace bsde {

/// Information models driving a scenario set.
///
/// Natural: the filtration generated by the driving Brownian motion.
/// EnlargedBrownian: an independent second Brownian motion is observable.
/// InitialEnlargement: an independent random variable is revealed at t = 0.
enum class FiltrationKind : std::uint8_t {
    Natural = 0,
    EnlargedBrownian = 1,
    InitialEnlargement = 2,
};

struct FiltrationModel {
    FiltrationKind kind = FiltrationKind::Natural;
    double initial_std = 1.0; // std of the revealed variable (InitialEnlargement)

    bool has_auxiliary() const { return kind == FiltrationKind::EnlargedBrownian; }
    bool has_initial() const { return kind == FiltrationKind::InitialEnlargement; }

    static FiltrationModel natural() { return {}; }
    static FiltrationModel enlarged_brownian() { return {FiltrationKind::EnlargedBrownian, 1.0}; }
    static FiltrationModel initial_enlargement(double std_dev = 1.0) {
        if (!(std_dev > 0.0)) throw ConfigError("initial enlargement std must be positive");
        return {FiltrationKind::InitialEnlargement, std_dev};
    }

    bool operator==(const FiltrationModel& o) const {
        if (kind != o.kind) return false;
        return !has_initial() || initial_std == o.initial_std;
    }
};

inline std::string to_string(FiltrationKind kind) {
    switch (kind) {
        case FiltrationKind::Natural: return "natural";
        case FiltrationKind::EnlargedBrownian: return "enlarged-brownian";
        case FiltrationKind::InitialEnlargement: return "initial-enlargement";
    }
    return "?";
}

inline FiltrationKind filtration_kind_from_string(const std::string& name) {
    if (name == "natural") return FiltrationKind::Natural;
    if (name == "enlarged-brownian") return FiltrationKind::EnlargedBrownian;
    if (name == "initial-enlargement") return FiltrationKind::InitialEnlargement;
    throw ConfigError("unknown filtration model: " + name);
}

} // namespace bsde

#endif
