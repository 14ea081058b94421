#ifndef BSDELAB_CACHE_HPP
#define BSDELAB_CACHE_HPP

#include <filesystem>

#include "bsdelab/ensemble.hpp"

namespace bsde {

// Ensemble cache, little-endian binary:
//   magic "BSDE" | version u32 | paths u64 | steps u64 | seed u64 | model u8
//   [initial_std f64 when model = initial-enlargement]
//   knots (J+1) f64
//   primary increments, row-major (path-major, knot-minor), N x J f64
//   [auxiliary increments N x J f64 when model = enlarged-brownian]
//   [initial values N f64 when model = initial-enlargement]
// Round trips are bit exact.

inline constexpr std::uint32_t kCacheVersion = 1;

void cache_save(const PathEnsemble& ens, const std::filesystem::path& path);
PathEnsemble cache_load(const std::filesystem::path& path);

} // namespace bsde

#endif
