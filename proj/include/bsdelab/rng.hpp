#ifndef BSDELAB_RNG_HPP
#define BSDELAB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace bsde::rng {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, channel, path, step), so an ensemble is reproducible regardless of
// evaluation order or scheduling. Channels keep the noise streams of one
// ensemble independent of each other.

enum : std::uint64_t {
    kChannelPrimary = 0,   // driving Brownian increments
    kChannelAuxiliary = 1, // second Brownian motion of an enlarged filtration
    kChannelInitial = 2,   // initial random variable revealed at t = 0
    kChannelScratch = 100  // test generators, argument sampling, etc.
};

/// 64-bit finalizer (splitmix64). Bijective and well mixed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t channel,
                         std::uint64_t path, std::uint64_t step) {
    std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
    h = mix64(h ^ (channel * 0x9E3779B97F4A7C15ULL + 0xBB67AE8584CAA73BULL));
    h = mix64(h ^ (path * 0xC2B2AE3D27D4EB4FULL + 0x3C6EF372FE94F82BULL));
    h = mix64(h ^ (step * 0x165667B19E3779F9ULL + 0xA54FF53A5F1D36F1ULL));
    return h;
}

/// Map 64 random bits to the open interval (0, 1).
inline double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley step against erfc, accurate to a few ulps over (0, 1).
inline double normal_inv_cdf(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement on erfc(-x / sqrt(2)) / 2 = p.
    static const double inv_sqrt2pi = 0.3989422804014327;
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e / (inv_sqrt2pi * std::exp(-0.5 * x * x));
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

/// One standard normal draw addressed by (seed, channel, path, step).
inline double gaussian(std::uint64_t seed, std::uint64_t channel,
                       std::uint64_t path, std::uint64_t step) {
    return normal_inv_cdf(to_unit(key(seed, channel, path, step)));
}

/// One uniform (0,1) draw addressed by (seed, channel, path, step).
inline double uniform(std::uint64_t seed, std::uint64_t channel,
                      std::uint64_t path, std::uint64_t step) {
    return to_unit(key(seed, channel, path, step));
}

} // namespace bsde::rng

#endif
