#ifndef BSDELAB_PAIRWISE_HPP
#define BSDELAB_PAIRWISE_HPP

#include <Eigen/Dense>
#include <cstddef>

namespace bsde {

// Pairwise (cascade) summation. All ensemble reductions go through these so
// that results are reproducible and insensitive to how a path range would be
// split across workers, up to the cascade tolerance.

inline double pairwise_sum(const double* x, std::ptrdiff_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (std::ptrdiff_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::ptrdiff_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const Eigen::ArrayXd& x) { return pairwise_sum(x.data(), x.size()); }
inline double pairwise_sum(const Eigen::VectorXd& x) { return pairwise_sum(x.data(), x.size()); }

inline double pairwise_mean(const Eigen::ArrayXd& x) {
    return x.size() == 0 ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

inline double pairwise_mean(const Eigen::VectorXd& x) {
    return x.size() == 0 ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

/// Sample mean and its Monte Carlo standard error.
struct MeanWithError {
    double mean = 0.0;
    double standard_error = 0.0;
};

inline MeanWithError pairwise_mean_se(const Eigen::ArrayXd& x) {
    MeanWithError out;
    const auto n = x.size();
    if (n == 0) return out;
    out.mean = pairwise_sum(x) / static_cast<double>(n);
    if (n > 1) {
        Eigen::ArrayXd centered = (x - out.mean).square();
        const double var = pairwise_sum(centered) / static_cast<double>(n - 1);
        out.standard_error = std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

} // namespace bsde

#endif
