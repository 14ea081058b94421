#ifndef BSDELAB_PICARD_HPP
#define BSDELAB_PICARD_HPP

#include <optional>
#include <vector>

#include "bsdelab/drivers.hpp"
#include "bsdelab/linear.hpp"

namespace bsde {

struct PicardConfig {
    double tolerance = 1e-8;  // sup_l2 on y plus l2_l2 on Y between iterates
    int max_iterations = 60;
    double theta = 0.5;       // target contraction factor in (0, 1)
    int max_bisections = 8;
    std::optional<std::vector<double>> window_boundaries; // override, interior times
};

struct TimeWindow {
    double begin = 0.0;
    double end = 0.0;
};

/// Window lengths d with K (d + sqrt(d)) <= theta (the unknown theory
/// constant treated as 1); the leftmost window absorbs the remainder.
/// K = 0 yields the single window [0, T].
std::vector<TimeWindow> plan_windows(double horizon, double lipschitz, double theta);

struct PicardIteration {
    double distance = 0.0;
    double ratio = 0.0; // distance / previous distance; NaN on the first pass
};

struct WindowTrace {
    KnotWindow window;
    std::vector<PicardIteration> iterations;
    int bisection_depth = 0;
    bool converged = false;
    /// Largest ratio observed while the previous distance still exceeded the
    /// tolerance (ratios measured at the noise floor are not informative).
    double max_ratio = 0.0;
};

struct PicardTrace {
    std::vector<WindowTrace> windows; // in backward solve order
    bool all_converged() const {
        for (const auto& w : windows)
            if (!w.converged) return false;
        return !windows.empty();
    }
    bool contraction_ok() const {
        for (const auto& w : windows)
            if (!(w.max_ratio < 1.0)) return false;
        return all_converged();
    }
};

/// Picard non-convergence; carries the trace of the failing window.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, WindowTrace trace)
        : std::runtime_error(what), trace(std::move(trace)) {}
    WindowTrace trace;
};

struct WindowSolveResult {
    AdaptedProcess y; // populated on [window.begin, window.end]
    AdaptedProcess Y; // populated on [window.begin, window.end)
    SolveDiagnostics diag;
    std::vector<WindowTrace> traces; // more than one after bisection
};

/// Freeze (p, P), solve the linear problem with f(t, p, P), repeat until the
/// iterate distance drops below tolerance. A window with empirical ratio
/// >= 1 is bisected and re-solved, up to the configured depth.
WindowSolveResult picard_window(const DriverSpec& driver, const Matrix& terminal,
                                KnotWindow window, const PathEnsemble& ens,
                                const BasisSpec& basis_spec, const RegressionSpec& reg_spec,
                                const PicardConfig& config,
                                std::optional<double> galerkin_ridge = std::nullopt,
                                int depth = 0);

/// Solve on [0, T] by stitching windows backward from the horizon. The
/// terminal handed to an earlier window is exactly the y of the later one at
/// the shared knot. M is rebuilt globally from the converged driver values.
TranspositionSolution solve_semilinear(const DriverSpec& driver, const Matrix& terminal,
                                       const PathEnsemble& ens, const BasisSpec& basis_spec,
                                       const RegressionSpec& reg_spec, const PicardConfig& config,
                                       PicardTrace* trace = nullptr,
                                       std::optional<double> galerkin_ridge = std::nullopt);

} // namespace bsde

#endif
