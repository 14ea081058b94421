#ifndef BSDELAB_RUN_CONFIG_HPP
#define BSDELAB_RUN_CONFIG_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "bsdelab/picard.hpp"
#include "bsdelab/report.hpp"
#include "bsdelab/verification.hpp"

namespace bsde {

/// Flat dotted-key configuration (key = value per line, '#' comments).
/// All run state flows through this file plus a handful of CLI flags;
/// environment variables are deliberately not consulted.
struct RunConfig {
    // grid
    double horizon = 1.0;
    Index steps = 64;
    // ensemble
    Index paths = 50000;
    std::uint64_t seed = 20240;
    FiltrationModel model;
    // problem: registry terminals are scalar-valued
    std::string terminal_name = "w(T)";
    double terminal_constant = 1.0;
    int g_power = 1;
    std::string driver_name = "zero";
    std::map<std::string, double> driver_params;
    // solver
    BasisSpec basis{4, 1, StateSampling::PerKnot};
    RegressionSpec regression;
    PicardConfig picard;
    // verification
    int verification_tests = 20;
    std::uint64_t verification_seed = 777;
    // compare subcommand: the second (lower) problem and the gap tolerance
    std::string compare_terminal_name = "w(T)";
    double compare_terminal_constant = 1.0;
    int compare_g_power = 1;
    std::string compare_driver_name = "zero";
    std::map<std::string, double> compare_driver_params;
    std::optional<double> compare_tol;
    // consistency subcommand
    std::optional<Index> split_knot;
    // sweep subcommand
    std::string sweep_oracle = "brownian";
    RefinementPlan sweep;

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(const std::string& text, const std::string& name = "<config>");

    /// Canonical echo of every field, used as the report preamble.
    void echo(RunReport& report) const;
};

/// Terminal-condition registry: "constant", "w(T)", "w(T)^2", "w'(T)",
/// "integral-of-g-dw'" with g(t) = t^g_power. Returns an N x 1 matrix.
Matrix build_terminal_values(const std::string& name, double constant, int g_power,
                             const PathEnsemble& ens);

struct RunResult {
    RunReport report;
    bool verification_failed = false;
    bool solver_failed = false;
    int exit_code() const { return solver_failed ? 2 : (verification_failed ? 1 : 0); }
};

/// solve: simulate, solve, report, CSV. verify additionally runs the random
/// duality suite and fails the run when any test fails.
RunResult run_solve(const RunConfig& config, const std::filesystem::path& out_dir,
                    bool with_verification);
RunResult run_compare(const RunConfig& config, const std::filesystem::path& out_dir);
RunResult run_consistency(const RunConfig& config, const std::filesystem::path& out_dir);
RunResult run_sweep(const RunConfig& config, const std::filesystem::path& out_dir);
RunResult run_cache(const RunConfig& config, const std::filesystem::path& cache_path,
                    const std::filesystem::path& out_dir);

} // namespace bsde

#endif
