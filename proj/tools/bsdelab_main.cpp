#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "bsdelab/run_config.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (dotted keys)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", args.out_dir, "output directory for report and CSV files");
    cmd->add_option("--seed-override", args.seed_override, "replace ensemble.seed")
        ->each([&args](const std::string&) { args.has_seed_override = true; });
    cmd->add_flag("--quiet", args.quiet, "suppress the report echo on stdout");
}

bsde::RunConfig load_config(const CommonArgs& args) {
    bsde::RunConfig config = bsde::RunConfig::from_file(args.config_path);
    if (args.has_seed_override) config.seed = args.seed_override;
    return config;
}

int finish(const bsde::RunResult& result, const CommonArgs& args) {
    if (!args.quiet) std::fputs(result.report.text().c_str(), stdout);
    return result.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bsdelab: numerical laboratory for BSDEs under general filtrations"};
    app.require_subcommand(1);

    CommonArgs solve_args, verify_args, compare_args, consistency_args, sweep_args, cache_args;
    std::string cache_file = "ensemble.bsde";

    CLI::App* solve = app.add_subcommand("solve", "solve the configured problem");
    add_common(solve, solve_args);
    CLI::App* verify = app.add_subcommand("verify", "solve and run the random duality suite");
    add_common(verify, verify_args);
    CLI::App* compare = app.add_subcommand("compare", "comparison-theorem check of two problems");
    add_common(compare, compare_args);
    CLI::App* consistency = app.add_subcommand("consistency", "time-consistency check");
    add_common(consistency, consistency_args);
    CLI::App* sweep = app.add_subcommand("sweep", "refinement study");
    add_common(sweep, sweep_args);
    CLI::App* cache = app.add_subcommand("cache", "write and verify an ensemble cache");
    add_common(cache, cache_args);
    cache->add_option("--path", cache_file, "cache file path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed())
            return finish(bsde::run_solve(load_config(solve_args), solve_args.out_dir, false),
                          solve_args);
        if (verify->parsed())
            return finish(bsde::run_solve(load_config(verify_args), verify_args.out_dir, true),
                          verify_args);
        if (compare->parsed())
            return finish(bsde::run_compare(load_config(compare_args), compare_args.out_dir),
                          compare_args);
        if (consistency->parsed())
            return finish(
                bsde::run_consistency(load_config(consistency_args), consistency_args.out_dir),
                consistency_args);
        if (sweep->parsed())
            return finish(bsde::run_sweep(load_config(sweep_args), sweep_args.out_dir),
                          sweep_args);
        if (cache->parsed())
            return finish(bsde::run_cache(load_config(cache_args), cache_file,
                                          cache_args.out_dir),
                          cache_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
