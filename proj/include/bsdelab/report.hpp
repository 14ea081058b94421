#ifndef BSDELAB_REPORT_HPP
#define BSDELAB_REPORT_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bsdelab/linear.hpp"

namespace bsde {

/// Doubles are rendered with 17 significant digits, enough to reproduce the
/// exact binary value.
std::string format_number(double value);

/// Ordered key = value lines. Timing lines carry the "timing." prefix so
/// reproducibility comparisons can strip them.
class RunReport {
public:
    void add(const std::string& key, const std::string& value);
    void add_number(const std::string& key, double value);
    void add_integer(const std::string& key, long long value);
    void add_boolean(const std::string& key, bool value);

    const std::vector<std::pair<std::string, std::string>>& lines() const { return lines_; }
    std::string text() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> lines_;
};

/// Per-knot summary of a solution: t, mean / std / 5% / 95% quantiles of y
/// and the cross-sectional l2 norm of Y. One row per knot plus a header.
void export_csv(const TranspositionSolution& sol, const TimeGrid& grid,
                const std::filesystem::path& path);

} // namespace bsde

#endif
