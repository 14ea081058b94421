#include "bsdelab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "bsdelab/pairwise.hpp"

namespace bsde {

std::string format_number(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void RunReport::add(const std::string& key, const std::string& value) {
    lines_.emplace_back(key, value);
}

void RunReport::add_number(const std::string& key, double value) {
    add(key, format_number(value));
}

void RunReport::add_integer(const std::string& key, long long value) {
    add(key, std::to_string(value));
}

void RunReport::add_boolean(const std::string& key, bool value) {
    add(key, value ? "true" : "false");
}

std::string RunReport::text() const {
    std::string out;
    for (const auto& [key, value] : lines_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

void RunReport::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open report file for writing: " + path.string());
    out << text();
    if (!out) throw IoError("report write failed: " + path.string());
}

namespace {

/// Type-7 empirical quantile (linear interpolation between order statistics).
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const auto n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

} // namespace

void export_csv(const TranspositionSolution& sol, const TimeGrid& grid,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open CSV file for writing: " + path.string());
    const Index dim = sol.y.dim();
    const Index n = sol.y.paths();

    out << "t";
    for (Index k = 0; k < dim; ++k) {
        const std::string suffix = dim == 1 ? "" : "_c" + std::to_string(k);
        out << ",y" << suffix << "_mean,y" << suffix << "_std,y" << suffix << "_q05,y" << suffix
            << "_q95";
    }
    out << ",Y_l2\n";

    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (Index j = 0; j < grid.knot_count(); ++j) {
        out << format_number(grid.knot(j));
        for (Index k = 0; k < dim; ++k) {
            const auto col = sol.y.component(k).col(j);
            const double mean = pairwise_mean(Array(col.array()));
            const double var = pairwise_mean(Array((col.array() - mean).square()));
            for (Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = col(i);
            std::sort(sorted.begin(), sorted.end());
            out << ',' << format_number(mean) << ',' << format_number(std::sqrt(var)) << ','
                << format_number(quantile_sorted(sorted, 0.05)) << ','
                << format_number(quantile_sorted(sorted, 0.95));
        }
        Array cross = Array::Zero(n);
        for (Index k = 0; k < dim; ++k) cross += sol.Y.component(k).col(j).array().square();
        out << ',' << format_number(std::sqrt(pairwise_mean(cross))) << '\n';
    }
    if (!out) throw IoError("CSV write failed: " + path.string());
}

} // namespace bsde
