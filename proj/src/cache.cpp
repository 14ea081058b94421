#include "bsdelab/cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace bsde {

namespace {

void put_bytes(std::ofstream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("cache write failed");
}

void get_bytes(std::ifstream& in, void* data, std::size_t size) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (in.gcount() != static_cast<std::streamsize>(size))
        throw IoError("truncated ensemble cache");
}

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        T out;
        auto* src = reinterpret_cast<const unsigned char*>(&value);
        auto* dst = reinterpret_cast<unsigned char*>(&out);
        for (std::size_t b = 0; b < sizeof(T); ++b) dst[b] = src[sizeof(T) - 1 - b];
        return out;
    }
}

template <typename T>
void put_scalar(std::ofstream& out, T value) {
    const T le = to_little(value);
    put_bytes(out, &le, sizeof(T));
}

template <typename T>
T get_scalar(std::ifstream& in) {
    T value;
    get_bytes(in, &value, sizeof(T));
    return to_little(value);
}

void put_doubles(std::ofstream& out, const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        put_bytes(out, data, count * sizeof(double));
    } else {
        for (std::size_t k = 0; k < count; ++k) put_scalar(out, data[k]);
    }
}

void get_doubles(std::ifstream& in, double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        get_bytes(in, data, count * sizeof(double));
    } else {
        for (std::size_t k = 0; k < count; ++k) data[k] = get_scalar<double>(in);
    }
}

void put_row_major(std::ofstream& out, const Matrix& m) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        put_doubles(out, row.data(), row.size());
    }
}

Matrix get_row_major(std::ifstream& in, Index rows, Index cols) {
    Matrix m(rows, cols);
    std::vector<double> row(static_cast<std::size_t>(cols));
    for (Index i = 0; i < rows; ++i) {
        get_doubles(in, row.data(), row.size());
        for (Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

} // namespace

void cache_save(const PathEnsemble& ens, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open cache file for writing: " + path.string());
    put_bytes(out, "BSDE", 4);
    put_scalar<std::uint32_t>(out, kCacheVersion);
    put_scalar<std::uint64_t>(out, static_cast<std::uint64_t>(ens.paths()));
    put_scalar<std::uint64_t>(out, static_cast<std::uint64_t>(ens.steps()));
    put_scalar<std::uint64_t>(out, ens.seed());
    put_scalar<std::uint8_t>(out, static_cast<std::uint8_t>(ens.model().kind));
    if (ens.model().has_initial()) put_scalar<double>(out, ens.model().initial_std);
    put_doubles(out, ens.grid().knots().data(), ens.grid().knots().size());
    put_row_major(out, ens.increments());
    if (ens.has_auxiliary()) put_row_major(out, ens.aux_increments());
    if (ens.has_initial()) put_doubles(out, ens.initial_values().data(),
                                       static_cast<std::size_t>(ens.paths()));
    out.flush();
    if (!out) throw IoError("cache write failed: " + path.string());
}

PathEnsemble cache_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cache file: " + path.string());
    char magic[4];
    get_bytes(in, magic, 4);
    if (std::memcmp(magic, "BSDE", 4) != 0)
        throw IoError("not an ensemble cache (bad magic): " + path.string());
    const auto version = get_scalar<std::uint32_t>(in);
    if (version != kCacheVersion)
        throw IoError("incompatible cache version " + std::to_string(version) + " (expected " +
                      std::to_string(kCacheVersion) + ")");
    const auto paths = static_cast<Index>(get_scalar<std::uint64_t>(in));
    const auto steps = static_cast<Index>(get_scalar<std::uint64_t>(in));
    const auto seed = get_scalar<std::uint64_t>(in);
    const auto tag = get_scalar<std::uint8_t>(in);
    if (tag > 2) throw IoError("unknown filtration model tag in cache");
    FiltrationModel model;
    model.kind = static_cast<FiltrationKind>(tag);
    if (model.has_initial()) model.initial_std = get_scalar<double>(in);

    std::vector<double> knots(static_cast<std::size_t>(steps) + 1);
    get_doubles(in, knots.data(), knots.size());
    TimeGrid grid(std::move(knots));

    Matrix dw = get_row_major(in, paths, steps);
    std::optional<Matrix> aux;
    if (model.has_auxiliary()) aux = get_row_major(in, paths, steps);
    std::optional<Vector> initial;
    if (model.has_initial()) {
        Vector xi(paths);
        get_doubles(in, xi.data(), static_cast<std::size_t>(paths));
        initial = std::move(xi);
    }
    return PathEnsemble(std::move(grid), model, seed, std::move(dw), std::move(aux),
                        std::move(initial));
}

} // namespace bsde
