#include "capfield/dataset.hpp"

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "capfield/binio.hpp"
#include "capfield/prng.hpp"

namespace capfield {

using binio::IoError;
using binio::IoErrorCode;

namespace {
constexpr char kMagic[4] = {'C', 'A', 'P', 'D'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

int Dataset::supervised_count() const {
    int n = 0;
    for (std::uint8_t s : supervised) n += s ? 1 : 0;
    return n;
}

void ScaleTransform::validate() const {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("ScaleTransform: scale must be positive");
    }
}

std::vector<double> ScaleTransform::apply(std::span<const double> v) const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
    return out;
}

std::vector<double> ScaleTransform::invert(std::span<const double> v) const {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / scale;
    return out;
}

Dataset generate_dataset(const CapacitorSpec& spec, const GridSpec& grid,
                         std::span<const double> d_values, const SolverConfig& solver_cfg,
                         std::uint64_t /*seed*/) {
    if (d_values.empty()) {
        throw std::invalid_argument("generate_dataset: need at least one d value");
    }
    Dataset ds;
    ds.spec = spec;
    ds.grid = grid;
    ds.samples.reserve(d_values.size());
    for (double d : d_values) {
        auto [field, report] = solve_sor(spec.with_d(d), grid, solver_cfg);
        if (!report.converged) {
            throw std::runtime_error("generate_dataset: SOR did not converge for d=" +
                                     std::to_string(d));
        }
        ds.samples.push_back(Sample{d, std::move(field)});
    }
    ds.supervised.assign(ds.samples.size(), 0);
    return ds;
}

Dataset split_supervised(Dataset ds, int n_sup, std::uint64_t seed) {
    const int m = ds.size();
    if (n_sup < 0 || n_sup > m) {
        throw std::invalid_argument("split_supervised: n_sup must lie in [0, m]");
    }
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;

    // Partial Fisher-Yates: the first n_sup entries are a uniform draw
    // without replacement.
    Prng rng(seed);
    for (int i = 0; i < n_sup; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    ds.supervised.assign(static_cast<std::size_t>(m), 0);
    for (int i = 0; i < n_sup; ++i) {
        ds.supervised[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError(IoErrorCode::OpenFailed, "cannot open " + path.string() + " for writing");
    }
    binio::put_magic(os, kMagic);
    binio::put_u32(os, kVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(ds.grid.nx));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.grid.ny));
    binio::put_u32(os, static_cast<std::uint32_t>(ds.samples.size()));
    binio::put_f64(os, ds.spec.a);
    binio::put_f64(os, ds.spec.b);
    binio::put_f64(os, ds.spec.v0);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& s = ds.samples[i];
        binio::put_f64(os, s.d);
        binio::put_u8(os, ds.supervised[i]);
        for (double v : s.field.values) binio::put_f64(os, v);
    }
    if (!os) {
        throw IoError(IoErrorCode::OpenFailed, "write failed for " + path.string());
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(IoErrorCode::OpenFailed, "cannot open " + path.string());
    }
    binio::check_magic(is, kMagic, "dataset");
    const std::uint32_t version = binio::get_u32(is);
    if (version != kVersion) {
        throw IoError(IoErrorCode::BadVersion,
                      "dataset version mismatch: got " + std::to_string(version));
    }
    const std::uint32_t nx = binio::get_u32(is);
    const std::uint32_t ny = binio::get_u32(is);
    const std::uint32_t m = binio::get_u32(is);

    Dataset ds;
    ds.spec.a = binio::get_f64(is);
    ds.spec.b = binio::get_f64(is);
    ds.spec.v0 = binio::get_f64(is);
    if (nx < 3 || ny < 3 || m < 1) {
        throw IoError(IoErrorCode::BadValue, "dataset header out of range");
    }
    ds.grid = GridSpec::make(ds.spec, static_cast<int>(nx), static_cast<int>(ny));

    const std::size_t n = static_cast<std::size_t>(ds.grid.node_count());
    ds.samples.resize(m);
    ds.supervised.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) {
        Sample& s = ds.samples[i];
        s.d = binio::get_f64(is);
        ds.supervised[i] = binio::get_u8(is);
        s.field.grid = ds.grid;
        s.field.values.resize(n);
        for (std::size_t k = 0; k < n; ++k) s.field.values[k] = binio::get_f64(is);
    }
    return ds;
}

}  // namespace capfield
