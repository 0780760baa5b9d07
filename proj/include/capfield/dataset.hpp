#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "capfield/solver.hpp"

namespace capfield {

// One converged solve: the boundary parameter and its field.
struct Sample {
    double d = 0.0;
    Field field;
};

// A corpus of (field, d) pairs sharing one geometry and grid. The spec's d
// member is unused here; each sample carries its own. The supervised mask
// marks samples whose d label training is allowed to see.
struct Dataset {
    CapacitorSpec spec;
    GridSpec grid;
    std::vector<Sample> samples;
    std::vector<std::uint8_t> supervised;

    int size() const { return static_cast<int>(samples.size()); }
    int supervised_count() const;
};

// Multiplicative rescaling of field values before training. Decoder outputs
// are tanh-bounded in (-1,1) while fields reach v0 exactly on the plate, so
// targets are shrunk by `scale` and predictions expanded back before any
// error is reported in physical units.
struct ScaleTransform {
    double scale = 0.9;

    double apply(double v) const { return v * scale; }
    double invert(double v) const { return v / scale; }
    std::vector<double> apply(std::span<const double> v) const;
    std::vector<double> invert(std::span<const double> v) const;

    void validate() const;
};

// Solves SOR for every requested d, in input order. The seed is reserved for
// stochastic corpus variants; generation itself is fully deterministic.
// Throws if the solver fails to converge for any d, naming the offending d.
Dataset generate_dataset(const CapacitorSpec& spec, const GridSpec& grid,
                         std::span<const double> d_values, const SolverConfig& solver_cfg,
                         std::uint64_t seed);

// Marks exactly n_sup samples supervised via a seeded uniform draw without
// replacement. Deterministic per seed.
Dataset split_supervised(Dataset ds, int n_sup, std::uint64_t seed);

// Binary dataset format (little-endian): magic "CAPD", version u32 = 1,
// nx u32, ny u32, m u32, a f64, b f64, v0 f64; then m records of
// d f64, supervised u8, N f64 field values row-major.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace capfield
