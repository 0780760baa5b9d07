#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "capfield/inverse.hpp"
#include "capfield/models.hpp"

namespace capfield {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-method sum-of-squared-error grid: one row per seed, one column per
// evaluated d.
struct SseReport {
    std::string method;
    std::vector<double> d_values;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<double>> sse;  // [seed index][d index]

    std::vector<double> mean_per_d() const;
    double mean() const;
};

struct ExperimentConfig {
    CapacitorSpec spec;
    GridSpec grid;  // default 41x41 over the unit quadrant
    SolverConfig solver;

    int corpus_count = 81;
    double corpus_d_min = 0.1;
    double corpus_d_max = 0.9;
    int n_supervised = 20;

    std::vector<double> table1_d = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> table2_d = {0.6, 0.65, 0.7};
    double fixed_train_d = 0.55;  // training point for the fixed-boundary nets

    TrainConfig train;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::filesystem::path out_dir = ".";

    // Uniform corpus grid with every test d removed, so evaluation is always
    // on held-out solves.
    std::vector<double> corpus_d_values() const;

    // Stable key=value rendering of everything that affects the numbers;
    // hashed into the CSV header so reports are traceable to their config.
    std::string canonical_text() const;
    std::uint64_t config_hash() const;

    void set_key(const std::string& key, const std::string& value);
    void finalize();  // recompute grid spacings after overrides
    void validate() const;
};

// Plain key=value config file, one per line, '#' comments. Unknown keys are
// rejected.
ExperimentConfig load_config(const std::filesystem::path& path);

double sse(std::span<const double> pred, std::span<const double> truth);

// Four inverse-prediction pipelines (raw space, enc-dec, bou-dec,
// enc-dec+bou-dec) evaluated against fresh SOR solves at every table1_d,
// once per seed. Writes table1.csv into out_dir.
std::vector<SseReport> run_table1(const ExperimentConfig& cfg);

// Fixed-boundary NN and PINN trained at fixed_train_d plus the joint model,
// evaluated at every table2_d. Writes table2.csv into out_dir.
std::vector<SseReport> run_table2(const ExperimentConfig& cfg);

enum class HeatmapFormat { Pgm, Csv };

// PGM: binary P5, maxval 255, min-max normalized, row 0 = y = 0.
// CSV: ny rows of nx full-precision values, same row order.
void export_heatmap(const Field& field, const std::filesystem::path& path, HeatmapFormat format);

// CSV schema: leading "# config_hash=... seeds=..." comment, then header
// method,d,seed,sse and one row per cell at %.12e precision, LF endings.
void write_sse_csv(const std::vector<SseReport>& reports, const ExperimentConfig& cfg,
                   const std::filesystem::path& path);

}  // namespace capfield
