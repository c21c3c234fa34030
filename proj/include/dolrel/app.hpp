#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dolrel/config.hpp"
#include "dolrel/reliability.hpp"

namespace dolrel {

/// Writes `n_traces` live-load traces for the configured scenario to
/// <output_dir>/traces.csv. Only loaded intervals are listed.
std::filesystem::path run_simulate_loads(const RunConfig& cfg);

struct WindCalibrationRow
{
    std::string city;
    double cov_a;
    double configured; ///< quantile currently used by the load generator
    std::size_t n_samples;
    QuantileEstimate estimate;
};

/// Monte Carlo (V^2 eta)_50 for each requested city; also written to
/// <output_dir>/wind_calibration.csv.
std::vector<WindCalibrationRow> run_calibrate_wind(const RunConfig& cfg);

struct AssessResult
{
    ReliabilityCurve curve;
    ModelPosterior posterior;
    std::vector<std::filesystem::path> files;
    double wall_seconds;
};

/// Draws (from files or synthetic fixtures), model posterior, failure matrix
/// and reliability curve. Writes curve.csv, failure_matrix.csv and
/// manifest.json to the output directory.
AssessResult run_assess(const RunConfig& cfg);

/// Draw sets for every model in `models`, loaded or synthesized.
std::vector<DrawSet> assemble_draws(const RunConfig& cfg, std::span<const ModelId> models);

} // namespace dolrel
