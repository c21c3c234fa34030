#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dolrel/load_gen.hpp"
#include "dolrel/posterior.hpp"
#include "dolrel/reliability.hpp"

namespace dolrel {

/// Everything a run depends on. Built from a `key = value` file (see
/// config/dolrel.conf) plus command-line overrides.
struct RunConfig
{
    std::string scenario = "residential";
    std::vector<double> phi_grid{0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
    double horizon_hours = kFiftyYearsHours;
    std::size_t n_draws = 500;
    std::size_t n_prof = 100000;
    std::uint64_t seed = 20211022;
    std::size_t grid_levels = kDefaultGridLevels;
    int snow_segments = kDefaultSnowSegments;
    bool common_random_numbers = true;
    GpMode gp_mode = GpMode::Analytic;
    unsigned workers = 1;
    std::filesystem::path output_dir = "out";

    LoadConstants consts{};
    double canadian_strength_w = 0.426;

    /// Posterior draw files; a model without one gets synthetic fixture draws.
    std::map<ModelId, std::filesystem::path> draw_files;
    std::map<ModelId, std::vector<ParameterSummary>> fixtures;
    std::optional<std::filesystem::path> evidence_file;
    std::vector<ModelEvidence> evidence = default_evidence();

    std::vector<CitySnowParams> snow_cities;
    std::vector<CityWindParams> wind_cities;

    std::size_t n_traces = 1;
    std::size_t wind_samples = 1000000;
    /// Cities calibrated by calibrate-wind; empty means every known city.
    std::vector<std::string> calibrate_cities;

    RunConfig();

    Scenario resolve_scenario() const;
    const CitySnowParams& snow_city(std::string_view name) const;
    const CityWindParams& wind_city(std::string_view name) const;
    SimulationOptions simulation_options() const;
};

/// Apply one `key = value` setting. Throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses `key = value` lines; `#` starts a comment.
void apply_config(RunConfig& cfg, std::istream& in, std::string_view source = "<stream>");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Checks counts, the phi grid, city names and that referenced files exist.
void validate_config(const RunConfig& cfg);

/// Canonical `key=value` listing of every setting that affects results.
/// Worker count and output directory are left out.
std::string canonical_text(const RunConfig& cfg);

/// Hash of the canonical text and of every referenced input file's bytes.
std::uint64_t config_hash(const RunConfig& cfg);
std::string format_hash(std::uint64_t hash);

} // namespace dolrel
