#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dolrel/rng.hpp"

namespace dolrel {

// All times are in hours.
inline constexpr double kHoursPerYear = 8760.0;
inline constexpr double kWinterHours = 3650.0;     // Nov 1 to Apr 1
inline constexpr double kTwoWeeksHours = 336.0;
inline constexpr double kWindPulseHours = 3.0;
inline constexpr double kFiftyYearsHours = 50 * kHoursPerYear;

/// -log(-log(0.98)): standard Gumbel variate at the 50-year return level.
inline constexpr double kGumbel50Shift = 3.9019;

/// Half-open interval [start, end) carrying a constant value.
struct Segment
{
    double start;
    double end;
    double value;

    double duration() const { return end - start; }
};

/// Piecewise-constant standardized live load on [0, horizon).
///
/// Only intervals with a nonzero load are stored; the load is zero in every
/// gap between listed segments. Segments are sorted and non-overlapping.
class LiveLoadTrace
{
  public:
    explicit LiveLoadTrace(double horizon);

    /// Append a segment. Zero-valued segments are dropped. Throws
    /// InvalidParameter when the segment is out of order, overlaps the
    /// previous one, leaves [0, horizon] or carries a negative value.
    void append(double start, double end, double value);

    double horizon() const { return horizon_; }
    std::span<const Segment> segments() const { return segments_; }
    double value_at(double t) const;
    double max_value() const;
    /// Total time with a nonzero load.
    double loaded_duration() const;

  private:
    double horizon_;
    std::vector<Segment> segments_;
};

/// Pointwise sum of two traces with equal horizons.
LiveLoadTrace add_traces(const LiveLoadTrace& lhs, const LiveLoadTrace& rhs);

struct CitySnowParams
{
    std::string name;
    double A; ///< 1 / load units
    double B; ///< load units
};

struct CityWindParams
{
    std::string name;
    double cov_a;    ///< CoV of the annual maximum wind speed
    double v2eta_50; ///< 0.98 quantile of V^2 * eta
};

std::span<const CitySnowParams> builtin_snow_cities();
std::span<const CityWindParams> builtin_wind_cities();
/// Case-insensitive lookup; throws InvalidParameter for unknown names.
const CitySnowParams& find_snow_city(std::string_view name);
const CityWindParams& find_wind_city(std::string_view name);

struct LoadConstants
{
    double gamma = 0.25;    ///< dead-to-live load ratio
    double alpha_d = 1.25;  ///< dead load factor
    double alpha_l = 1.5;   ///< live load factor
    double dead_mean = 1.05;
    double dead_sd = 0.1;
    double R_o = 20.68;     ///< characteristic strength, MPa

    double denominator() const { return gamma * alpha_d + alpha_l; }
};

struct GumbelParams
{
    double location;
    double scale;

    double sample(Stream& rng) const;
};

struct LognormalParams
{
    double log_mean;
    double log_sd;

    double sample(Stream& rng) const;
};

/// Gumbel (maximum) with the given mean and coefficient of variation.
GumbelParams moment_match_gumbel(double mean, double cov);
/// Lognormal with the given mean and coefficient of variation.
LognormalParams moment_match_lognormal(double mean, double cov);

// Residential occupancy load model.
inline constexpr double kSustainedMeanHours = 10 * kHoursPerYear;
inline constexpr double kSustainedShape = 3.122;
inline constexpr double kSustainedScale = 0.0481;
inline constexpr double kExtraordinaryOffMeanHours = kHoursPerYear;
inline constexpr double kExtraordinaryOnMeanHours = kTwoWeeksHours;
inline constexpr double kExtraordinaryShape = 0.826;
inline constexpr double kExtraordinaryScale = 0.1023;

struct ResidentialComponents
{
    LiveLoadTrace sustained;
    LiveLoadTrace extraordinary;
};

ResidentialComponents gen_residential_components(Stream& rng, double horizon);
LiveLoadTrace gen_residential(Stream& rng, double horizon);

// Snow load model.
inline constexpr int kDefaultSnowSegments = 10;
inline constexpr double kRoofFactorMean = 0.6;
inline constexpr double kRoofFactorCov = 0.42;

struct SnowOccurrence
{
    double p0; ///< probability of a snow-free winter
    double pe; ///< probability of snow in one segment
};

SnowOccurrence snow_occurrence_prob(const CitySnowParams& params, int n_segments);

/// Standardized ground snow load g_s for uniform variate p in (0, 1), given
/// the segment has snow.
double standardized_ground_snow(const CitySnowParams& params, int n_segments, double p);
double sample_segment_snow(Stream& rng, const CitySnowParams& params, int n_segments);

LiveLoadTrace gen_snow(Stream& rng, const CitySnowParams& params, double horizon,
                       int n_segments = kDefaultSnowSegments);

// Wind load model.
inline constexpr double kWindEtaMean = 0.68;
inline constexpr double kWindEtaCov = 0.22;

/// Mean of the Gumbel annual maximum wind speed for a city.
double wind_speed_mean(double cov_a);

struct QuantileEstimate
{
    double value;
    double std_error;
};

/// Monte Carlo 0.98 quantile of V^2 * eta.
QuantileEstimate calibrate_wind_quantile(Stream& rng, const CityWindParams& params,
                                         std::size_t n_samples);
/// V^2 * eta for one year.
double sample_v2eta(Stream& rng, const CityWindParams& params);

LiveLoadTrace gen_wind(Stream& rng, const CityWindParams& params, double horizon);

/// Applied stress in MPa. Segments mirror the live trace; gaps carry
/// floor_stress, the stress due to dead load alone.
class DemandProfile
{
  public:
    DemandProfile() = default;

    /// Profile built directly from stress segments (validated like a live
    /// trace); used for prescribed test loads.
    static DemandProfile from_segments(double horizon, double floor_stress,
                                       std::vector<Segment> segments);
    static DemandProfile constant(double stress, double horizon);

    double horizon() const { return horizon_; }
    double phi() const { return phi_; }
    double dead_load() const { return dead_; }
    double floor_stress() const { return floor_; }
    std::span<const Segment> segments() const { return segments_; }

    double stress_at(double t) const;
    double max_stress() const;

    /// Calls fn(start, end, stress) for every constant-stress piece in time
    /// order, gaps included. Stops early when fn returns false.
    template <typename Fn>
    void for_each_piece(Fn&& fn) const
    {
        double t = 0.0;
        for (const Segment& s : segments_)
        {
            if (s.start > t && !fn(t, s.start, floor_))
                return;
            if (!fn(s.start, s.end, s.value))
                return;
            t = s.end;
        }
        if (horizon_ > t)
            fn(t, horizon_, floor_);
    }

  private:
    friend void compose_demand(const LiveLoadTrace&, double, double, const LoadConstants&,
                               DemandProfile&);

    double horizon_ = 0.0;
    double phi_ = 0.0;
    double dead_ = 0.0;
    double floor_ = 0.0;
    std::vector<Segment> segments_;
};

/// Stress profile tau(t) = phi * R_o * (gamma * dead + live(t)) / (gamma * alpha_d + alpha_l).
DemandProfile compose_demand(const LiveLoadTrace& live, double dead, double phi,
                             const LoadConstants& consts);
/// Same, reusing the storage of `out`.
void compose_demand(const LiveLoadTrace& live, double dead, double phi,
                    const LoadConstants& consts, DemandProfile& out);

/// Normal(dead_mean, dead_sd) clamped at zero.
double sample_dead_load(Stream& rng, const LoadConstants& consts);

enum class LoadType
{
    Residential,
    Snow,
    Wind,
};

/// A load type plus the city it is evaluated for.
struct Scenario
{
    LoadType type = LoadType::Residential;
    CitySnowParams snow{};
    CityWindParams wind{};
    int snow_segments = kDefaultSnowSegments;

    static Scenario residential();
    static Scenario snow_city(const CitySnowParams& city, int n_segments = kDefaultSnowSegments);
    static Scenario wind_city(const CityWindParams& city);

    /// "residential", "snow:Vancouver", "wind:Halifax".
    std::string name() const;
    /// Stable identifier derived from name(); used to key random streams.
    std::uint64_t id() const;
};

LiveLoadTrace generate_live_load(const Scenario& scenario, Stream& rng, double horizon);

} // namespace dolrel
