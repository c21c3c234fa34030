#include "dolrel/load_gen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "dolrel/errors.hpp"

namespace dolrel {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

const std::array<CitySnowParams, 6> kSnowCities{{
    {"Vancouver", 0.0977, 5.0123},
    {"Halifax", 0.1028, 19.4276},
    {"Arvida", 0.1255, 29.4438},
    {"Ottawa", 0.1882, 20.8780},
    {"Saskatoon", 0.1695, 15.4561},
    {"Quebec City", 0.3222, 17.0689},
}};

// Halifax carries the published quantile. The other two were produced by
// calibrate-wind with 4e7 samples (standard errors 2e-4 and 4e-4).
const std::array<CityWindParams, 3> kWindCities{{
    {"Regina", 0.108, 1.3671},
    {"Riviere-du-Loup", 0.170, 1.7080},
    {"Halifax", 0.150, 1.5913},
}};

bool iequals(std::string_view a, std::string_view b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

// Accept "Quebec City", "quebec_city", "QuebecCity".
std::string normalize_city(std::string_view name)
{
    std::string out;
    for (char c : name)
    {
        if (c == ' ' || c == '_' || c == '-')
            continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

void check_segment(double horizon, double prev_end, double start, double end, double value)
{
    if (!(start >= prev_end) || !(end > start) || start < 0.0 || end > horizon)
        throw InvalidParameter(fmt::format("segment [{}, {}) is out of order or outside [0, {}]", start,
                                           end, horizon));
    if (!(value >= 0.0) || !std::isfinite(value))
        throw InvalidParameter(fmt::format("segment [{}, {}) has invalid value {}", start, end, value));
}

double segment_lookup(std::span<const Segment> segments, double t, double gap_value)
{
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double x, const Segment& s) { return x < s.start; });
    if (it == segments.begin())
        return gap_value;
    --it;
    return t < it->end ? it->value : gap_value;
}

} // namespace

LiveLoadTrace::LiveLoadTrace(double horizon) : horizon_(horizon)
{
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidParameter(fmt::format("horizon must be positive, got {}", horizon));
}

void LiveLoadTrace::append(double start, double end, double value)
{
    check_segment(horizon_, segments_.empty() ? 0.0 : segments_.back().end, start, end, value);
    if (value == 0.0)
        return;
    segments_.push_back({start, end, value});
}

double LiveLoadTrace::value_at(double t) const
{
    return segment_lookup(segments_, t, 0.0);
}

double LiveLoadTrace::max_value() const
{
    double m = 0.0;
    for (const Segment& s : segments_)
        m = std::max(m, s.value);
    return m;
}

double LiveLoadTrace::loaded_duration() const
{
    double total = 0.0;
    for (const Segment& s : segments_)
        total += s.duration();
    return total;
}

LiveLoadTrace add_traces(const LiveLoadTrace& lhs, const LiveLoadTrace& rhs)
{
    if (lhs.horizon() != rhs.horizon())
        throw InvalidParameter("cannot add traces with different horizons");

    std::vector<double> cuts;
    cuts.reserve(2 * (lhs.segments().size() + rhs.segments().size()));
    for (const auto* trace : {&lhs, &rhs})
    {
        for (const Segment& s : trace->segments())
        {
            cuts.push_back(s.start);
            cuts.push_back(s.end);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    LiveLoadTrace sum(lhs.horizon());
    auto a = lhs.segments().begin();
    auto b = rhs.segments().begin();
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    {
        const double lo = cuts[k];
        const double hi = cuts[k + 1];
        while (a != lhs.segments().end() && a->end <= lo)
            ++a;
        while (b != rhs.segments().end() && b->end <= lo)
            ++b;
        double v = 0.0;
        if (a != lhs.segments().end() && a->start <= lo)
            v += a->value;
        if (b != rhs.segments().end() && b->start <= lo)
            v += b->value;
        sum.append(lo, hi, v);
    }
    return sum;
}

std::span<const CitySnowParams> builtin_snow_cities()
{
    return kSnowCities;
}

std::span<const CityWindParams> builtin_wind_cities()
{
    return kWindCities;
}

const CitySnowParams& find_snow_city(std::string_view name)
{
    for (const auto& c : kSnowCities)
    {
        if (iequals(c.name, name) || normalize_city(c.name) == normalize_city(name))
            return c;
    }
    throw InvalidParameter(fmt::format("unknown snow city '{}'", name));
}

const CityWindParams& find_wind_city(std::string_view name)
{
    for (const auto& c : kWindCities)
    {
        if (iequals(c.name, name) || normalize_city(c.name) == normalize_city(name))
            return c;
    }
    throw InvalidParameter(fmt::format("unknown wind city '{}'", name));
}

double GumbelParams::sample(Stream& rng) const
{
    return location - scale * std::log(-std::log(rng.uniform()));
}

double LognormalParams::sample(Stream& rng) const
{
    return std::exp(log_mean + log_sd * rng.normal());
}

GumbelParams moment_match_gumbel(double mean, double cov)
{
    if (!(mean > 0.0) || !(cov > 0.0))
        throw InvalidParameter(fmt::format("Gumbel mean and CoV must be positive (got {}, {})", mean, cov));
    const double sd = mean * cov;
    const double scale = sd * std::sqrt(6.0) / std::numbers::pi;
    return {mean - kEulerGamma * scale, scale};
}

LognormalParams moment_match_lognormal(double mean, double cov)
{
    if (!(mean > 0.0) || !(cov > 0.0))
        throw InvalidParameter(fmt::format("lognormal mean and CoV must be positive (got {}, {})", mean, cov));
    const double log_sd = std::sqrt(std::log1p(cov * cov));
    return {std::log(mean) - 0.5 * log_sd * log_sd, log_sd};
}

ResidentialComponents gen_residential_components(Stream& rng, double horizon)
{
    ResidentialComponents out{LiveLoadTrace(horizon), LiveLoadTrace(horizon)};

    // Sustained occupancy: back-to-back periods, each with its own level.
    for (double t = 0.0; t < horizon;)
    {
        const double end = std::min(horizon, t + rng.exponential(kSustainedMeanHours));
        const double level = rng.gamma(kSustainedShape, kSustainedScale);
        if (end > t)
            out.sustained.append(t, end, level);
        t = end;
    }

    // Extraordinary: off period, then a short loaded period, repeated.
    for (double t = 0.0;;)
    {
        t += rng.exponential(kExtraordinaryOffMeanHours);
        if (t >= horizon)
            break;
        const double end = std::min(horizon, t + rng.exponential(kExtraordinaryOnMeanHours));
        const double level = rng.gamma(kExtraordinaryShape, kExtraordinaryScale);
        if (end > t)
            out.extraordinary.append(t, end, level);
        t = end;
    }
    return out;
}

LiveLoadTrace gen_residential(Stream& rng, double horizon)
{
    const ResidentialComponents parts = gen_residential_components(rng, horizon);
    return add_traces(parts.sustained, parts.extraordinary);
}

SnowOccurrence snow_occurrence_prob(const CitySnowParams& params, int n_segments)
{
    if (n_segments < 1)
        throw InvalidParameter("snow segment count must be at least 1");
    const double e = std::exp(params.A * params.B);
    return {std::exp(-e), -std::expm1(-e / n_segments)};
}

double standardized_ground_snow(const CitySnowParams& params, int n_segments, double p)
{
    const double pe = snow_occurrence_prob(params, n_segments).pe;
    const double p_tilde = std::log1p(pe * (p - 1.0));
    const double ab = params.A * params.B;
    const double a_std = ab + kGumbel50Shift;
    const double b_std = ab / a_std;
    return b_std - std::log(-n_segments * p_tilde) / a_std;
}

double sample_segment_snow(Stream& rng, const CitySnowParams& params, int n_segments)
{
    return standardized_ground_snow(params, n_segments, rng.uniform());
}

LiveLoadTrace gen_snow(Stream& rng, const CitySnowParams& params, double horizon, int n_segments)
{
    const double pe = snow_occurrence_prob(params, n_segments).pe;
    const LognormalParams roof = moment_match_lognormal(kRoofFactorMean, kRoofFactorCov);
    const double seg_len = kWinterHours / n_segments;

    LiveLoadTrace trace(horizon);
    for (long year = 0; year * kHoursPerYear < horizon; ++year)
    {
        const double winter_start = year * kHoursPerYear;
        for (int s = 0; s < n_segments; ++s)
        {
            const double start = winter_start + s * seg_len;
            if (start >= horizon)
                break;
            const double end = std::min(horizon, winter_start + (s + 1) * seg_len);
            if (rng.uniform() < pe)
            {
                const double g = sample_segment_snow(rng, params, n_segments);
                const double r = roof.sample(rng);
                trace.append(start, end, r * g);
            }
        }
    }
    return trace;
}

double wind_speed_mean(double cov_a)
{
    return (1.0 + 3.050 * cov_a) / (1.0 + 2.592 * cov_a);
}

double sample_v2eta(Stream& rng, const CityWindParams& params)
{
    static const LognormalParams eta_dist = moment_match_lognormal(kWindEtaMean, kWindEtaCov);
    const GumbelParams v_dist = moment_match_gumbel(wind_speed_mean(params.cov_a), params.cov_a);
    const double v = v_dist.sample(rng);
    const double eta = eta_dist.sample(rng);
    return v * v * eta;
}

QuantileEstimate calibrate_wind_quantile(Stream& rng, const CityWindParams& params,
                                         std::size_t n_samples)
{
    if (n_samples < 2)
        throw InvalidParameter("wind calibration needs at least two samples");
    const LognormalParams eta_dist = moment_match_lognormal(kWindEtaMean, kWindEtaCov);
    const GumbelParams v_dist = moment_match_gumbel(wind_speed_mean(params.cov_a), params.cov_a);

    std::vector<double> x(n_samples);
    for (double& xi : x)
    {
        const double v = v_dist.sample(rng);
        xi = v * v * eta_dist.sample(rng);
    }
    std::sort(x.begin(), x.end());

    constexpr double p = 0.98;
    const auto order_stat = [&](double h) {
        h = std::clamp(h, 0.0, static_cast<double>(n_samples - 1));
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, n_samples - 1);
        return x[lo] + (h - lo) * (x[hi] - x[lo]);
    };
    const double h = p * (n_samples - 1);
    // Binomial interval on the order statistic index: +/- one standard
    // deviation of the count below the quantile.
    const double d = std::sqrt(n_samples * p * (1.0 - p));
    return {order_stat(h), 0.5 * (order_stat(h + d) - order_stat(h - d))};
}

LiveLoadTrace gen_wind(Stream& rng, const CityWindParams& params, double horizon)
{
    if (!(params.v2eta_50 > 0.0))
        throw InvalidParameter(fmt::format("wind quantile for {} must be positive", params.name));
    LiveLoadTrace trace(horizon);
    const auto years = static_cast<long>(std::floor(horizon / kHoursPerYear));
    for (long year = 0; year < years; ++year)
    {
        const double start = year * kHoursPerYear + rng.uniform() * (kHoursPerYear - kWindPulseHours);
        const double w = sample_v2eta(rng, params) / params.v2eta_50;
        trace.append(start, start + kWindPulseHours, w);
    }
    return trace;
}

DemandProfile DemandProfile::from_segments(double horizon, double floor_stress,
                                           std::vector<Segment> segments)
{
    if (!(horizon > 0.0))
        throw InvalidParameter("profile horizon must be positive");
    if (!(floor_stress >= 0.0))
        throw InvalidParameter("floor stress must be non-negative");
    double prev = 0.0;
    for (const Segment& s : segments)
    {
        check_segment(horizon, prev, s.start, s.end, s.value);
        prev = s.end;
    }
    DemandProfile p;
    p.horizon_ = horizon;
    p.phi_ = 1.0;
    p.floor_ = floor_stress;
    p.segments_ = std::move(segments);
    return p;
}

DemandProfile DemandProfile::constant(double stress, double horizon)
{
    return from_segments(horizon, stress, {});
}

double DemandProfile::stress_at(double t) const
{
    return segment_lookup(segments_, t, floor_);
}

double DemandProfile::max_stress() const
{
    double m = floor_;
    for (const Segment& s : segments_)
        m = std::max(m, s.value);
    return m;
}

DemandProfile compose_demand(const LiveLoadTrace& live, double dead, double phi,
                             const LoadConstants& consts)
{
    DemandProfile out;
    compose_demand(live, dead, phi, consts, out);
    return out;
}

void compose_demand(const LiveLoadTrace& live, double dead, double phi, const LoadConstants& consts,
                    DemandProfile& out)
{
    if (!(phi > 0.0))
        throw InvalidParameter(fmt::format("performance factor must be positive, got {}", phi));
    if (!(dead >= 0.0))
        throw InvalidParameter(fmt::format("dead load must be non-negative, got {}", dead));

    const double scale = phi * consts.R_o / consts.denominator();
    const double dead_part = consts.gamma * dead;

    out.horizon_ = live.horizon();
    out.phi_ = phi;
    out.dead_ = dead;
    out.floor_ = scale * dead_part;
    out.segments_.clear();
    out.segments_.reserve(live.segments().size());
    for (const Segment& s : live.segments())
        out.segments_.push_back({s.start, s.end, scale * (dead_part + s.value)});
}

double sample_dead_load(Stream& rng, const LoadConstants& consts)
{
    return std::max(0.0, consts.dead_mean + consts.dead_sd * rng.normal());
}

Scenario Scenario::residential()
{
    return Scenario{};
}

Scenario Scenario::snow_city(const CitySnowParams& city, int n_segments)
{
    Scenario s;
    s.type = LoadType::Snow;
    s.snow = city;
    s.snow_segments = n_segments;
    return s;
}

Scenario Scenario::wind_city(const CityWindParams& city)
{
    Scenario s;
    s.type = LoadType::Wind;
    s.wind = city;
    return s;
}

std::string Scenario::name() const
{
    switch (type)
    {
    case LoadType::Residential:
        return "residential";
    case LoadType::Snow:
        return "snow:" + snow.name;
    case LoadType::Wind:
        return "wind:" + wind.name;
    }
    return "unknown";
}

std::uint64_t Scenario::id() const
{
    return label_hash(name());
}

LiveLoadTrace generate_live_load(const Scenario& scenario, Stream& rng, double horizon)
{
    switch (scenario.type)
    {
    case LoadType::Residential:
        return gen_residential(rng, horizon);
    case LoadType::Snow:
        return gen_snow(rng, scenario.snow, horizon, scenario.snow_segments);
    case LoadType::Wind:
        return gen_wind(rng, scenario.wind, horizon);
    }
    throw InvalidParameter("unknown load type");
}

} // namespace dolrel
