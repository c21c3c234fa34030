#include "dolrel/config.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <iterator>

#include <fmt/core.h>
#include <fmt/format.h>

#include "dolrel/errors.hpp"

namespace dolrel {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;)
    {
        const auto at = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos)));
        if (at == std::string_view::npos)
            return out;
        pos = at + 1;
    }
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string city_key(std::string_view name)
{
    std::string out;
    for (char c : name)
    {
        if (c != ' ' && c != '_' && c != '-')
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected)
{
    throw ConfigError(fmt::format("setting '{}': cannot use '{}' ({} expected)", key, value, expected));
}

double to_double(std::string_view key, std::string_view text)
{
    const std::string s = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        bad_value(key, text, "a number");
    return v;
}

std::uint64_t to_uint(std::string_view key, std::string_view text)
{
    const std::string s = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        bad_value(key, text, "a non-negative integer");
    return v;
}

// Accepts plain integers and the 1e5 style.
std::size_t to_count(std::string_view key, std::string_view text)
{
    const double v = to_double(key, text);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
        bad_value(key, text, "a whole number");
    return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view key, std::string_view text)
{
    const std::string s = lower(trim(text));
    if (s == "true" || s == "on" || s == "yes" || s == "1")
        return true;
    if (s == "false" || s == "off" || s == "no" || s == "0")
        return false;
    bad_value(key, text, "true or false");
}

std::vector<double> to_doubles(std::string_view key, std::string_view text, std::size_t expected = 0)
{
    std::vector<double> out;
    for (const std::string& part : split(text, ','))
        out.push_back(to_double(key, part));
    if (expected != 0 && out.size() != expected)
        bad_value(key, text, fmt::format("{} comma-separated numbers", expected));
    return out;
}

std::optional<ModelId> model_from_key(std::string_view name)
{
    try
    {
        return parse_model_id(name);
    }
    catch (const ValidationError&)
    {
        return std::nullopt;
    }
}

std::string_view short_name(ModelId id)
{
    switch (id)
    {
    case ModelId::US:
        return "us";
    case ModelId::Canadian:
        return "canadian";
    case ModelId::GammaProcess:
        return "gp";
    }
    return "?";
}

void set_evidence(RunConfig& cfg, ModelId id, std::optional<double> bic, std::optional<double> prior)
{
    auto it = std::find_if(cfg.evidence.begin(), cfg.evidence.end(),
                           [&](const ModelEvidence& e) { return e.model == id; });
    if (it == cfg.evidence.end())
        it = cfg.evidence.insert(cfg.evidence.end(), ModelEvidence{id, 0.0, 0.0});
    if (bic)
        it->bic = *bic;
    if (prior)
        it->prior = *prior;
}

template <typename City>
City& upsert_city(std::vector<City>& cities, std::string_view name)
{
    for (City& c : cities)
    {
        if (city_key(c.name) == city_key(name))
            return c;
    }
    City added{};
    added.name = std::string(name);
    cities.push_back(added);
    return cities.back();
}

template <typename City>
const City& lookup_city(const std::vector<City>& cities, std::string_view name, std::string_view kind)
{
    for (const City& c : cities)
    {
        if (city_key(c.name) == city_key(name))
            return c;
    }
    throw ConfigError(fmt::format("unknown {} city '{}'", kind, name));
}

std::string read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(fmt::format("cannot open '{}'", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes)
{
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string g17(double v)
{
    return fmt::format("{:.17g}", v);
}

} // namespace

RunConfig::RunConfig()
    : snow_cities(builtin_snow_cities().begin(), builtin_snow_cities().end()),
      wind_cities(builtin_wind_cities().begin(), builtin_wind_cities().end())
{
    for (ModelId id : kAllModels)
        fixtures[id] = published_summary(id);
}

const CitySnowParams& RunConfig::snow_city(std::string_view name) const
{
    return lookup_city(snow_cities, name, "snow");
}

const CityWindParams& RunConfig::wind_city(std::string_view name) const
{
    return lookup_city(wind_cities, name, "wind");
}

Scenario RunConfig::resolve_scenario() const
{
    const auto colon = scenario.find(':');
    const std::string type = lower(trim(std::string_view(scenario).substr(0, colon)));
    const std::string city = colon == std::string::npos ? std::string() : trim(scenario.substr(colon + 1));
    if (type == "residential")
    {
        if (!city.empty())
            throw ConfigError(fmt::format("scenario '{}': residential takes no city", scenario));
        return Scenario::residential();
    }
    if (city.empty())
        throw ConfigError(fmt::format("scenario '{}': expected '{}:<city>'", scenario, type));
    if (type == "snow")
        return Scenario::snow_city(snow_city(city), snow_segments);
    if (type == "wind")
        return Scenario::wind_city(wind_city(city));
    throw ConfigError(fmt::format("scenario '{}': load type must be residential, snow or wind", scenario));
}

SimulationOptions RunConfig::simulation_options() const
{
    SimulationOptions o;
    o.seed = seed;
    o.n_prof = n_prof;
    o.horizon = horizon_hours;
    o.consts = consts;
    o.grid_levels = grid_levels;
    o.common_random_numbers = common_random_numbers;
    o.gp_mode = gp_mode;
    o.workers = workers;
    o.canadian_strength_w = canadian_strength_w;
    return o;
}

void apply_setting(RunConfig& cfg, std::string_view raw_key, std::string_view raw_value)
{
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    const std::string k = lower(key);

    if (k == "scenario")
        cfg.scenario = value;
    else if (k == "phi_grid")
        cfg.phi_grid = to_doubles(key, value);
    else if (k == "horizon_hours")
        cfg.horizon_hours = to_double(key, value);
    else if (k == "horizon_years")
        cfg.horizon_hours = to_double(key, value) * kHoursPerYear;
    else if (k == "n_draws")
        cfg.n_draws = to_count(key, value);
    else if (k == "n_prof")
        cfg.n_prof = to_count(key, value);
    else if (k == "seed")
        cfg.seed = to_uint(key, value);
    else if (k == "grid_levels")
        cfg.grid_levels = to_count(key, value);
    else if (k == "snow_segments")
        cfg.snow_segments = static_cast<int>(to_count(key, value));
    else if (k == "common_random_numbers")
        cfg.common_random_numbers = to_bool(key, value);
    else if (k == "gp_mode")
    {
        const std::string m = lower(value);
        if (m == "analytic")
            cfg.gp_mode = GpMode::Analytic;
        else if (m == "indicator")
            cfg.gp_mode = GpMode::Indicator;
        else
            bad_value(key, value, "analytic or indicator");
    }
    else if (k == "workers")
        cfg.workers = static_cast<unsigned>(to_count(key, value));
    else if (k == "output_dir")
        cfg.output_dir = value;
    else if (k == "gamma")
        cfg.consts.gamma = to_double(key, value);
    else if (k == "alpha_d")
        cfg.consts.alpha_d = to_double(key, value);
    else if (k == "alpha_l")
        cfg.consts.alpha_l = to_double(key, value);
    else if (k == "dead_mean")
        cfg.consts.dead_mean = to_double(key, value);
    else if (k == "dead_sd")
        cfg.consts.dead_sd = to_double(key, value);
    else if (k == "r_o")
        cfg.consts.R_o = to_double(key, value);
    else if (k == "canadian_strength_w")
        cfg.canadian_strength_w = to_double(key, value);
    else if (k == "evidence")
        cfg.evidence_file = value.empty() ? std::nullopt : std::optional<std::filesystem::path>(value);
    else if (k == "n_traces")
        cfg.n_traces = to_count(key, value);
    else if (k == "wind_samples")
        cfg.wind_samples = to_count(key, value);
    else if (k == "calibrate_cities")
    {
        cfg.calibrate_cities.clear();
        if (!value.empty() && lower(value) != "all")
            cfg.calibrate_cities = split(value, ',');
    }
    else if (k.starts_with("draws."))
    {
        const auto id = model_from_key(key.substr(6));
        if (!id)
            throw ConfigError(fmt::format("setting '{}': unknown model", key));
        if (value.empty())
            cfg.draw_files.erase(*id);
        else
            cfg.draw_files[*id] = value;
    }
    else if (k.starts_with("bic.") || k.starts_with("prior."))
    {
        const bool is_bic = k.starts_with("bic.");
        const auto id = model_from_key(key.substr(is_bic ? 4 : 6));
        if (!id)
            throw ConfigError(fmt::format("setting '{}': unknown model", key));
        const double v = to_double(key, value);
        set_evidence(cfg, *id, is_bic ? std::optional(v) : std::nullopt, is_bic ? std::nullopt : std::optional(v));
    }
    else if (k.starts_with("fixture."))
    {
        const auto parts = split(std::string_view(key).substr(8), '.');
        const auto id = parts.size() == 2 ? model_from_key(parts[0]) : std::nullopt;
        if (!id)
            throw ConfigError(fmt::format("setting '{}': expected fixture.<model>.<parameter>", key));
        const auto v = to_doubles(key, value, 3);
        auto& summary = cfg.fixtures[*id];
        const auto it = std::find_if(summary.begin(), summary.end(),
                                     [&](const ParameterSummary& s) { return s.name == parts[1]; });
        if (it == summary.end())
            throw ConfigError(fmt::format("setting '{}': {} has no parameter '{}'", key, to_string(*id), parts[1]));
        *it = {parts[1], v[0], v[1], v[2]};
    }
    else if (k.starts_with("snow."))
    {
        const auto v = to_doubles(key, value, 2);
        auto& city = upsert_city(cfg.snow_cities, key.substr(5));
        city.A = v[0];
        city.B = v[1];
    }
    else if (k.starts_with("wind."))
    {
        const auto v = to_doubles(key, value, 2);
        auto& city = upsert_city(cfg.wind_cities, key.substr(5));
        city.cov_a = v[0];
        city.v2eta_50 = v[1];
    }
    else
        throw ConfigError(fmt::format("unknown setting '{}'", key));
}

void apply_config(RunConfig& cfg, std::istream& in, std::string_view source)
{
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno)
    {
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source, lineno));
        try
        {
            apply_setting(cfg, body.substr(0, eq), body.substr(eq + 1));
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(fmt::format("{}:{}: {}", source, lineno, e.what()));
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open config file '{}'", path.string()));
    apply_config(cfg, in, path.string());
}

void validate_config(const RunConfig& cfg)
{
    const auto require = [](bool ok, std::string_view what) {
        if (!ok)
            throw ConfigError(std::string(what));
    };
    require(!cfg.phi_grid.empty(), "phi_grid is empty");
    for (std::size_t j = 0; j < cfg.phi_grid.size(); ++j)
    {
        require(cfg.phi_grid[j] > 0.0, "phi_grid values must be positive");
        require(j == 0 || cfg.phi_grid[j] > cfg.phi_grid[j - 1], "phi_grid must be strictly increasing");
    }
    require(cfg.horizon_hours > 0.0, "horizon must be positive");
    require(cfg.n_draws >= 1, "n_draws must be at least 1");
    require(cfg.n_prof >= 1, "n_prof must be at least 1");
    require(cfg.grid_levels >= 1, "grid_levels must be at least 1");
    require(cfg.snow_segments >= 1, "snow_segments must be at least 1");
    require(cfg.workers >= 1, "workers must be at least 1");
    require(cfg.n_traces >= 1, "n_traces must be at least 1");
    require(cfg.wind_samples >= 2, "wind_samples must be at least 2");
    require(cfg.consts.denominator() > 0.0, "gamma * alpha_d + alpha_l must be positive");
    require(cfg.consts.R_o > 0.0, "R_o must be positive");
    require(cfg.consts.dead_sd >= 0.0, "dead_sd must be non-negative");
    require(cfg.canadian_strength_w >= 0.0, "canadian_strength_w must be non-negative");
    for (const auto& c : cfg.snow_cities)
        require(c.A > 0.0 && c.B > 0.0, fmt::format("snow city '{}' needs A > 0 and B > 0", c.name));
    for (const auto& c : cfg.wind_cities)
        require(c.cov_a > 0.0 && c.v2eta_50 > 0.0, fmt::format("wind city '{}' needs positive cov and quantile", c.name));
    for (const auto& name : cfg.calibrate_cities)
        cfg.wind_city(name);
    cfg.resolve_scenario();

    for (const auto& [id, path] : cfg.draw_files)
        require(std::filesystem::is_regular_file(path),
                fmt::format("draw file for {} not found: '{}'", to_string(id), path.string()));
    if (cfg.evidence_file)
        require(std::filesystem::is_regular_file(*cfg.evidence_file),
                fmt::format("evidence file not found: '{}'", cfg.evidence_file->string()));
}

std::string canonical_text(const RunConfig& cfg)
{
    std::vector<std::string> lines;
    const auto add = [&](std::string key, std::string value) { lines.push_back(key + "=" + value); };

    add("scenario", cfg.resolve_scenario().name());
    std::vector<std::string> phis;
    for (double p : cfg.phi_grid)
        phis.push_back(g17(p));
    add("phi_grid", fmt::format("{}", fmt::join(phis, ",")));
    add("horizon_hours", g17(cfg.horizon_hours));
    add("n_draws", std::to_string(cfg.n_draws));
    add("n_prof", std::to_string(cfg.n_prof));
    add("seed", std::to_string(cfg.seed));
    add("grid_levels", std::to_string(cfg.grid_levels));
    add("snow_segments", std::to_string(cfg.snow_segments));
    add("common_random_numbers", cfg.common_random_numbers ? "true" : "false");
    add("gp_mode", cfg.gp_mode == GpMode::Analytic ? "analytic" : "indicator");
    add("gamma", g17(cfg.consts.gamma));
    add("alpha_d", g17(cfg.consts.alpha_d));
    add("alpha_l", g17(cfg.consts.alpha_l));
    add("dead_mean", g17(cfg.consts.dead_mean));
    add("dead_sd", g17(cfg.consts.dead_sd));
    add("r_o", g17(cfg.consts.R_o));
    add("canadian_strength_w", g17(cfg.canadian_strength_w));
    add("n_traces", std::to_string(cfg.n_traces));
    add("wind_samples", std::to_string(cfg.wind_samples));
    add("calibrate_cities", fmt::format("{}", fmt::join(cfg.calibrate_cities, ",")));
    for (const auto& [id, path] : cfg.draw_files)
        add(fmt::format("draws.{}", short_name(id)), path.string());
    if (cfg.evidence_file)
        add("evidence", cfg.evidence_file->string());
    for (const auto& e : cfg.evidence)
        add(fmt::format("evidence.{}", short_name(e.model)), g17(e.bic) + "," + g17(e.prior));
    for (const auto& [id, summary] : cfg.fixtures)
    {
        for (const auto& s : summary)
            add(fmt::format("fixture.{}.{}", short_name(id), s.name),
                g17(s.mean) + "," + g17(s.lo) + "," + g17(s.hi));
    }
    for (const auto& c : cfg.snow_cities)
        add("snow." + city_key(c.name), g17(c.A) + "," + g17(c.B));
    for (const auto& c : cfg.wind_cities)
        add("wind." + city_key(c.name), g17(c.cov_a) + "," + g17(c.v2eta_50));

    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines)
        out += l + "\n";
    return out;
}

std::uint64_t config_hash(const RunConfig& cfg)
{
    std::uint64_t h = fnv1a(0xcbf29ce484222325ULL, canonical_text(cfg));
    for (const auto& [id, path] : cfg.draw_files)
        h = fnv1a(h, read_bytes(path));
    if (cfg.evidence_file)
        h = fnv1a(h, read_bytes(*cfg.evidence_file));
    return h;
}

std::string format_hash(std::uint64_t hash)
{
    return fmt::format("{:016x}", hash);
}

} // namespace dolrel
