#include "dolrel/posterior.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "dolrel/errors.hpp"

namespace dolrel {

namespace {

constexpr std::array<std::string_view, 3> kUSParams{"A", "B", "w"};
constexpr std::array<std::string_view, 10> kCanadianParams{
    "mu_a", "sigma_a", "mu_b", "sigma_b", "mu_c", "sigma_c", "mu_n", "sigma_n", "mu_sigma0", "sigma_sigma0"};
constexpr std::array<std::string_view, 8> kGPParams{"u", "a1", "a2", "a3", "t1", "t2", "tau_star", "xi"};
constexpr std::array<std::string_view, 1> kCanadianOptional{"tau_s"};

// Central 95% width of a standard normal: 2 * 1.959964.
constexpr double kNormal95Width = 3.919928;

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true)
    {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty())
        return std::nullopt;
    return v;
}

bool contains(std::span<const std::string_view> names, std::string_view name)
{
    return std::find(names.begin(), names.end(), name) != names.end();
}

// Positive-constrained parameters; synthetic fixtures draw these lognormally.
bool is_positive_param(ModelId id, std::string_view name)
{
    switch (id)
    {
    case ModelId::US:
        return name == "w";
    case ModelId::Canadian:
        return name.starts_with("sigma_") || name == "tau_s";
    case ModelId::GammaProcess:
        return name != "tau_star";
    }
    return false;
}

void check_row(const DrawSet& d, std::size_t i, std::string_view source)
{
    const auto fail = [&](std::string_view name, std::string_view what) {
        throw ValidationError(fmt::format("{}: draw row {} column '{}': {}", source, i + 1, name, what));
    };
    for (std::size_t j = 0; j < d.names.size(); ++j)
    {
        const double v = d.rows[i][j];
        if (!std::isfinite(v))
            fail(d.names[j], "value is not finite");
        const std::string_view name = d.names[j];
        const bool nonneg = d.model == ModelId::GammaProcess && (name == "a1" || name == "a2" || name == "a3");
        if (nonneg ? v < 0.0 : (is_positive_param(d.model, name) && !(v > 0.0)))
            fail(name, fmt::format("value {} must be {}", v, nonneg ? "non-negative" : "positive"));
    }
    if (d.model == ModelId::GammaProcess && !(d.value(i, "t1") < d.value(i, "t2")))
        fail("t2", "breakpoints must satisfy t1 < t2");
}

} // namespace

std::string_view to_string(ModelId id)
{
    switch (id)
    {
    case ModelId::US:
        return "US";
    case ModelId::Canadian:
        return "Canadian";
    case ModelId::GammaProcess:
        return "GammaProcess";
    }
    return "?";
}

ModelId parse_model_id(std::string_view text)
{
    std::string t;
    for (char c : text)
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "us")
        return ModelId::US;
    if (t == "canadian" || t == "can")
        return ModelId::Canadian;
    if (t == "gammaprocess" || t == "gamma_process" || t == "gp")
        return ModelId::GammaProcess;
    throw ValidationError(fmt::format("unknown model id '{}'", text));
}

std::string_view to_string(TimeUnit unit)
{
    switch (unit)
    {
    case TimeUnit::Seconds:
        return "seconds";
    case TimeUnit::Minutes:
        return "minutes";
    case TimeUnit::Hours:
        return "hours";
    case TimeUnit::Days:
        return "days";
    case TimeUnit::Years:
        return "years";
    }
    return "?";
}

TimeUnit parse_time_unit(std::string_view text)
{
    for (TimeUnit u : {TimeUnit::Seconds, TimeUnit::Minutes, TimeUnit::Hours, TimeUnit::Days, TimeUnit::Years})
    {
        if (text == to_string(u))
            return u;
    }
    throw ValidationError(fmt::format("unknown time unit '{}'", text));
}

double hours_per(TimeUnit unit)
{
    switch (unit)
    {
    case TimeUnit::Seconds:
        return 1.0 / 3600.0;
    case TimeUnit::Minutes:
        return 1.0 / 60.0;
    case TimeUnit::Hours:
        return 1.0;
    case TimeUnit::Days:
        return 24.0;
    case TimeUnit::Years:
        return kHoursPerYear;
    }
    return 1.0;
}

std::span<const std::string_view> required_parameters(ModelId id)
{
    switch (id)
    {
    case ModelId::US:
        return kUSParams;
    case ModelId::Canadian:
        return kCanadianParams;
    case ModelId::GammaProcess:
        return kGPParams;
    }
    return {};
}

std::span<const std::string_view> optional_parameters(ModelId id)
{
    if (id == ModelId::Canadian)
        return kCanadianOptional;
    return {};
}

bool DrawSet::has(std::string_view name) const
{
    return std::find(names.begin(), names.end(), name) != names.end();
}

double DrawSet::value(std::size_t row, std::string_view name) const
{
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
        throw ValidationError(fmt::format("{} draws have no parameter '{}'", to_string(model), name));
    return rows.at(row)[static_cast<std::size_t>(it - names.begin())];
}

void validate_draws(const DrawSet& d)
{
    const std::string source = fmt::format("{} draws", to_string(d.model));
    if (d.rows.empty())
        throw ValidationError(fmt::format("{}: no draws", source));
    for (std::string_view req : required_parameters(d.model))
    {
        if (!d.has(req))
            throw ValidationError(fmt::format("{}: missing column '{}'", source, req));
    }
    for (const std::string& name : d.names)
    {
        if (!contains(required_parameters(d.model), name) && !contains(optional_parameters(d.model), name))
            throw ValidationError(fmt::format("{}: unknown parameter '{}'", source, name));
        if (std::count(d.names.begin(), d.names.end(), name) > 1)
            throw ValidationError(fmt::format("{}: duplicate column '{}'", source, name));
    }
    if (!(d.rate_scale > 0.0))
        throw ValidationError(fmt::format("{}: rate_scale must be positive", source));
    for (std::size_t i = 0; i < d.rows.size(); ++i)
    {
        if (d.rows[i].size() != d.names.size())
            throw ValidationError(fmt::format("{}: draw row {} has {} values, expected {}", source, i + 1,
                                              d.rows[i].size(), d.names.size()));
        check_row(d, i, source);
    }
}

DrawSet read_draws(std::istream& in, ModelId expected, std::string_view source)
{
    std::map<std::string, std::string> meta;
    DrawSet d;
    d.model = expected;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        if (t.front() == '#')
        {
            const auto colon = t.find(':');
            if (colon != std::string::npos)
                meta[trim(std::string_view(t).substr(1, colon - 1))] = trim(std::string_view(t).substr(colon + 1));
            continue;
        }
        if (!have_header)
        {
            d.names = split_csv(t);
            have_header = true;
            continue;
        }
        const auto fields = split_csv(t);
        if (fields.size() != d.names.size())
            throw ValidationError(fmt::format("{}:{}: expected {} values, found {}", source, line_no,
                                              d.names.size(), fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j)
        {
            const auto v = parse_double(fields[j]);
            if (!v)
                throw ValidationError(fmt::format("{}:{}: column '{}': cannot parse '{}'", source, line_no,
                                                  d.names[j], fields[j]));
            row[j] = *v;
        }
        d.rows.push_back(std::move(row));
    }

    if (!meta.contains("model_id"))
        throw ValidationError(fmt::format("{}: missing '# model_id:' metadata", source));
    if (parse_model_id(meta["model_id"]) != expected)
        throw ValidationError(fmt::format("{}: file holds {} draws, expected {}", source, meta["model_id"],
                                          to_string(expected)));
    if (!meta.contains("time_unit"))
        throw ValidationError(fmt::format("{}: missing '# time_unit:' metadata", source));
    const TimeUnit unit = parse_time_unit(meta["time_unit"]);
    d.provenance = meta.contains("provenance") ? meta["provenance"] : std::string(source);
    if (meta.contains("rate_scale"))
    {
        const auto v = parse_double(meta["rate_scale"]);
        if (!v)
            throw ValidationError(fmt::format("{}: cannot parse rate_scale '{}'", source, meta["rate_scale"]));
        d.rate_scale = *v;
    }
    if (!have_header)
        throw ValidationError(fmt::format("{}: no header row", source));

    try
    {
        validate_draws(d);
    }
    catch (const ValidationError& e)
    {
        throw ValidationError(fmt::format("{}: {}", source, e.what()));
    }

    // Convert to hours.
    const double h = hours_per(unit);
    if (h != 1.0)
    {
        for (std::size_t i = 0; i < d.rows.size(); ++i)
        {
            for (std::size_t j = 0; j < d.names.size(); ++j)
            {
                const std::string& name = d.names[j];
                if (d.model == ModelId::US && name == "A")
                    d.rows[i][j] += std::log(h);
                if (d.model == ModelId::GammaProcess && (name == "t1" || name == "t2"))
                    d.rows[i][j] *= h;
            }
        }
        if (d.model == ModelId::Canadian)
            d.rate_scale /= h;
    }
    return d;
}

DrawSet load_draws(const std::filesystem::path& path, ModelId expected)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open draw file '{}'", path.string()));
    return read_draws(in, expected, path.string());
}

void write_draws(std::ostream& out, const DrawSet& d)
{
    fmt::print(out, "# model_id: {}\n", to_string(d.model));
    fmt::print(out, "# time_unit: hours\n");
    fmt::print(out, "# provenance: {}\n", d.provenance);
    if (d.rate_scale != 1.0)
        fmt::print(out, "# rate_scale: {:.17g}\n", d.rate_scale);
    for (std::size_t j = 0; j < d.names.size(); ++j)
        fmt::print(out, "{}{}", j ? "," : "", d.names[j]);
    out << '\n';
    for (const auto& row : d.rows)
    {
        for (std::size_t j = 0; j < row.size(); ++j)
            fmt::print(out, "{}{:.17g}", j ? "," : "", row[j]);
        out << '\n';
    }
}

void write_draws(const std::filesystem::path& path, const DrawSet& d)
{
    std::ofstream out(path);
    if (!out)
        throw IoError(fmt::format("cannot write draw file '{}'", path.string()));
    write_draws(out, d);
    if (!out)
        throw IoError(fmt::format("error writing draw file '{}'", path.string()));
}

std::vector<ParameterSummary> published_summary(ModelId id)
{
    switch (id)
    {
    case ModelId::US:
        return {{"A", 68.5, 65.0, 71.9}, {"B", 79.7, 75.9, 83.4}, {"w", 0.426, 0.421, 0.431}};
    case ModelId::Canadian:
        // The sigma0 location row is reproduced as published, although its
        // interval does not contain its mean. Override it through the run
        // configuration if a corrected value is available.
        return {{"mu_a", -12.6, -13.2, -12.2},      {"sigma_a", 0.41, 0.16, 0.43},
                {"mu_b", 3.66, 2.99, 4.11},         {"sigma_b", 0.09, 0.06, 0.30},
                {"mu_c", -46.4, -58.9, -13.0},      {"sigma_c", 0.21, 0.06, 0.87},
                {"mu_n", -1.89, -2.38, -0.09},      {"sigma_n", 0.33, 0.06, 0.55},
                {"mu_sigma0", 0.39, -0.93, -0.90},  {"sigma_sigma0", 0.15, 0.07, 0.50}};
    case ModelId::GammaProcess:
        return {{"u", 0.084, 0.077, 0.104},       {"a1", 3.7e-9, 4.6e-14, 2.1e-3},
                {"a2", 0.027, 0.018, 0.028},      {"a3", 0.094, 0.054, 0.103},
                {"t1", 0.00144, 0.00015, 0.00493}, {"t2", 2327, 289, 2890},
                {"tau_star", 4.35, 0.0, 4.45},    {"xi", 0.27, 0.20, 0.30}};
    }
    return {};
}

DrawSet synth_draws(Stream& rng, ModelId id, std::span<const ParameterSummary> summary, std::size_t n)
{
    if (n < 1)
        throw InvalidParameter("synthetic draw count must be at least 1");

    struct Marginal
    {
        bool log_scale;
        double centre;
        double sd;
    };
    std::vector<Marginal> marginals;
    DrawSet d;
    d.model = id;
    d.provenance = std::string(kSyntheticProvenance);
    for (const ParameterSummary& s : summary)
    {
        if (!(s.hi > s.lo))
            throw InvalidParameter(fmt::format("summary for '{}' has hi {} <= lo {}", s.name, s.hi, s.lo));
        const bool log_scale = is_positive_param(id, s.name);
        if (log_scale)
        {
            if (!(s.lo > 0.0) || !(s.mean > 0.0))
                throw InvalidParameter(
                    fmt::format("positive parameter '{}' needs a positive mean and interval", s.name));
            marginals.push_back({true, std::log(s.mean), std::log(s.hi / s.lo) / kNormal95Width});
        }
        else
        {
            marginals.push_back({false, s.mean, (s.hi - s.lo) / kNormal95Width});
        }
        d.names.push_back(s.name);
    }

    d.rows.assign(n, std::vector<double>(summary.size()));
    for (std::size_t i = 0; i < n; ++i)
    {
        for (std::size_t j = 0; j < marginals.size(); ++j)
        {
            const Marginal& m = marginals[j];
            const double x = m.centre + m.sd * rng.normal();
            d.rows[i][j] = m.log_scale ? std::exp(x) : x;
        }
    }
    validate_draws(d);
    return d;
}

ModelParams model_params(const DrawSet& d, std::size_t i, const LoadConstants& consts)
{
    switch (d.model)
    {
    case ModelId::US:
    {
        const double w = d.value(i, "w");
        return USParams{d.value(i, "A"), d.value(i, "B"), w, median_strength(consts.R_o, w)};
    }
    case ModelId::Canadian:
    {
        CanadianHyper h;
        h.a = {d.value(i, "mu_a"), d.value(i, "sigma_a")};
        h.b = {d.value(i, "mu_b"), d.value(i, "sigma_b")};
        h.c = {d.value(i, "mu_c"), d.value(i, "sigma_c")};
        h.n = {d.value(i, "mu_n"), d.value(i, "sigma_n")};
        h.sigma0 = {d.value(i, "mu_sigma0"), d.value(i, "sigma_sigma0")};
        h.rate_scale = d.rate_scale;
        if (d.has("tau_s"))
            h.fixed_tau_s = d.value(i, "tau_s");
        return h;
    }
    case ModelId::GammaProcess:
        return GammaProcessParams{d.value(i, "u"),  d.value(i, "a1"), d.value(i, "a2"),
                                  d.value(i, "a3"), d.value(i, "t1"), d.value(i, "t2"),
                                  d.value(i, "tau_star"), d.value(i, "xi")};
    }
    throw ValidationError("unknown model");
}

std::vector<ModelParams> model_params(const DrawSet& draws, const LoadConstants& consts)
{
    std::vector<ModelParams> out;
    out.reserve(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i)
        out.push_back(model_params(draws, i, consts));
    return out;
}

double ModelPosterior::probability(ModelId id) const
{
    for (std::size_t k = 0; k < models.size(); ++k)
    {
        if (models[k] == id)
            return probabilities[k];
    }
    return 0.0;
}

ModelPosterior model_posterior_probs(std::span<const ModelEvidence> evidence)
{
    if (evidence.empty())
        throw ValidationError("model posterior needs at least one model");
    double prior_sum = 0.0;
    double min_bic = evidence.front().bic;
    for (const ModelEvidence& e : evidence)
    {
        if (!std::isfinite(e.bic))
            throw ValidationError(fmt::format("BIC for {} is not finite", to_string(e.model)));
        if (!(e.prior >= 0.0))
            throw ValidationError(fmt::format("prior for {} is negative", to_string(e.model)));
        prior_sum += e.prior;
        min_bic = std::min(min_bic, e.bic);
    }
    if (std::abs(prior_sum - 1.0) > 1e-9)
        throw ValidationError(fmt::format("model priors sum to {}, not 1", prior_sum));

    ModelPosterior post;
    double total = 0.0;
    for (const ModelEvidence& e : evidence)
    {
        if (std::find(post.models.begin(), post.models.end(), e.model) != post.models.end())
            throw ValidationError(fmt::format("model {} listed twice", to_string(e.model)));
        const double weight = std::exp(-0.5 * (e.bic - min_bic)) * e.prior;
        post.models.push_back(e.model);
        post.probabilities.push_back(weight);
        total += weight;
    }
    if (!(total > 0.0))
        throw ValidationError("every model has zero prior weight");
    for (double& p : post.probabilities)
        p /= total;
    return post;
}

std::vector<ModelEvidence> default_evidence()
{
    return {{ModelId::US, -5898.0, 1.0 / 3.0},
            {ModelId::Canadian, -6188.0, 1.0 / 3.0},
            {ModelId::GammaProcess, -6184.0, 1.0 / 3.0}};
}

std::vector<ModelEvidence> read_evidence(std::istream& in, std::string_view source)
{
    std::vector<ModelEvidence> out;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<std::string> cols;
    while (std::getline(in, line))
    {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto fields = split_csv(t);
        if (!have_header)
        {
            cols = fields;
            for (std::string_view c : {"model_id", "bic", "prior"})
            {
                if (std::find(cols.begin(), cols.end(), c) == cols.end())
                    throw ValidationError(fmt::format("{}: missing column '{}'", source, c));
            }
            have_header = true;
            continue;
        }
        if (fields.size() != cols.size())
            throw ValidationError(fmt::format("{}:{}: expected {} fields", source, line_no, cols.size()));
        ModelEvidence e{};
        for (std::size_t j = 0; j < cols.size(); ++j)
        {
            if (cols[j] == "model_id")
            {
                e.model = parse_model_id(fields[j]);
                continue;
            }
            const auto v = parse_double(fields[j]);
            if (!v)
                throw ValidationError(fmt::format("{}:{}: column '{}': cannot parse '{}'", source, line_no,
                                                  cols[j], fields[j]));
            if (cols[j] == "bic")
                e.bic = *v;
            else if (cols[j] == "prior")
                e.prior = *v;
        }
        out.push_back(e);
    }
    if (out.empty())
        throw ValidationError(fmt::format("{}: no evidence records", source));
    return out;
}

std::vector<ModelEvidence> load_evidence(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError(fmt::format("cannot open evidence file '{}'", path.string()));
    return read_evidence(in, path.string());
}

void write_evidence(std::ostream& out, std::span<const ModelEvidence> evidence)
{
    out << "model_id,bic,prior\n";
    for (const ModelEvidence& e : evidence)
        fmt::print(out, "{},{:.17g},{:.17g}\n", to_string(e.model), e.bic, e.prior);
}

} // namespace dolrel
