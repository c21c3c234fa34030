#include "dolrel/app.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/core.h>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "dolrel/errors.hpp"

namespace dolrel {

namespace {

enum AppTag : std::uint64_t
{
    kTagTrace = 11,
    kTagWind = 12,
    kTagFixture = 13,
};

std::string_view column_prefix(ModelId id)
{
    switch (id)
    {
    case ModelId::US:
        return "us";
    case ModelId::Canadian:
        return "can";
    case ModelId::GammaProcess:
        return "gp";
    }
    return "?";
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path(), ec);
    if (ec)
        throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError(fmt::format("cannot write '{}'", path.string()));
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out)
        throw IoError(fmt::format("error writing '{}'", path.string()));
}

void write_preamble(std::ostream& out, const RunConfig& cfg, std::uint64_t hash)
{
    fmt::print(out, "# config_hash: {}\n# seed: {}\n", format_hash(hash), cfg.seed);
}

std::string num(double v)
{
    return std::isfinite(v) ? fmt::format("{:.10g}", v) : std::string("nan");
}

} // namespace

std::filesystem::path run_simulate_loads(const RunConfig& cfg)
{
    validate_config(cfg);
    const Scenario scenario = cfg.resolve_scenario();
    const std::uint64_t hash = config_hash(cfg);
    const auto path = cfg.output_dir / "traces.csv";
    std::ofstream out = open_output(path);
    write_preamble(out, cfg, hash);
    fmt::print(out, "# scenario: {}\n# horizon_hours: {:.17g}\n", scenario.name(), cfg.horizon_hours);
    fmt::print(out, "trace,start_hour,end_hour,value\n");
    for (std::size_t i = 0; i < cfg.n_traces; ++i)
    {
        Stream rng(stream_key(cfg.seed, {kTagTrace, scenario.id(), i}));
        const LiveLoadTrace trace = generate_live_load(scenario, rng, cfg.horizon_hours);
        for (const Segment& s : trace.segments())
            fmt::print(out, "{},{:.17g},{:.17g},{:.17g}\n", i, s.start, s.end, s.value);
    }
    finish(out, path);
    return path;
}

std::vector<WindCalibrationRow> run_calibrate_wind(const RunConfig& cfg)
{
    validate_config(cfg);
    std::vector<const CityWindParams*> cities;
    if (cfg.calibrate_cities.empty())
    {
        for (const auto& c : cfg.wind_cities)
            cities.push_back(&c);
    }
    else
    {
        for (const auto& name : cfg.calibrate_cities)
            cities.push_back(&cfg.wind_city(name));
    }

    std::vector<WindCalibrationRow> rows;
    for (const CityWindParams* c : cities)
    {
        Stream rng(stream_key(cfg.seed, {kTagWind, label_hash(c->name)}));
        rows.push_back({c->name, c->cov_a, c->v2eta_50, cfg.wind_samples,
                        calibrate_wind_quantile(rng, *c, cfg.wind_samples)});
    }

    const auto path = cfg.output_dir / "wind_calibration.csv";
    std::ofstream out = open_output(path);
    write_preamble(out, cfg, config_hash(cfg));
    fmt::print(out, "city,cov_a,n_samples,v2eta_50,std_error,configured\n");
    for (const auto& r : rows)
        fmt::print(out, "{},{:.17g},{},{:.17g},{:.17g},{:.17g}\n", r.city, r.cov_a, r.n_samples, r.estimate.value,
                   r.estimate.std_error, r.configured);
    finish(out, path);
    return rows;
}

std::vector<DrawSet> assemble_draws(const RunConfig& cfg, std::span<const ModelId> models)
{
    std::vector<DrawSet> sets;
    for (ModelId id : models)
    {
        const auto file = cfg.draw_files.find(id);
        if (file != cfg.draw_files.end())
        {
            sets.push_back(load_draws(file->second, id));
            continue;
        }
        Stream rng(stream_key(cfg.seed, {kTagFixture, static_cast<std::uint64_t>(id)}));
        sets.push_back(synth_draws(rng, id, cfg.fixtures.at(id), cfg.n_draws));
    }
    for (const DrawSet& d : sets)
    {
        if (d.size() != sets.front().size())
            throw ValidationError(fmt::format("incompatible draw counts: {} has {}, {} has {}", to_string(d.model),
                                              d.size(), to_string(sets.front().model), sets.front().size()));
    }
    return sets;
}

AssessResult run_assess(const RunConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    validate_config(cfg);
    const Scenario scenario = cfg.resolve_scenario();
    const std::uint64_t hash = config_hash(cfg);

    const std::vector<ModelEvidence> evidence = cfg.evidence_file ? load_evidence(*cfg.evidence_file) : cfg.evidence;
    ModelPosterior posterior = model_posterior_probs(evidence);
    const std::vector<DrawSet> draws = assemble_draws(cfg, posterior.models);
    ReliabilityCurve curve = build_curve(scenario, cfg.phi_grid, draws, posterior, cfg.simulation_options());

    std::vector<std::filesystem::path> files;

    // Synthetic draws are written out so the run can be repeated from files.
    for (const DrawSet& d : draws)
    {
        if (cfg.draw_files.contains(d.model))
            continue;
        const auto path = cfg.output_dir / fmt::format("draws_{}.csv", column_prefix(d.model));
        std::ofstream out = open_output(path);
        write_preamble(out, cfg, hash);
        write_draws(out, d);
        finish(out, path);
        files.push_back(path);
    }

    const auto model_index = [&](ModelId id) -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < curve.models.size(); ++k)
        {
            if (curve.models[k] == id)
                return k;
        }
        return std::nullopt;
    };

    std::string provenance;
    for (std::size_t k = 0; k < curve.models.size(); ++k)
        provenance += fmt::format("{}{}={}", k ? ";" : "", to_string(curve.models[k]), curve.provenance[k]);

    {
        const auto path = cfg.output_dir / "curve.csv";
        std::ofstream out = open_output(path);
        write_preamble(out, cfg, hash);
        fmt::print(out, "# scenario: {}\n# provenance: {}\n", curve.scenario, provenance);
        fmt::print(out, "# n_draws: {}\n# n_prof: {}\n", curve.n_draws, curve.n_prof);
        std::vector<std::string> header{"phi",         "beta_us_mean", "beta_can_mean", "beta_gp_mean",
                                        "beta_bma_mean", "beta_bma_lo", "beta_bma_hi"};
        for (ModelId id : kAllModels)
        {
            header.push_back(fmt::format("beta_{}_lo", column_prefix(id)));
            header.push_back(fmt::format("beta_{}_hi", column_prefix(id)));
        }
        for (ModelId id : kAllModels)
            header.push_back(fmt::format("pf_{}_mean", column_prefix(id)));
        for (const char* c : {"pf_bma_mean", "pf_bma_lo", "pf_bma_hi"})
            header.emplace_back(c);
        fmt::print(out, "{}\n", fmt::join(header, ","));

        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        for (const CurvePoint& p : curve.points)
        {
            const auto beta = [&](ModelId id) {
                const auto k = model_index(id);
                return k ? p.model_beta[*k] : Summary{nan, nan, nan};
            };
            std::vector<std::string> row{num(p.phi), num(beta(ModelId::US).mean), num(beta(ModelId::Canadian).mean),
                                         num(beta(ModelId::GammaProcess).mean), num(p.bma.beta.mean),
                                         num(p.bma.beta.lo), num(p.bma.beta.hi)};
            for (ModelId id : kAllModels)
            {
                row.push_back(num(beta(id).lo));
                row.push_back(num(beta(id).hi));
            }
            for (ModelId id : kAllModels)
            {
                const auto k = model_index(id);
                row.push_back(num(k ? p.model_pf_mean[*k] : nan));
            }
            row.push_back(num(p.bma.pf.mean));
            row.push_back(num(p.bma.pf.lo));
            row.push_back(num(p.bma.pf.hi));
            fmt::print(out, "{}\n", fmt::join(row, ","));
        }
        finish(out, path);
        files.push_back(path);
    }

    {
        const auto path = cfg.output_dir / "failure_matrix.csv";
        std::ofstream out = open_output(path);
        write_preamble(out, cfg, hash);
        fmt::print(out, "# scenario: {}\n# provenance: {}\n", curve.scenario, provenance);
        fmt::print(out, "model,draw,phi,failures,n_prof,p_f\n");
        const FailureProbMatrix& m = curve.matrix;
        for (std::size_t k = 0; k < m.models().size(); ++k)
        {
            for (std::size_t i = 0; i < m.draws(k); ++i)
            {
                for (std::size_t j = 0; j < m.phis().size(); ++j)
                    fmt::print(out, "{},{},{:.17g},{:.17g},{},{:.17g}\n", to_string(m.models()[k]), i, m.phis()[j],
                               m.failures(k, i, j), m.n_prof(), m.pf(k, i, j));
            }
        }
        finish(out, path);
        files.push_back(path);
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        nlohmann::ordered_json manifest;
        manifest["config_hash"] = format_hash(hash);
        manifest["seed"] = cfg.seed;
        manifest["scenario"] = curve.scenario;
        manifest["n_draws"] = curve.n_draws;
        manifest["n_prof"] = curve.n_prof;
        manifest["phi_grid"] = cfg.phi_grid;
        manifest["common_random_numbers"] = cfg.common_random_numbers;
        manifest["gp_mode"] = cfg.gp_mode == GpMode::Analytic ? "analytic" : "indicator";
        manifest["grid_levels"] = cfg.grid_levels;
        manifest["workers"] = cfg.workers;
        manifest["wall_time_seconds"] = wall;
        auto& models = manifest["models"];
        models = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < curve.models.size(); ++k)
        {
            const ModelId id = curve.models[k];
            const auto ev = std::find_if(evidence.begin(), evidence.end(),
                                         [&](const ModelEvidence& e) { return e.model == id; });
            nlohmann::ordered_json m;
            m["model"] = to_string(id);
            m["bic"] = ev->bic;
            m["prior"] = ev->prior;
            m["posterior_probability"] = posterior.probabilities[k];
            m["posterior_probability_2dp"] = fmt::format("{:.2f}", posterior.probabilities[k]);
            m["provenance"] = curve.provenance[k];
            const auto file = cfg.draw_files.find(id);
            m["draws"] = file != cfg.draw_files.end() ? file->second.string() : std::string("synthetic");
            models.push_back(std::move(m));
        }
        std::vector<std::string> names;
        for (const auto& f : files)
            names.push_back(f.filename().string());
        manifest["files"] = names;

        const auto path = cfg.output_dir / "manifest.json";
        std::ofstream out = open_output(path);
        out << manifest.dump(2) << "\n";
        finish(out, path);
        files.push_back(path);
    }

    return {std::move(curve), std::move(posterior), std::move(files), wall};
}

} // namespace dolrel
