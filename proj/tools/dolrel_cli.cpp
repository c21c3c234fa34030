#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "dolrel/app.hpp"
#include "dolrel/errors.hpp"

namespace {

enum ExitCode : int
{
    kOk = 0,
    kFailure = 1,
    kConfig = 2,
    kValidation = 3,
    kIo = 4,
};

struct Flags
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string output_dir;
    std::vector<std::string> settings;
};

dolrel::RunConfig build_config(const Flags& f)
{
    dolrel::RunConfig cfg;
    if (!f.config.empty())
        dolrel::apply_config_file(cfg, f.config);
    for (const std::string& s : f.settings)
    {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw dolrel::ConfigError(fmt::format("--set expects key=value, got '{}'", s));
        dolrel::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (f.seed)
        cfg.seed = *f.seed;
    if (f.workers)
        cfg.workers = *f.workers;
    if (!f.output_dir.empty())
        cfg.output_dir = f.output_dir;
    return cfg;
}

int run(const std::string& command, const Flags& flags)
{
    const dolrel::RunConfig cfg = build_config(flags);
    if (command == "simulate-loads")
    {
        const auto path = dolrel::run_simulate_loads(cfg);
        fmt::print("wrote {}\n", path.string());
    }
    else if (command == "calibrate-wind")
    {
        for (const auto& r : dolrel::run_calibrate_wind(cfg))
            fmt::print("{:<18} cov {:.3f}  (V^2 eta)_50 = {:.4f} +/- {:.4f}  (configured {:.4f}, n = {})\n", r.city,
                       r.cov_a, r.estimate.value, r.estimate.std_error, r.configured, r.n_samples);
    }
    else
    {
        const auto result = dolrel::run_assess(cfg);
        for (std::size_t k = 0; k < result.posterior.models.size(); ++k)
            fmt::print("P({}) = {:.4f}\n", dolrel::to_string(result.posterior.models[k]),
                       result.posterior.probabilities[k]);
        for (const auto& f : result.files)
            fmt::print("wrote {}\n", f.string());
        fmt::print("{:.1f} s\n", result.wall_seconds);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Duration-of-load reliability of lumber under stochastic loads"};
    app.require_subcommand(1);

    Flags flags;
    app.add_option("-c,--config", flags.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "master seed");
    app.add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("-o,--output-dir", flags.output_dir, "directory for output files");
    app.add_option("--set", flags.settings, "override one setting, key=value (repeatable)");

    std::string command;
    for (const char* name : {"simulate-loads", "calibrate-wind", "assess"})
    {
        const char* help = name == std::string("simulate-loads")   ? "write live-load traces for a scenario"
                           : name == std::string("calibrate-wind") ? "Monte Carlo 50-year wind quantiles"
                                                                   : "reliability curves for a scenario";
        app.add_subcommand(name, help)->fallthrough()->callback([&command, name] { command = name; });
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try
    {
        return run(command, flags);
    }
    catch (const dolrel::ConfigError& e)
    {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    }
    catch (const dolrel::InvalidParameter& e)
    {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    }
    catch (const dolrel::ValidationError& e)
    {
        fmt::print(stderr, "validation error: {}\n", e.what());
        return kValidation;
    }
    catch (const dolrel::IoError& e)
    {
        fmt::print(stderr, "i/o error: {}\n", e.what());
        return kIo;
    }
    catch (const std::exception& e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return kFailure;
    }
}
