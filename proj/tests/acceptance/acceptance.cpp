// Acceptance checks. Prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "dolrel/app.hpp"
#include "dolrel/config.hpp"
#include "dolrel/dol_models.hpp"
#include "dolrel/load_gen.hpp"
#include "dolrel/posterior.hpp"
#include "dolrel/reliability.hpp"
#include "support/damage_instances.hpp"
#include "support/ode_oracle.hpp"

using namespace dolrel;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail)
{
    fmt::print("{} [{}] {}\n", ok ? "PASS" : "FAIL", id, detail);
    std::fflush(stdout);
    failures += !ok;
}

struct Moments
{
    double mean;
    double sd;
    double se_mean;
};

Moments moments(const std::vector<double>& x)
{
    double sum = 0.0;
    for (double v : x)
        sum += v;
    const double mean = sum / x.size();
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (x.size() - 1));
    return {mean, sd, sd / std::sqrt(double(x.size()))};
}

// Standard error of a statistic from 100 equal batches.
double batch_se(const std::vector<double>& x, const std::function<double(const std::vector<double>&)>& stat)
{
    const std::size_t k = 100;
    const std::size_t len = x.size() / k;
    std::vector<double> values;
    for (std::size_t b = 0; b < k; ++b)
        values.push_back(stat(std::vector<double>(x.begin() + b * len, x.begin() + (b + 1) * len)));
    return moments(values).sd / std::sqrt(double(k));
}

GammaProcessParams table_gp()
{
    return {0.084, 3.7e-9, 0.027, 0.094, 0.00144, 2327.0, 4.35, 0.27};
}

void criterion_posterior()
{
    const auto t0 = Clock::now();
    const ModelPosterior post = model_posterior_probs(default_evidence());
    double us = 0, can = 0, gp = 0;
    for (std::size_t k = 0; k < post.models.size(); ++k)
    {
        (post.models[k] == ModelId::US ? us : post.models[k] == ModelId::Canadian ? can : gp) =
            post.probabilities[k];
    }
    const bool ok = std::abs(can - 0.8808) < 1e-4 && std::abs(gp - 0.1192) < 1e-4 && us < 1e-4 &&
                    fmt::format("{:.2f}/{:.2f}/{:.2f}", us, can, gp) == "0.00/0.88/0.12";
    report(1, ok,
           fmt::format("posterior US {:.3g}, Canadian {:.6f}, GammaProcess {:.6f} ({:.4f} s)", us, can, gp,
                       seconds_since(t0)));
}

void criterion_wind()
{
    const auto t0 = Clock::now();
    Stream rng(stream_key(20211022, {12, label_hash("Halifax")}));
    const QuantileEstimate q = calibrate_wind_quantile(rng, find_wind_city("Halifax"), 1000000);
    const double dt = seconds_since(t0);
    const double rel = std::abs(q.value / 1.5913 - 1.0);
    report(2, rel < 0.01 && dt < 5.0,
           fmt::format("Halifax (V^2 eta)_50 = {:.4f} +/- {:.4f}, {:.2f}% from 1.5913 ({:.2f} s)", q.value,
                       q.std_error, 100 * rel, dt));
}

void criterion_snow()
{
    bool ok = true;
    std::string detail;
    for (const CitySnowParams& c : builtin_snow_cities())
    {
        const auto t0 = Clock::now();
        const SnowOccurrence occ = snow_occurrence_prob(c, kDefaultSnowSegments);
        const double identity = std::abs(std::pow(1.0 - occ.pe, kDefaultSnowSegments) - occ.p0);
        Stream rng(stream_key(20211022, {label_hash(c.name)}));
        std::vector<double> annual_max(100000, 0.0);
        for (double& m : annual_max)
        {
            for (int s = 0; s < kDefaultSnowSegments; ++s)
            {
                if (rng.uniform() < occ.pe)
                    m = std::max(m, sample_segment_snow(rng, c, kDefaultSnowSegments));
            }
        }
        std::sort(annual_max.begin(), annual_max.end());
        const double q = sample_quantile(annual_max, 0.98);
        const double dt = seconds_since(t0);
        // Probabilities near one carry absolute rounding of order epsilon.
        const bool city_ok =
            identity <= 4 * std::numeric_limits<double>::epsilon() && std::abs(q - 1.0) <= 0.02 && dt < 10.0;
        ok = ok && city_ok;
        detail += fmt::format("{}{} q98={:.4f} |id|={:.1e} {:.2f}s", detail.empty() ? "" : "; ", c.name, q,
                              identity, dt);
    }
    report(3, ok, detail);
}

// Exceedance-grid self-convergence: 10^2 versus 10^4 levels.
double grid_convergence(const GammaProcessParams& p, const DemandProfile& profile)
{
    const double coarse = gp_eta(p, profile, LoadGrid::spanning(profile, 100));
    const double fine = gp_eta(p, profile, LoadGrid::spanning(profile, 10000));
    if (fine == 0.0)
        return coarse == 0.0 ? 0.0 : 1.0;
    return std::abs(coarse / fine - 1.0);
}

void criterion_damage_models()
{
    const auto t0 = Clock::now();

    Stream rng(stream_key(20211022, {4, 1}));
    double worst_us = 0.0, worst_can = 0.0;
    bool ode_ok = true;
    for (int i = 0; i < 100; ++i)
    {
        const bool two = i % 2 == 1;
        const auto us = instances::us_case(rng, two);
        const auto want = oracle::integrate(instances::us_rate_fn(us.params, us.z), us.load.pieces);
        const auto got = us_fails(us.params, us.z, us.load.profile);
        if (!want.failure_time || !got.failed)
            ode_ok = false;
        else
            worst_us = std::max(worst_us, std::abs(*got.time / *want.failure_time - 1.0));

        const auto can = instances::canadian_case(rng, two);
        const auto cwant = oracle::integrate(instances::canadian_rate_fn(can.effects), can.load.pieces);
        const auto cgot = can_fails(can.effects, can.load.profile);
        if (cwant.failure_time.has_value() != cgot.failed)
            ode_ok = false;
        else if (cgot.failed)
            worst_can = std::max(worst_can, std::abs(*cgot.time / *cwant.failure_time - 1.0));
    }
    ode_ok = ode_ok && worst_us < 1e-6 && worst_can < 1e-6;

    // Grid convergence on random two-step loads and on simulated residential demand.
    const GammaProcessParams p = table_gp();
    Stream srng(stream_key(20211022, {4, 2}));
    double worst_step = 0.0;
    int within = 0;
    for (int i = 0; i < 100; ++i)
    {
        const double tau_a = 3.0 + 7.0 * srng.uniform();
        const double tau_b = tau_a + 0.5 + 4.5 * srng.uniform();
        const double d_a = std::pow(10.0, 2.0 + 3.0 * srng.uniform());
        const double d_b = std::pow(10.0, 4.0 * srng.uniform());
        const auto profile =
            DemandProfile::from_segments(d_a + d_b, 0.0, {{0.0, d_a, tau_a}, {d_a, d_a + d_b, tau_b}});
        const double diff = grid_convergence(p, profile);
        worst_step = std::max(worst_step, diff);
        within += diff < 0.005;
    }
    double worst_sim = 0.0;
    int sim_within = 0;
    const LoadConstants consts;
    for (std::size_t j = 0; j < 200; ++j)
    {
        Stream prng(stream_key(20211022, {4, 3, j}));
        const LiveLoadTrace live = gen_residential(prng, kFiftyYearsHours);
        const DemandProfile profile = compose_demand(live, sample_dead_load(prng, consts), 1.0, consts);
        const double diff = grid_convergence(p, profile);
        worst_sim = std::max(worst_sim, diff);
        sim_within += diff < 0.005;
    }
    const bool grid_ok = worst_step < 0.005 && worst_sim < 0.005;

    // Damage at the horizon as a sum of independent gamma increments.
    const auto steps = DemandProfile::from_segments(3200.0, 0.0, {{0.0, 3000.0, 6.0}, {3000.0, 3200.0, 9.0}});
    const LoadGrid grid = LoadGrid::spanning(steps, 200);
    const auto durations = exceedance_durations(steps, grid, steps.horizon());
    const auto levels = grid.levels();
    std::vector<double> shapes;
    for (std::size_t i = 1; i < levels.size(); ++i)
    {
        const double d = std::max(0.0, levels[i] - p.tau_star) - std::max(0.0, levels[i - 1] - p.tau_star);
        const double s = p.u * gp_g(durations[i - 1], p) * d;
        if (s > 0.0)
            shapes.push_back(s);
    }
    const double eta = gp_eta(p, steps, grid);
    Stream grng(stream_key(20211022, {4, 4}));
    std::vector<double> alpha(100000);
    for (double& a : alpha)
    {
        a = 0.0;
        for (double s : shapes)
            a += grng.gamma(s, p.xi);
    }
    const Moments m = moments(alpha);
    const double z = (m.mean - p.xi * eta) / m.se_mean;
    const bool mean_ok = std::abs(z) < 3.0;

    const double dt = seconds_since(t0);
    report(4, ode_ok && grid_ok && mean_ok && dt < 60.0,
           fmt::format("ODE worst rel err US {:.1e}, Canadian {:.1e}; grid 1e2 vs 1e4 worst {:.3f}% "
                       "({}/100 two-step loads within 0.5%), {:.3f}% ({}/200 residential profiles); alpha mean {:.5f} vs xi*eta {:.5f} ({:+.2f} SE) ({:.1f} s)",
                       worst_us, worst_can, 100 * worst_step, within, 100 * worst_sim, sim_within, m.mean, p.xi * eta, z, dt));
}

void criterion_distributions()
{
    const auto t0 = Clock::now();
    const std::size_t n = 1000000;

    std::vector<double> sustained;
    Stream rrng(stream_key(20211022, {5, 1}));
    while (sustained.size() < n)
    {
        for (const Segment& s : gen_residential_components(rrng, kFiftyYearsHours).sustained.segments())
        {
            if (sustained.size() < n)
                sustained.push_back(s.value);
        }
    }
    const Moments ms = moments(sustained);
    const double want_sustained = kSustainedShape * kSustainedScale;
    const bool sustained_ok = std::abs(ms.mean - want_sustained) < 3 * ms.se_mean;

    std::vector<double> dead(n);
    Stream drng(stream_key(20211022, {5, 2}));
    const LoadConstants consts;
    for (double& d : dead)
        d = sample_dead_load(drng, consts);
    const Moments md = moments(dead);
    const double sd_se = batch_se(dead, [](const std::vector<double>& v) { return moments(v).sd; });
    const bool dead_ok = std::abs(md.mean - 1.05) < 3 * md.se_mean && std::abs(md.sd - 0.1) < 3 * sd_se;

    std::vector<double> roof(n);
    Stream frng(stream_key(20211022, {5, 3}));
    const LognormalParams rf = moment_match_lognormal(kRoofFactorMean, kRoofFactorCov);
    for (double& r : roof)
        r = rf.sample(frng);
    const Moments mr = moments(roof);
    const auto cov = [](const std::vector<double>& v) {
        const Moments m = moments(v);
        return m.sd / m.mean;
    };
    const double cov_se = batch_se(roof, cov);
    const bool roof_ok = std::abs(mr.mean - 0.6) < 3 * mr.se_mean && std::abs(mr.sd / mr.mean - 0.42) < 3 * cov_se;

    const double dt = seconds_since(t0);
    report(5, sustained_ok && dead_ok && roof_ok && dt < 30.0,
           fmt::format("sustained mean {:.5f} ({:+.2f} SE); dead mean {:.5f} ({:+.2f} SE) sd {:.5f} ({:+.2f} SE); "
                       "roof mean {:.5f} ({:+.2f} SE) CoV {:.5f} ({:+.2f} SE) ({:.1f} s)",
                       ms.mean, (ms.mean - want_sustained) / ms.se_mean, md.mean, (md.mean - 1.05) / md.se_mean,
                       md.sd, (md.sd - 0.1) / sd_se, mr.mean, (mr.mean - 0.6) / mr.se_mean, mr.sd / mr.mean,
                       (mr.sd / mr.mean - 0.42) / cov_se, dt));
}

RunConfig desk_config(const std::string& scenario)
{
    RunConfig cfg;
    cfg.scenario = scenario;
    cfg.n_draws = 50;
    cfg.n_prof = 10000;
    cfg.phi_grid = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
    cfg.common_random_numbers = true;
    cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    return cfg;
}

void criterion_orderings()
{
    const auto t0 = Clock::now();
    const std::vector<std::string> names{"residential", "snow:Vancouver", "snow:Quebec City", "wind:Halifax"};
    std::vector<ReliabilityCurve> curves;
    for (const std::string& name : names)
    {
        const RunConfig cfg = desk_config(name);
        const ModelPosterior post = model_posterior_probs(cfg.evidence);
        const auto draws = assemble_draws(cfg, post.models);
        curves.push_back(build_curve(cfg.resolve_scenario(), cfg.phi_grid, draws, post, cfg.simulation_options()));
    }
    const auto& res = curves[0];
    const auto& van = curves[1];
    const auto& que = curves[2];
    const auto& hal = curves[3];
    const std::size_t n_phi = res.points.size();
    const auto bma = [](const ReliabilityCurve& c, std::size_t j) { return c.points[j].bma.beta.mean; };

    bool a = true, b = true, c = true, d = true, e = true;
    for (std::size_t j = 0; j < n_phi; ++j)
    {
        a = a && bma(van, j) > bma(que, j);
        b = b && bma(res, j) > bma(van, j) && bma(res, j) > bma(que, j) && bma(res, j) > bma(hal, j);
        c = c && bma(hal, j) > bma(que, j);
    }
    for (const ReliabilityCurve& curve : curves)
    {
        for (std::size_t j = 0; j < n_phi; ++j)
        {
            const CurvePoint& p = curve.points[j];
            for (std::size_t k = 0; k < curve.models.size(); ++k)
            {
                if (j > 0 && p.model_beta[k].mean > curve.points[j - 1].model_beta[k].mean)
                    d = false;
            }
            double lo_min = 1e300, lo_max = -1e300, hi_min = 1e300, hi_max = -1e300;
            for (std::size_t k = 0; k < curve.models.size(); ++k)
            {
                // Models the mixture can actually select.
                if (curve.posterior[k] < 1e-12)
                    continue;
                lo_min = std::min(lo_min, p.model_beta[k].lo);
                lo_max = std::max(lo_max, p.model_beta[k].lo);
                hi_min = std::min(hi_min, p.model_beta[k].hi);
                hi_max = std::max(hi_max, p.model_beta[k].hi);
            }
            e = e && p.bma.beta.lo >= lo_min && p.bma.beta.lo <= lo_max && p.bma.beta.hi >= hi_min &&
                p.bma.beta.hi <= hi_max;
        }
    }

    std::string table;
    for (std::size_t j = 0; j < n_phi; ++j)
        table += fmt::format(" phi={:.1f}:{:.3f}/{:.3f}/{:.3f}/{:.3f}", res.points[j].phi, bma(res, j), bma(van, j),
                             bma(que, j), bma(hal, j));
    const double dt = seconds_since(t0);
    report(6, a && b && c && d && e && dt < 900.0,
           fmt::format("(a) {} (b) {} (c) {} (d) {} (e) {}; BMA beta res/van/que/hal:{} ({:.0f} s)", a, b, c, d, e,
                       table, dt));
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_workers()
{
    const auto t0 = Clock::now();
    const fs::path dir = fs::temp_directory_path() / "dolrel_acceptance";
    fs::remove_all(dir);
    std::vector<fs::path> outs;
    for (unsigned w : {1u, 8u})
    {
        RunConfig cfg = desk_config("wind:Halifax");
        cfg.n_prof = 2000;
        cfg.workers = w;
        cfg.output_dir = dir / fmt::format("w{}", w);
        run_assess(cfg);
        outs.push_back(cfg.output_dir);
    }
    bool same = true;
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(outs[0]))
    {
        if (entry.path().extension() != ".csv")
            continue;
        same = same && slurp(entry.path()) == slurp(outs[1] / entry.path().filename());
        ++compared;
    }
    report(7, same && compared >= 5,
           fmt::format("{} CSV files identical between 1 and 8 workers: {} ({:.1f} s)", compared, same,
                       seconds_since(t0)));
}

void criterion_mc_error()
{
    const auto t0 = Clock::now();
    const USParams p{68.5, 79.7, 0.426, median_strength(20.68, 0.426)};
    const Scenario sc = Scenario::residential();
    SimulationOptions o;
    o.n_prof = 10000;
    o.workers = std::max(1u, std::thread::hardware_concurrency());

    // Load factor giving p_F near 0.05 on a separate calibration seed.
    o.seed = 1;
    double lo = 0.5, hi = 3.0;
    for (int it = 0; it < 30; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (estimate_pf(ModelId::US, p, sc, mid, o) < 0.05 ? lo : hi) = mid;
    }
    const double phi = 0.5 * (lo + hi);

    std::vector<double> est;
    for (std::uint64_t s = 0; s < 30; ++s)
    {
        o.seed = 1000 + s;
        est.push_back(estimate_pf(ModelId::US, p, sc, phi, o));
    }
    const Moments m = moments(est);
    const double binomial = std::sqrt(0.05 * 0.95 / 1e4);
    const double ratio = m.sd / binomial;
    report(8, ratio > 0.5 && ratio < 2.0,
           fmt::format("phi {:.4f}: mean p_F {:.4f}, sd {:.5f} vs binomial {:.5f} (ratio {:.2f}) ({:.1f} s)", phi,
                       m.mean, m.sd, binomial, ratio, seconds_since(t0)));
}

} // namespace

// Exits non-zero only on errors, or with --strict when a criterion fails.
int main(int argc, char** argv)
{
    const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
    criterion_posterior();
    criterion_wind();
    criterion_snow();
    criterion_damage_models();
    criterion_distributions();
    criterion_mc_error();
    criterion_workers();
    criterion_orderings();
    fmt::print("{} of 8 criteria failed\n", failures);
    return strict && failures > 0 ? 1 : 0;
}
