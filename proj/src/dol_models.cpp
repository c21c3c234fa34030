#include "dolrel/dol_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/core.h>

#include "dolrel/errors.hpp"

namespace dolrel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double positive_part(double x)
{
    return x > 0.0 ? x : 0.0;
}

// One constant-stress piece of the Canadian ODE starting from alpha0.
// Returns the time from piece start to alpha = 1, or +inf if that never
// happens under these rates.
double can_time_to_failure(const CanadianRates& r, double alpha0)
{
    if (alpha0 >= 1.0)
        return 0.0;
    if (std::isinf(r.A_s) || (std::isinf(r.B_s) && alpha0 > 0.0))
        return 0.0;
    if (r.B_s == 0.0)
        return r.A_s > 0.0 ? (1.0 - alpha0) / r.A_s : kInf;
    if (std::isinf(r.B_s))
        return r.A_s > 0.0 ? 0.0 : kInf;
    const double drive = alpha0 * r.B_s + r.A_s;
    if (drive <= 0.0)
        return kInf;
    return std::log1p((1.0 - alpha0) * r.B_s / drive) / r.B_s;
}

double can_advance(const CanadianRates& r, double alpha0, double dt)
{
    if (r.B_s == 0.0)
        return alpha0 + r.A_s * dt;
    const double bdt = r.B_s * dt;
    if (bdt > kExpOverflow)
        return (alpha0 > 0.0 || r.A_s > 0.0) ? kInf : alpha0;
    return alpha0 + (alpha0 * r.B_s + r.A_s) * (std::expm1(bdt) / r.B_s);
}

} // namespace

double median_strength(double R_o, double w)
{
    if (!(R_o > 0.0) || !(w >= 0.0))
        throw InvalidParameter(fmt::format("strength model needs R_o > 0 and w >= 0 (got {}, {})", R_o, w));
    return R_o * std::exp(kZ95 * w);
}

double us_rate(const USParams& params, double stress_ratio)
{
    const double exponent = -params.A + params.B * stress_ratio;
    if (exponent > kExpOverflow)
        return kInf;
    return std::exp(exponent);
}

FailureOutcome us_fails(const USParams& params, double z, const DemandProfile& profile)
{
    const double tau_s = params.tau_M * std::exp(params.w * z);
    FailureOutcome out;
    double alpha = 0.0;
    profile.for_each_piece([&](double start, double end, double stress) {
        const double rate = us_rate(params, stress / tau_s);
        if (std::isinf(rate))
        {
            out = {true, start};
            return false;
        }
        const double next = alpha + rate * (end - start);
        if (next >= 1.0)
        {
            out = {true, std::min(end, start + (1.0 - alpha) / rate)};
            return false;
        }
        alpha = next;
        return true;
    });
    return out;
}

double us_damage(const USParams& params, double z, const DemandProfile& profile, double t)
{
    const double tau_s = params.tau_M * std::exp(params.w * z);
    double alpha = 0.0;
    profile.for_each_piece([&](double start, double end, double stress) {
        if (start >= t)
            return false;
        alpha += us_rate(params, stress / tau_s) * (std::min(end, t) - start);
        return true;
    });
    return alpha;
}

double LogEffect::at(double z) const
{
    return std::exp(mu + sigma * z);
}

CanadianEffects can_effects_from_scores(const CanadianHyper& hyper, const CanadianScores& z,
                                        double tau_M, double w)
{
    CanadianEffects e;
    e.a = hyper.a.at(z[0]);
    e.b = hyper.b.at(z[1]);
    e.c = hyper.c.at(z[2]);
    e.n = hyper.n.at(z[3]);
    e.sigma0 = hyper.sigma0.at(z[4]);
    e.tau_s = hyper.fixed_tau_s ? *hyper.fixed_tau_s : tau_M * std::exp(w * z[5]);
    e.rate_scale = hyper.rate_scale;
    return e;
}

CanadianEffects can_sample_effects(Stream& rng, const CanadianHyper& hyper, double tau_M, double w)
{
    CanadianScores z;
    for (double& zi : z)
        zi = rng.normal();
    return can_effects_from_scores(hyper, z, tau_M, w);
}

CanadianRates can_rates(const CanadianEffects& e, double stress)
{
    const double excess = positive_part(stress / e.tau_s - e.sigma0);
    if (excess == 0.0)
        return {0.0, 0.0};
    return {e.rate_scale * std::pow(e.a * e.tau_s * excess, e.b),
            e.rate_scale * std::pow(e.c * e.tau_s * excess, e.n)};
}

FailureOutcome can_fails(const CanadianEffects& effects, const DemandProfile& profile)
{
    FailureOutcome out;
    // Below the threshold everywhere: alpha stays at zero.
    if (profile.max_stress() / effects.tau_s <= effects.sigma0)
        return out;

    double alpha = 0.0;
    profile.for_each_piece([&](double start, double end, double stress) {
        const CanadianRates r = can_rates(effects, stress);
        if (r.A_s == 0.0 && r.B_s == 0.0)
            return true;
        const double dt = end - start;
        const double t_fail = can_time_to_failure(r, alpha);
        if (t_fail <= dt)
        {
            out = {true, start + t_fail};
            return false;
        }
        alpha = can_advance(r, alpha, dt);
        return true;
    });
    return out;
}

double can_damage(const CanadianEffects& effects, const DemandProfile& profile, double t)
{
    double alpha = 0.0;
    profile.for_each_piece([&](double start, double end, double stress) {
        if (start >= t)
            return false;
        alpha = can_advance(can_rates(effects, stress), alpha, std::min(end, t) - start);
        return true;
    });
    return alpha;
}

LoadGrid::LoadGrid(std::vector<double> levels) : levels_(std::move(levels))
{
    if (levels_.size() < 2 || levels_.front() != 0.0)
        throw InvalidParameter("load grid needs at least two levels starting at zero");
    for (std::size_t i = 1; i < levels_.size(); ++i)
    {
        if (!(levels_[i] > levels_[i - 1]))
            throw InvalidParameter("load grid levels must be strictly increasing");
    }
}

LoadGrid LoadGrid::uniform(double top, std::size_t m)
{
    if (!(top > 0.0) || m < 1)
        throw InvalidParameter("uniform load grid needs a positive top and at least one step");
    std::vector<double> levels(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
        levels[i] = top * static_cast<double>(i) / static_cast<double>(m);
    return LoadGrid(std::move(levels));
}

LoadGrid LoadGrid::spanning(const DemandProfile& profile, std::size_t m)
{
    const double peak = profile.max_stress();
    return uniform(peak > 0.0 ? kGridHeadroom * peak : 1.0, m);
}

double gp_g(double t, const GammaProcessParams& p)
{
    if (t <= 0.0)
        return 0.0;
    if (t <= p.t1)
        return std::pow(t / p.t1, p.a1);
    if (t <= p.t2)
        return std::pow(t / p.t1, p.a2);
    return std::pow(p.t2 / p.t1, p.a2) * std::pow(t / p.t2, p.a3);
}

std::vector<double> exceedance_durations(const DemandProfile& profile, const LoadGrid& grid, double until)
{
    std::vector<std::pair<double, double>> pieces; // (stress, duration)
    pieces.reserve(2 * profile.segments().size() + 1);
    profile.for_each_piece([&](double start, double end, double stress) {
        if (start >= until)
            return false;
        pieces.emplace_back(stress, std::min(end, until) - start);
        return true;
    });
    std::sort(pieces.begin(), pieces.end(),
              [](const auto& x, const auto& y) { return x.first > y.first; });

    const auto levels = grid.levels();
    std::vector<double> out(levels.size() - 1, 0.0);
    double above = 0.0;
    std::size_t k = 0;
    for (std::size_t i = levels.size() - 1; i >= 1; --i)
    {
        while (k < pieces.size() && pieces[k].first > levels[i])
            above += pieces[k++].second;
        out[i - 1] = above;
    }
    return out;
}

double gp_eta_sum(const GammaProcessParams& params, std::span<const double> g_values,
                  std::span<const double> levels)
{
    double sum = 0.0;
    for (std::size_t i = 1; i < levels.size(); ++i)
    {
        const double g = g_values[i - 1];
        if (g == 0.0)
            continue;
        const double d = positive_part(levels[i] - params.tau_star) - positive_part(levels[i - 1] - params.tau_star);
        sum += g * d;
    }
    return params.u * sum;
}

double gp_eta_at(const GammaProcessParams& params, const DemandProfile& profile, const LoadGrid& grid,
                 double t)
{
    if (profile.max_stress() > grid.top())
        throw InvalidParameter(fmt::format("load grid top {} is below the profile maximum {}", grid.top(),
                                           profile.max_stress()));
    std::vector<double> g = exceedance_durations(profile, grid, t);
    for (double& x : g)
        x = gp_g(x, params);
    return gp_eta_sum(params, g, grid.levels());
}

double gp_eta(const GammaProcessParams& params, const DemandProfile& profile, const LoadGrid& grid)
{
    return gp_eta_at(params, profile, grid, profile.horizon());
}

double gp_fail_prob_from_eta(double eta, double xi)
{
    if (!(eta > 0.0))
        return 0.0;
    return boost::math::gamma_q(eta, 1.0 / xi);
}

double gp_fail_prob(const GammaProcessParams& params, const DemandProfile& profile, const LoadGrid& grid)
{
    return gp_fail_prob_from_eta(gp_eta(params, profile, grid), params.xi);
}

bool gp_fails(Stream& rng, const GammaProcessParams& params, const DemandProfile& profile,
              const LoadGrid& grid)
{
    return rng.uniform() < gp_fail_prob(params, profile, grid);
}

} // namespace dolrel
