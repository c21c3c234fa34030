#pragma once

// Randomized constant- and two-step-load instances for the US and Canadian
// damage models, shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include "dolrel/dol_models.hpp"
#include "dolrel/load_gen.hpp"
#include "dolrel/rng.hpp"
#include "ode_oracle.hpp"

namespace instances {

struct Instance
{
    dolrel::DemandProfile profile;
    std::vector<oracle::Piece> pieces;
};

inline Instance make_instance(const std::vector<oracle::Piece>& pieces)
{
    std::vector<dolrel::Segment> segs;
    double t = 0.0;
    for (const auto& p : pieces)
    {
        segs.push_back({t, t + p.duration, p.stress});
        t += p.duration;
    }
    return {dolrel::DemandProfile::from_segments(t, 0.0, segs), pieces};
}

inline double uniform(dolrel::Stream& rng, double lo, double hi)
{
    return lo + (hi - lo) * rng.uniform();
}

struct USCase
{
    dolrel::USParams params;
    double z;
    Instance load;
};

inline USCase us_case(dolrel::Stream& rng, bool two_step)
{
    USCase c;
    c.params = {uniform(rng, 40, 75), uniform(rng, 50, 90), 0.426, 41.67};
    c.z = rng.normal();
    const double tau_s = c.params.tau_M * std::exp(c.params.w * c.z);
    const auto stress_for = [&](double exponent) { return (c.params.A + exponent) / c.params.B * tau_s; };
    if (!two_step)
    {
        const double e = uniform(rng, -11, -1);
        c.load = make_instance({{20.0 * std::exp(-e), stress_for(e)}});
    }
    else
    {
        const double e1 = uniform(rng, -14, -8);
        const double e2 = uniform(rng, -8, -1);
        c.load = make_instance({{uniform(rng, 0.2, 0.9) * std::exp(-e1), stress_for(e1)},
                                {20.0 * std::exp(-e2), stress_for(e2)}});
    }
    return c;
}

inline oracle::Rate us_rate_fn(const dolrel::USParams& p, double z)
{
    const double tau_s = p.tau_M * std::exp(p.w * z);
    return [=](double, double stress) { return std::exp(-p.A + p.B * stress / tau_s); };
}

struct CanadianCase
{
    dolrel::CanadianEffects effects;
    Instance load;
};

inline CanadianCase canadian_case(dolrel::Stream& rng, bool two_step)
{
    CanadianCase c;
    auto& e = c.effects;
    e.tau_s = uniform(rng, 20, 60);
    e.sigma0 = uniform(rng, 0.2, 0.6);
    e.b = uniform(rng, 0.5, 2.0);
    e.n = uniform(rng, 0.5, 2.0);
    const double x1 = uniform(rng, 0.05, 0.4);
    const double A = std::pow(10.0, uniform(rng, -5, -2));
    const double B = std::pow(10.0, uniform(rng, -4, -1.5));
    e.a = std::pow(A, 1.0 / e.b) / (e.tau_s * x1);
    e.c = std::pow(B, 1.0 / e.n) / (e.tau_s * x1);
    const double s1 = (e.sigma0 + x1) * e.tau_s;
    const double scale = 1.0 / (A + B);
    if (!two_step)
    {
        c.load = make_instance({{50.0 * scale, s1}});
    }
    else
    {
        // Sometimes start below the threshold, where nothing accumulates.
        const double first = rng.uniform() < 0.25 ? 0.5 * e.sigma0 * e.tau_s : s1;
        const double s2 = (e.sigma0 + x1 * uniform(rng, 1.2, 2.0)) * e.tau_s;
        c.load = make_instance({{uniform(rng, 0.2, 0.8) * scale, first}, {50.0 * scale, s2}});
    }
    return c;
}

inline oracle::Rate canadian_rate_fn(const dolrel::CanadianEffects& e)
{
    return [=](double alpha, double stress) {
        const double x = std::max(0.0, stress / e.tau_s - e.sigma0);
        if (x == 0.0)
            return 0.0;
        return e.rate_scale * (std::pow(e.a * e.tau_s * x, e.b) + std::pow(e.c * e.tau_s * x, e.n) * alpha);
    };
}

} // namespace instances
