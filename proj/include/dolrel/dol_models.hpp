#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "dolrel/load_gen.hpp"
#include "dolrel/rng.hpp"

namespace dolrel {

/// Phi^{-1}(0.95): the 5th percentile of a lognormal strength sits this many
/// log-sds below the median.
inline constexpr double kZ95 = 1.6448536269514722;

/// Exponents above this are treated as an infinite damage rate.
inline constexpr double kExpOverflow = 700.0;

struct FailureOutcome
{
    bool failed = false;
    std::optional<double> time; ///< hours, when failed
};

/// Lognormal median strength whose 5th percentile equals R_o.
double median_strength(double R_o, double w);

// US model: d(alpha)/dt = exp(-A + B tau(t) / tau_s), tau_s = tau_M exp(w Z).

struct USParams
{
    double A;
    double B;
    double w;
    double tau_M; ///< MPa
};

/// Damage rate per hour at stress ratio tau / tau_s.
double us_rate(const USParams& params, double stress_ratio);
FailureOutcome us_fails(const USParams& params, double z, const DemandProfile& profile);
/// Accumulated damage at time t (no failure stop).
double us_damage(const USParams& params, double z, const DemandProfile& profile, double t);

// Canadian model:
// d(alpha)/dt = [(a tau_s)(tau/tau_s - sigma0)+]^b + [(c tau_s)(tau/tau_s - sigma0)+]^n alpha

/// Location and scale of a lognormal random effect on the log scale.
struct LogEffect
{
    double mu;
    double sigma;

    double at(double z) const;
};

struct CanadianHyper
{
    LogEffect a;
    LogEffect b;
    LogEffect c;
    LogEffect n;
    LogEffect sigma0;
    /// Converts the model's native damage rate to a rate per hour.
    double rate_scale = 1.0;
    /// When set, the specimen strength is this fixed value instead of a draw
    /// from the population strength model.
    std::optional<double> fixed_tau_s;
};

struct CanadianEffects
{
    double a;
    double b;
    double c;
    double n;
    double sigma0;
    double tau_s;
    double rate_scale = 1.0;
};

/// Standard normal scores driving one specimen: a, b, c, n, sigma0, strength.
using CanadianScores = std::array<double, 6>;

CanadianEffects can_effects_from_scores(const CanadianHyper& hyper, const CanadianScores& z,
                                        double tau_M, double w);
CanadianEffects can_sample_effects(Stream& rng, const CanadianHyper& hyper, double tau_M, double w);

/// Rate coefficients of the linear ODE d(alpha)/dt = A_s + B_s alpha at one stress.
struct CanadianRates
{
    double A_s;
    double B_s;
};

CanadianRates can_rates(const CanadianEffects& effects, double stress);
FailureOutcome can_fails(const CanadianEffects& effects, const DemandProfile& profile);
double can_damage(const CanadianEffects& effects, const DemandProfile& profile, double t);

// Gamma process model.

struct GammaProcessParams
{
    double u;
    double a1;
    double a2;
    double a3;
    double t1; ///< hours
    double t2; ///< hours
    double tau_star; ///< MPa
    double xi;
};

/// Stress levels 0 = tau_0 < tau_1 < ... < tau_m.
class LoadGrid
{
  public:
    explicit LoadGrid(std::vector<double> levels);

    /// m uniform steps from 0 to top.
    static LoadGrid uniform(double top, std::size_t m);
    /// m uniform steps from 0 to 1.05 times the profile's maximum stress.
    static LoadGrid spanning(const DemandProfile& profile, std::size_t m);

    std::span<const double> levels() const { return levels_; }
    double top() const { return levels_.back(); }
    std::size_t steps() const { return levels_.size() - 1; }

  private:
    std::vector<double> levels_;
};

inline constexpr std::size_t kDefaultGridLevels = 200;
inline constexpr double kGridHeadroom = 1.05;

/// Piecewise power law, continuous, anchored at g(t1) = 1.
double gp_g(double t, const GammaProcessParams& params);

/// For each level i >= 1, the total time the stress strictly exceeds levels[i],
/// counting only time before `until`.
std::vector<double> exceedance_durations(const DemandProfile& profile, const LoadGrid& grid,
                                         double until);

/// eta = u * sum_i g_values[i] * [(tau_i - tau*)+ - (tau_{i-1} - tau*)+], where
/// g_values[i - 1] holds g of the exceedance duration of level i.
double gp_eta_sum(const GammaProcessParams& params, std::span<const double> g_values,
                  std::span<const double> levels);

/// Gamma process shape at the horizon. Throws InvalidParameter when the grid
/// does not span the profile.
double gp_eta(const GammaProcessParams& params, const DemandProfile& profile, const LoadGrid& grid);
/// Shape accumulated by time t.
double gp_eta_at(const GammaProcessParams& params, const DemandProfile& profile, const LoadGrid& grid,
                 double t);

/// P(Gamma(eta, xi) >= 1), the upper regularized incomplete gamma Q(eta, 1/xi).
double gp_fail_prob_from_eta(double eta, double xi);
double gp_fail_prob(const GammaProcessParams& params, const DemandProfile& profile, const LoadGrid& grid);
/// Bernoulli draw with probability gp_fail_prob.
bool gp_fails(Stream& rng, const GammaProcessParams& params, const DemandProfile& profile,
              const LoadGrid& grid);

} // namespace dolrel
