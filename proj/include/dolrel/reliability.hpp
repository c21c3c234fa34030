#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dolrel/dol_models.hpp"
#include "dolrel/load_gen.hpp"
#include "dolrel/posterior.hpp"
#include "dolrel/rng.hpp"

namespace dolrel {

double normal_cdf(double x);

/// Inverse standard normal CDF. Throws std::domain_error outside (0, 1).
double normal_quantile(double p);

/// Reliability index -Phi^{-1}(pf). Estimates are clamped into
/// [1/(2 n_prof), 1 - 1/(2 n_prof)] so zero or all-failure counts stay finite.
double beta_from_pf(double pf, std::size_t n_prof);

/// Linear interpolation between order statistics (R/NumPy "type 7").
/// `sorted` must be ascending and non-empty.
double sample_quantile(std::span<const double> sorted, double p);

/// Mean and central 95% sample interval.
struct Summary
{
    double mean;
    double lo;
    double hi;
};

Summary summarize(std::span<const double> values);

/// Posterior mean reliability index and its 95% band from per-draw pf.
Summary single_model_summary(std::span<const double> pf, std::size_t n_prof);

enum class GpMode
{
    Analytic,  ///< average the per-profile failure probability
    Indicator, ///< Bernoulli failure indicator per profile
};

struct SimulationOptions
{
    std::uint64_t seed = 20211022;
    std::size_t n_prof = 100000;
    double horizon = kFiftyYearsHours;
    LoadConstants consts{};
    std::size_t grid_levels = kDefaultGridLevels;
    /// Reuse profile j across every draw, model and phi.
    bool common_random_numbers = true;
    GpMode gp_mode = GpMode::Analytic;
    unsigned workers = 1;
    /// Log-sd of the population strength model used for Canadian specimens.
    double canadian_strength_w = 0.426;
};

/// Profiles per work unit. Fixed so results do not depend on the worker count.
inline constexpr std::size_t kProfileBlock = 256;

/// Stream keys of profile j under common random numbers. The profile stream
/// yields the live load; the specimen stream yields six standard normals
/// (Canadian a, b, c, n, sigma0 scores, then the strength score shared with
/// the US model), one uniform for GP indicator mode and then the dead load.
/// Only the live load depends on the scenario.
std::uint64_t crn_profile_key(std::uint64_t seed, const Scenario& scenario, std::size_t j);
std::uint64_t crn_specimen_key(std::uint64_t seed, std::size_t j);

struct ModelInput
{
    ModelId model;
    std::vector<ModelParams> draws;
};

/// Failure totals per (model k, draw i, phi j) over n_prof profiles.
class FailureProbMatrix
{
  public:
    FailureProbMatrix(std::vector<ModelId> models, std::vector<std::size_t> draws_per_model,
                      std::vector<double> phis, std::size_t n_prof);

    std::span<const ModelId> models() const { return models_; }
    std::span<const double> phis() const { return phis_; }
    std::size_t n_prof() const { return n_prof_; }
    std::size_t draws(std::size_t k) const { return draws_[k]; }

    /// Number of failures (expected failures in GP analytic mode).
    double failures(std::size_t k, std::size_t i, std::size_t j) const;
    double& failures(std::size_t k, std::size_t i, std::size_t j);
    double pf(std::size_t k, std::size_t i, std::size_t j) const;
    /// pf of every draw of model k at phi j.
    std::vector<double> column(std::size_t k, std::size_t j) const;

  private:
    std::size_t index(std::size_t k, std::size_t i, std::size_t j) const;

    std::vector<ModelId> models_;
    std::vector<std::size_t> draws_;
    std::vector<std::size_t> offsets_;
    std::vector<double> phis_;
    std::size_t n_prof_;
    std::vector<double> failures_;
};

FailureProbMatrix compute_failure_matrix(const Scenario& scenario, std::span<const double> phis,
                                         std::span<const ModelInput> inputs, const SimulationOptions& opts);

/// Monte Carlo failure probability of one parameter draw at one phi.
double estimate_pf(ModelId model, const ModelParams& draw, const Scenario& scenario, double phi,
                   const SimulationOptions& opts);

/// Per-draw model labels and the pf each label selects.
struct MixedSample
{
    std::vector<std::size_t> labels; ///< index into ModelPosterior::models
    std::vector<double> pf;
};

/// Categorical mixing of per-model pf columns. columns[k] belongs to
/// posterior.models[k]; every column must have the same length.
MixedSample bma_mix(Stream& rng, std::span<const std::vector<double>> columns, const ModelPosterior& posterior);

struct BmaSummary
{
    Summary beta;
    Summary pf;
};

BmaSummary bma_summary(const MixedSample& mixed, std::size_t n_prof);

struct CurvePoint
{
    double phi;
    std::vector<Summary> model_beta; ///< per model, curve model order
    std::vector<double> model_pf_mean;
    BmaSummary bma;
};

struct ReliabilityCurve
{
    std::string scenario;
    std::vector<ModelId> models;
    std::vector<double> posterior;
    std::vector<CurvePoint> points;
    std::vector<std::string> provenance; ///< per model
    std::uint64_t seed;
    std::size_t n_draws;
    std::size_t n_prof;
    FailureProbMatrix matrix;
};

/// Full pipeline: failure matrix, per-model summaries and BMA at every phi.
/// draw_sets must cover exactly the models in the posterior.
ReliabilityCurve build_curve(const Scenario& scenario, std::span<const double> phis,
                             std::span<const DrawSet> draw_sets, const ModelPosterior& posterior,
                             const SimulationOptions& opts);

} // namespace dolrel
