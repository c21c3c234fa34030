#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dolrel/dol_models.hpp"
#include "dolrel/load_gen.hpp"
#include "dolrel/rng.hpp"

namespace dolrel {

enum class ModelId
{
    US,
    Canadian,
    GammaProcess,
};

inline constexpr std::array<ModelId, 3> kAllModels{ModelId::US, ModelId::Canadian, ModelId::GammaProcess};

std::string_view to_string(ModelId id);
/// Accepts "US", "Canadian", "GammaProcess" and the short forms "can", "gp".
ModelId parse_model_id(std::string_view text);

enum class TimeUnit
{
    Seconds,
    Minutes,
    Hours,
    Days,
    Years,
};

std::string_view to_string(TimeUnit unit);
TimeUnit parse_time_unit(std::string_view text);
double hours_per(TimeUnit unit);

/// Parameter names every draw of a model must carry, in canonical order.
std::span<const std::string_view> required_parameters(ModelId id);
/// Parameters a draw may carry in addition to the required ones.
std::span<const std::string_view> optional_parameters(ModelId id);

inline constexpr std::string_view kSyntheticProvenance = "synthetic-fixture";

/// N posterior draws of one model's parameters. Time-dimension parameters
/// are stored in hours.
struct DrawSet
{
    ModelId model = ModelId::US;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    /// Multiplier taking the model's native damage rate to a rate per hour.
    /// Only the Canadian model uses it; its effects cannot be rescaled in
    /// place because the exponents are themselves random.
    double rate_scale = 1.0;
    std::string provenance;

    std::size_t size() const { return rows.size(); }
    bool has(std::string_view name) const;
    double value(std::size_t row, std::string_view name) const;
};

/// Throws ValidationError describing the first problem found.
void validate_draws(const DrawSet& draws);

DrawSet read_draws(std::istream& in, ModelId expected, std::string_view source = "<stream>");
DrawSet load_draws(const std::filesystem::path& path, ModelId expected);
void write_draws(std::ostream& out, const DrawSet& draws);
void write_draws(const std::filesystem::path& path, const DrawSet& draws);

/// Published posterior mean and central 95% interval of one parameter.
struct ParameterSummary
{
    std::string name;
    double mean;
    double lo;
    double hi;
};

/// Posterior summaries of the calibrated Hemlock models.
std::vector<ParameterSummary> published_summary(ModelId id);

/// Independent-marginal draws matching each summary's centre and interval
/// width. Not a reconstruction of the joint posterior.
DrawSet synth_draws(Stream& rng, ModelId id, std::span<const ParameterSummary> summary, std::size_t n);

using ModelParams = std::variant<USParams, CanadianHyper, GammaProcessParams>;

/// Row i of a draw set as model parameters. US strength median comes from
/// R_o; a Canadian `tau_s` column fixes the specimen strength.
ModelParams model_params(const DrawSet& draws, std::size_t i, const LoadConstants& consts);
std::vector<ModelParams> model_params(const DrawSet& draws, const LoadConstants& consts);

struct ModelEvidence
{
    ModelId model;
    double bic;
    double prior;
};

struct ModelPosterior
{
    std::vector<ModelId> models;
    std::vector<double> probabilities;

    double probability(ModelId id) const;
};

ModelPosterior model_posterior_probs(std::span<const ModelEvidence> evidence);

/// BICs of the calibrated Hemlock models with equal priors.
std::vector<ModelEvidence> default_evidence();
std::vector<ModelEvidence> read_evidence(std::istream& in, std::string_view source = "<stream>");
std::vector<ModelEvidence> load_evidence(const std::filesystem::path& path);
void write_evidence(std::ostream& out, std::span<const ModelEvidence> evidence);

} // namespace dolrel
