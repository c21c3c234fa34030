#include "dolrel/reliability.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <fmt/core.h>

#include "dolrel/errors.hpp"

namespace dolrel {

namespace {

enum StreamTag : std::uint64_t
{
    kTagProfile = 1,
    kTagSpecimen = 2,
    kTagLabels = 3,
};

// Rational approximation of the lower-tail normal quantile (relative error
// about 1e-9), polished afterwards by one Halley step.
double quantile_lower_tail(double p)
{
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low)
    {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    else
    {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

// Randomness behind one load profile and the specimen that carries it.
struct ProfileSample
{
    LiveLoadTrace live;
    double dead;
    CanadianScores scores; // scores[5] is the strength score shared with US
    double gp_uniform;
};

ProfileSample draw_profile(const Scenario& scenario, const SimulationOptions& opts, std::uint64_t profile_key,
                           std::uint64_t specimen_key)
{
    Stream loads(profile_key);
    LiveLoadTrace live = generate_live_load(scenario, loads, opts.horizon);

    // The dead load rides on the specimen stream so that every scenario sees
    // the same dead loads.
    Stream specimen(specimen_key);
    CanadianScores scores;
    for (double& z : scores)
        z = specimen.normal();
    const double u = specimen.uniform();
    const double dead = sample_dead_load(specimen, opts.consts);
    return {std::move(live), dead, scores, u};
}

// Evaluates draws of any model against one profile over a set of phis.
class ProfileEvaluator
{
  public:
    ProfileEvaluator(const ProfileSample& sample, std::span<const double> phis, const SimulationOptions& opts)
        : sample_(sample), phis_(phis), opts_(opts)
    {
    }

    // Adds the failure indicator (or probability) of each phi to out[j].
    void accumulate(ModelId model, const ModelParams& params, std::span<double> out)
    {
        switch (model)
        {
        case ModelId::US:
            accumulate_us(std::get<USParams>(params), out);
            break;
        case ModelId::Canadian:
            accumulate_canadian(std::get<CanadianHyper>(params), out);
            break;
        case ModelId::GammaProcess:
            accumulate_gp(std::get<GammaProcessParams>(params), out);
            break;
        }
    }

  private:
    const DemandProfile& profile(std::size_t j)
    {
        if (profiles_.empty())
        {
            profiles_.resize(phis_.size());
            for (std::size_t k = 0; k < phis_.size(); ++k)
                compose_demand(sample_.live, sample_.dead, phis_[k], opts_.consts, profiles_[k]);
        }
        return profiles_[j];
    }

    void accumulate_us(const USParams& p, std::span<double> out)
    {
        for (std::size_t j = 0; j < phis_.size(); ++j)
        {
            if (us_fails(p, sample_.scores[5], profile(j)).failed)
                out[j] += 1.0;
        }
    }

    void accumulate_canadian(const CanadianHyper& h, std::span<double> out)
    {
        const double tau_M = median_strength(opts_.consts.R_o, opts_.canadian_strength_w);
        const CanadianEffects e = can_effects_from_scores(h, sample_.scores, tau_M, opts_.canadian_strength_w);
        for (std::size_t j = 0; j < phis_.size(); ++j)
        {
            if (can_fails(e, profile(j)).failed)
                out[j] += 1.0;
        }
    }

    // The grid is built on the phi = 1 profile and scaled with phi, so the
    // exceedance durations are shared by every phi and every draw. Adjacent
    // cells with equal durations are merged; their level differences
    // telescope, so the sum is unchanged.
    void accumulate_gp(const GammaProcessParams& p, std::span<double> out)
    {
        if (runs_.empty())
        {
            const DemandProfile unit = compose_demand(sample_.live, sample_.dead, 1.0, opts_.consts);
            const LoadGrid grid = LoadGrid::spanning(unit, opts_.grid_levels);
            const auto levels = grid.levels();
            const std::vector<double> exceed = exceedance_durations(unit, grid, unit.horizon());
            for (std::size_t i = 0; i < exceed.size(); ++i)
            {
                if (exceed[i] == 0.0)
                    break; // durations only shrink with the level
                if (!runs_.empty() && runs_.back().duration == exceed[i])
                    runs_.back().hi = levels[i + 1];
                else
                    runs_.push_back({exceed[i], levels[i], levels[i + 1]});
            }
            if (runs_.empty())
                runs_.push_back({0.0, 0.0, 0.0});
        }
        g_.resize(runs_.size());
        for (std::size_t r = 0; r < runs_.size(); ++r)
            g_[r] = gp_g(runs_[r].duration, p);

        for (std::size_t j = 0; j < phis_.size(); ++j)
        {
            const double phi = phis_[j];
            double sum = 0.0;
            for (std::size_t r = 0; r < runs_.size(); ++r)
            {
                if (g_[r] == 0.0)
                    continue;
                sum += g_[r] * (std::max(0.0, phi * runs_[r].hi - p.tau_star) -
                                std::max(0.0, phi * runs_[r].lo - p.tau_star));
            }
            const double prob = gp_fail_prob_from_eta(p.u * sum, p.xi);
            if (opts_.gp_mode == GpMode::Analytic)
                out[j] += prob;
            else if (sample_.gp_uniform < prob)
                out[j] += 1.0;
        }
    }

    struct LevelRun
    {
        double duration;
        double lo;
        double hi;
    };

    const ProfileSample& sample_;
    std::span<const double> phis_;
    const SimulationOptions& opts_;
    std::vector<DemandProfile> profiles_;
    std::vector<LevelRun> runs_;
    std::vector<double> g_;
};

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn)
{
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto run = [&] {
        for (;;)
        {
            const std::size_t b = next.fetch_add(1);
            if (b >= n)
                return;
            try
            {
                fn(b);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(n);
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (count == 1)
    {
        run();
    }
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(count);
        for (unsigned w = 0; w < count; ++w)
            pool.emplace_back(run);
    }
    if (error)
        std::rethrow_exception(error);
}

} // namespace

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error(fmt::format("normal quantile needs 0 < p < 1, got {}", p));
    if (p > 0.5)
        return -quantile_lower_tail(1.0 - p);
    return quantile_lower_tail(p);
}

double beta_from_pf(double pf, std::size_t n_prof)
{
    if (!(pf >= 0.0 && pf <= 1.0))
        throw InvalidParameter(fmt::format("failure probability {} outside [0, 1]", pf));
    const double floor = 0.5 / static_cast<double>(std::max<std::size_t>(n_prof, 1));
    return -normal_quantile(std::clamp(pf, floor, 1.0 - floor));
}

double sample_quantile(std::span<const double> sorted, double p)
{
    if (sorted.empty())
        throw InvalidParameter("quantile of an empty sample");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size())
        return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

Summary summarize(std::span<const double> values)
{
    if (values.empty())
        throw InvalidParameter("summary of an empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return {mean, sample_quantile(sorted, 0.025), sample_quantile(sorted, 0.975)};
}

Summary single_model_summary(std::span<const double> pf, std::size_t n_prof)
{
    std::vector<double> beta(pf.size());
    std::transform(pf.begin(), pf.end(), beta.begin(), [&](double p) { return beta_from_pf(p, n_prof); });
    return summarize(beta);
}

std::uint64_t crn_profile_key(std::uint64_t seed, const Scenario& scenario, std::size_t j)
{
    return stream_key(seed, {kTagProfile, scenario.id(), j});
}

std::uint64_t crn_specimen_key(std::uint64_t seed, std::size_t j)
{
    return stream_key(seed, {kTagSpecimen, j});
}

FailureProbMatrix::FailureProbMatrix(std::vector<ModelId> models, std::vector<std::size_t> draws_per_model,
                                     std::vector<double> phis, std::size_t n_prof)
    : models_(std::move(models)), draws_(std::move(draws_per_model)), phis_(std::move(phis)), n_prof_(n_prof)
{
    if (models_.size() != draws_.size())
        throw InvalidParameter("one draw count per model is required");
    std::size_t offset = 0;
    for (std::size_t n : draws_)
    {
        offsets_.push_back(offset);
        offset += n * phis_.size();
    }
    failures_.assign(offset, 0.0);
}

std::size_t FailureProbMatrix::index(std::size_t k, std::size_t i, std::size_t j) const
{
    return offsets_.at(k) + i * phis_.size() + j;
}

double FailureProbMatrix::failures(std::size_t k, std::size_t i, std::size_t j) const
{
    return failures_[index(k, i, j)];
}

double& FailureProbMatrix::failures(std::size_t k, std::size_t i, std::size_t j)
{
    return failures_[index(k, i, j)];
}

double FailureProbMatrix::pf(std::size_t k, std::size_t i, std::size_t j) const
{
    return std::clamp(failures(k, i, j) / static_cast<double>(n_prof_), 0.0, 1.0);
}

std::vector<double> FailureProbMatrix::column(std::size_t k, std::size_t j) const
{
    std::vector<double> out(draws_.at(k));
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = pf(k, i, j);
    return out;
}

FailureProbMatrix compute_failure_matrix(const Scenario& scenario, std::span<const double> phis,
                                         std::span<const ModelInput> inputs, const SimulationOptions& opts)
{
    if (opts.n_prof < 1)
        throw InvalidParameter("n_prof must be at least 1");
    if (phis.empty())
        throw InvalidParameter("phi grid is empty");
    for (double phi : phis)
    {
        if (!(phi > 0.0))
            throw InvalidParameter(fmt::format("phi must be positive, got {}", phi));
    }

    std::vector<ModelId> models;
    std::vector<std::size_t> counts;
    for (const ModelInput& in : inputs)
    {
        models.push_back(in.model);
        counts.push_back(in.draws.size());
    }
    FailureProbMatrix matrix(models, counts, std::vector<double>(phis.begin(), phis.end()), opts.n_prof);

    // Cells are laid out (k, i, j) exactly like the matrix.
    std::size_t cells = 0;
    for (std::size_t n : counts)
        cells += n * phis.size();

    const std::uint64_t scenario_id = scenario.id();
    const std::size_t n_blocks = (opts.n_prof + kProfileBlock - 1) / kProfileBlock;
    std::vector<std::vector<double>> partial(n_blocks);

    parallel_for(n_blocks, opts.workers, [&](std::size_t block) {
        std::vector<double> sums(cells, 0.0);
        const std::size_t first = block * kProfileBlock;
        const std::size_t last = std::min(opts.n_prof, first + kProfileBlock);
        for (std::size_t prof = first; prof < last; ++prof)
        {
            if (opts.common_random_numbers)
            {
                const ProfileSample sample = draw_profile(scenario, opts, crn_profile_key(opts.seed, scenario, prof),
                                                          crn_specimen_key(opts.seed, prof));
                ProfileEvaluator eval(sample, phis, opts);
                std::size_t cell = 0;
                for (const ModelInput& in : inputs)
                {
                    for (const ModelParams& draw : in.draws)
                    {
                        eval.accumulate(in.model, draw, std::span(sums).subspan(cell, phis.size()));
                        cell += phis.size();
                    }
                }
                continue;
            }

            // Independent streams: a fresh profile for every (model, draw, phi).
            std::size_t cell = 0;
            for (const ModelInput& in : inputs)
            {
                const auto model_tag = static_cast<std::uint64_t>(in.model);
                for (std::size_t i = 0; i < in.draws.size(); ++i)
                {
                    for (std::size_t j = 0; j < phis.size(); ++j, ++cell)
                    {
                        const auto phi_tag = std::bit_cast<std::uint64_t>(phis[j]);
                        const ProfileSample sample = draw_profile(
                            scenario, opts,
                            stream_key(opts.seed, {kTagProfile, scenario_id, model_tag, i, phi_tag, prof}),
                            stream_key(opts.seed, {kTagSpecimen, model_tag, i, phi_tag, prof}));
                        ProfileEvaluator eval(sample, phis.subspan(j, 1), opts);
                        eval.accumulate(in.model, in.draws[i], std::span(sums).subspan(cell, 1));
                    }
                }
            }
        }
        partial[block] = std::move(sums);
    });

    // Block order, not completion order, fixes the floating-point sum.
    std::vector<double> total(cells, 0.0);
    for (const auto& block : partial)
    {
        for (std::size_t c = 0; c < cells; ++c)
            total[c] += block[c];
    }
    std::size_t cell = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k)
    {
        for (std::size_t i = 0; i < counts[k]; ++i)
        {
            for (std::size_t j = 0; j < phis.size(); ++j)
                matrix.failures(k, i, j) = total[cell++];
        }
    }
    return matrix;
}

double estimate_pf(ModelId model, const ModelParams& draw, const Scenario& scenario, double phi,
                   const SimulationOptions& opts)
{
    const ModelInput input{model, {draw}};
    const double phis[] = {phi};
    return compute_failure_matrix(scenario, phis, std::span(&input, 1), opts).pf(0, 0, 0);
}

MixedSample bma_mix(Stream& rng, std::span<const std::vector<double>> columns, const ModelPosterior& posterior)
{
    if (columns.size() != posterior.models.size())
        throw ValidationError(fmt::format("BMA needs one pf column per model ({} columns, {} models)",
                                          columns.size(), posterior.models.size()));
    if (columns.empty())
        throw ValidationError("BMA needs at least one model");
    const std::size_t n = columns.front().size();
    for (std::size_t k = 0; k < columns.size(); ++k)
    {
        if (columns[k].size() != n)
            throw ValidationError(fmt::format("model {} has {} draws, expected {}",
                                              to_string(posterior.models[k]), columns[k].size(), n));
    }

    std::vector<double> cumulative(posterior.probabilities.size());
    std::partial_sum(posterior.probabilities.begin(), posterior.probabilities.end(), cumulative.begin());

    MixedSample mixed;
    mixed.labels.resize(n);
    mixed.pf.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double u = rng.uniform() * cumulative.back();
        std::size_t k = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        k = std::min(k, cumulative.size() - 1);
        // Never select a zero-probability model through rounding.
        while (posterior.probabilities[k] == 0.0 && k > 0)
            --k;
        mixed.labels[i] = k;
        mixed.pf[i] = columns[k][i];
    }
    return mixed;
}

BmaSummary bma_summary(const MixedSample& mixed, std::size_t n_prof)
{
    return {single_model_summary(mixed.pf, n_prof), summarize(mixed.pf)};
}

ReliabilityCurve build_curve(const Scenario& scenario, std::span<const double> phis,
                             std::span<const DrawSet> draw_sets, const ModelPosterior& posterior,
                             const SimulationOptions& opts)
{
    for (std::size_t j = 1; j < phis.size(); ++j)
    {
        if (!(phis[j] > phis[j - 1]))
            throw InvalidParameter("phi grid must be strictly increasing");
    }

    std::vector<ModelInput> inputs;
    std::vector<std::string> provenance;
    for (ModelId id : posterior.models)
    {
        const auto it = std::find_if(draw_sets.begin(), draw_sets.end(),
                                     [&](const DrawSet& d) { return d.model == id; });
        if (it == draw_sets.end())
            throw ValidationError(fmt::format("no draws supplied for model {}", to_string(id)));
        if (it->size() != draw_sets.front().size())
            throw ValidationError(fmt::format("model {} has {} draws but {} has {}", to_string(id), it->size(),
                                              to_string(draw_sets.front().model), draw_sets.front().size()));
        inputs.push_back({id, model_params(*it, opts.consts)});
        provenance.push_back(it->provenance);
    }
    for (const DrawSet& d : draw_sets)
    {
        if (std::find(posterior.models.begin(), posterior.models.end(), d.model) == posterior.models.end())
            throw ValidationError(fmt::format("draws for {} have no model evidence", to_string(d.model)));
    }

    FailureProbMatrix matrix = compute_failure_matrix(scenario, phis, inputs, opts);

    ReliabilityCurve curve{scenario.name(),
                           posterior.models,
                           posterior.probabilities,
                           {},
                           std::move(provenance),
                           opts.seed,
                           inputs.front().draws.size(),
                           opts.n_prof,
                           std::move(matrix)};
    const FailureProbMatrix& m = curve.matrix;
    for (std::size_t j = 0; j < phis.size(); ++j)
    {
        CurvePoint point{phis[j], {}, {}, {}};
        std::vector<std::vector<double>> columns;
        for (std::size_t k = 0; k < inputs.size(); ++k)
        {
            columns.push_back(m.column(k, j));
            point.model_beta.push_back(single_model_summary(columns.back(), opts.n_prof));
            point.model_pf_mean.push_back(summarize(columns.back()).mean);
        }
        // Same labels at every phi.
        Stream labels(stream_key(opts.seed, {kTagLabels}));
        point.bma = bma_summary(bma_mix(labels, columns, posterior), opts.n_prof);
        curve.points.push_back(std::move(point));
    }
    return curve;
}

} // namespace dolrel
