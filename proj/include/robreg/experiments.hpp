#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "robreg/marginal.hpp"
#include "robreg/model.hpp"
#include "robreg/records.hpp"
#include "robreg/sampler.hpp"

namespace robreg {

inline constexpr std::uint64_t kDefaultSeed = 20250101;

struct SamplerSettings {
    std::size_t chains = 4;
    std::size_t warmup = 2000;
    std::size_t samples = 5000;
    int n_leapfrog = 32;
    double jitter = 0.2;
    bool adapt_mass = true;
    double target_accept = 0.8;
    bool parallel = true;
};

SamplerSettings sampler_settings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SamplerSettings& s);
HmcConfig hmc_config(const SamplerSettings& s, std::uint64_t seed);

struct FitSummary {
    std::vector<CoordinateSummary> beta;
    CoordinateSummary gamma;   // absent for the GLM (left at zero)
    CoordinateSummary sigma2;  // exp(gamma)
    std::size_t n_samples = 0;
    std::size_t divergences = 0;
    double accept_rate = 0.0;  // averaged over chains
    std::uint64_t seed = 0;
};

/// HMC on the linear-model posterior, or on its limiting posterior when `limiting`
/// is set.  Chains start at the conjugate fit of the data being modelled.
FitSummary fit_linear(const LinearModelSpec& m, const SamplerSettings& s, std::uint64_t seed,
                      bool limiting = false);
FitSummary fit_glm(const GlmModelSpec& m, const SamplerSettings& s, std::uint64_t seed,
                   bool limiting = false);

/// Explicit "grid" list, or {"log10_min", "log10_max", "points"}; "include_zero" prepends 0.
std::vector<double> omega_grid_from_json(const nlohmann::json& j);

/// Linear sweep configuration:
///   {"seed", "dataset": {"n", "seed"} | "data": csv, "outliers": [i...] (0-based),
///    "slope", "tie_outliers", "prior", "models": [error...], "omega": grid,
///    "sampler": {...}, "limiting": bool, "theorem_ratio": bool}
struct SweepConfig {
    std::uint64_t seed = kDefaultSeed;
    Dataset data;
    std::vector<std::size_t> outliers;
    double slope = 1.0;
    bool tie_outliers = true;
    PriorSpec prior = ConjugatePrior{};
    std::vector<ErrorDensity> models;
    std::vector<double> omegas;
    SamplerSettings sampler;
    bool limiting = true;
    bool theorem_ratio = false;
    QuadratureSettings quadrature;
};

SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// The outlier path of a sweep: outliers start from their observed |y_i|, or
/// from the largest of them when tied, and move up by slope * omega.
LinearOutlierPath sweep_path(const SweepConfig& c);

/// For every omega and model: posterior mean of beta_2 (closed form for the Normal
/// model, HMC otherwise); once per heavy-tailed model the limiting-posterior mean
/// when the breakdown condition allows it; optionally the theorem ratio (p <= 2).
/// Rows are sorted by (model_label, estimator, omega).
std::vector<SweepRecord> sweep_run(const SweepConfig& c);
std::vector<SweepRecord> sweep_run(const nlohmann::json& config);

/// GLM sweep configuration:
///   {"seed", "n", "beta": [..], "nu", "c", "outliers": [i...], "directions": ["large"|"small"...],
///    "slope", "prior": {"coefficients": [...]}, "omega": grid, "sampler", "limiting", "theorem_ratio"}
std::vector<SweepRecord> glm_sweep_run(const nlohmann::json& config);

/// Breakdown verdicts: {"n", "a", "moment_order", "outlier_counts": [...], "models": [error...]}.
nlohmann::json breakdown_report(const nlohmann::json& config);
nlohmann::json to_json(const BreakdownVerdict& v);

}  // namespace robreg
