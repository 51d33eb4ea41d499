#include "robreg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "robreg/conjugate.hpp"
#include "robreg/errors.hpp"
#include "robreg/io.hpp"

namespace robreg {

using nlohmann::json;

namespace {

ConjugatePrior init_prior(const PriorSpec& p) {
    if (const auto* c = std::get_if<ConjugatePrior>(&p)) return *c;
    return ConjugatePrior{};
}

Eigen::VectorXd conjugate_start(const Dataset& d, const PriorSpec& prior) {
    const auto cp = init_prior(prior);
    const auto fit = normal_conjugate_posterior(d, cp.a, cp.b);
    const double s2 = fit.ig_shape > 1.0 ? fit.sigma2_mean() : fit.ig_scale / fit.ig_shape;
    return ParameterPoint{fit.beta_hat, std::log(s2)}.packed();
}

FitSummary summarize(const std::vector<ChainSamples>& chains, std::size_t n_beta, bool has_gamma,
                     std::uint64_t seed) {
    FitSummary out;
    out.seed = seed;
    const auto coords = posterior_summary(chains);
    out.beta.assign(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(n_beta));
    if (has_gamma) {
        out.gamma = coords[n_beta];
        std::vector<ChainSamples> s2;
        for (const auto& ch : chains)
            s2.push_back(transform_column(ch, static_cast<Eigen::Index>(n_beta), [](double g) { return std::exp(g); }));
        out.sigma2 = posterior_summary(s2).front();
    }
    for (const auto& ch : chains) {
        out.n_samples += static_cast<std::size_t>(ch.draws.rows());
        out.divergences += ch.divergence_count;
        out.accept_rate += ch.accept_rate / static_cast<double>(chains.size());
    }
    return out;
}

std::uint64_t fit_seed(std::uint64_t base, std::size_t model, std::size_t slot, std::size_t slots) {
    return base + 1000 * static_cast<std::uint64_t>(model * slots + slot);
}

void warn_divergences(const std::string& label, double omega, const FitSummary& f) {
    if (f.divergences > 0)
        std::cerr << "warning: " << label << " omega=" << format_real(omega) << ": " << f.divergences
                  << " divergent transitions\n";
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::string glm_label(const RobustGammaDensity& d) {
    return "robust_gamma(nu=" + format_double(d.nu) + ",c=" + format_double(d.c) + ")";
}

QuadratureSettings quadrature_from_json(const json& j) {
    QuadratureSettings q;
    if (!j.contains("quadrature")) return q;
    const auto& k = j.at("quadrature");
    q.rel_tol = value_or(k, "rel_tol", q.rel_tol);
    q.inner_rel_tol = value_or(k, "inner_rel_tol", q.inner_rel_tol);
    q.gamma_pieces = value_or(k, "gamma_pieces", q.gamma_pieces);
    q.beta_pieces = value_or(k, "beta_pieces", q.beta_pieces);
    q.depth = value_or(k, "depth", q.depth);
    return q;
}

}  // namespace

SamplerSettings sampler_settings_from_json(const json& j) {
    SamplerSettings s;
    if (j.is_null()) return s;
    s.chains = value_or(j, "chains", s.chains);
    s.warmup = value_or(j, "warmup", s.warmup);
    s.samples = value_or(j, "samples", s.samples);
    s.n_leapfrog = value_or(j, "n_leapfrog", s.n_leapfrog);
    s.jitter = value_or(j, "jitter", s.jitter);
    s.adapt_mass = value_or(j, "adapt_mass", s.adapt_mass);
    s.target_accept = value_or(j, "target_accept", s.target_accept);
    s.parallel = value_or(j, "parallel", s.parallel);
    if (s.chains < 1) throw ConfigError("sampler.chains must be at least 1");
    if (s.samples < 10) throw ConfigError("sampler.samples must be at least 10");
    return s;
}

json to_json(const SamplerSettings& s) {
    return json{{"chains", s.chains},         {"warmup", s.warmup},         {"samples", s.samples},
                {"n_leapfrog", s.n_leapfrog}, {"jitter", s.jitter},         {"adapt_mass", s.adapt_mass},
                {"target_accept", s.target_accept}, {"parallel", s.parallel}};
}

HmcConfig hmc_config(const SamplerSettings& s, std::uint64_t seed) {
    HmcConfig c;
    c.n_leapfrog = s.n_leapfrog;
    c.leapfrog_jitter = s.jitter;
    c.adapt_mass = s.adapt_mass;
    c.n_warmup = s.warmup;
    c.n_samples = s.samples;
    c.target_accept = s.target_accept;
    c.seed = seed;
    return c;
}

FitSummary fit_linear(const LinearModelSpec& m, const SamplerSettings& s, std::uint64_t seed, bool limiting) {
    m.data.validate();
    std::optional<LimitingPosterior> limit;
    LogDensityFn target;
    Eigen::VectorXd init;
    if (limiting) {
        limit.emplace(m);
        target = [&](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
            const auto p = ParameterPoint::unpack(q);
            grad = limit->gradient(p).packed();
            return limit->log_density(p);
        };
        init = conjugate_start(limit->reduced().data, m.prior);
    } else {
        target = [&](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
            const auto p = ParameterPoint::unpack(q);
            grad = grad_log_posterior(m, p).packed();
            return log_posterior(m, p);
        };
        init = conjugate_start(m.data, m.prior);
    }
    const auto chains = hmc_run_chains(target, hmc_config(s, seed), init, s.chains, s.parallel);
    return summarize(chains, m.data.p(), true, seed);
}

FitSummary fit_glm(const GlmModelSpec& m, const SamplerSettings& s, std::uint64_t seed, bool limiting) {
    const MarginalMode mode = limiting ? MarginalMode::Limiting : MarginalMode::Full;
    GlmModelSpec target_spec = m;
    if (limiting) {
        target_spec.data = m.data.without(m.outliers);
        target_spec.outliers.clear();
    }
    const LogDensityFn target = [&](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
        grad = grad_glm_log_posterior(target_spec, q);
        return glm_log_posterior(target_spec, q);
    };
    const auto init = glm_laplace_fit(m, mode).mode;
    const auto chains = hmc_run_chains(target, hmc_config(s, seed), init, s.chains, s.parallel);
    return summarize(chains, m.data.p(), false, seed);
}

std::vector<double> omega_grid_from_json(const json& j) {
    std::vector<double> grid;
    if (j.is_array()) {
        grid = j.get<std::vector<double>>();
    } else if (j.contains("grid")) {
        grid = j.at("grid").get<std::vector<double>>();
    } else {
        const double lo = value_or(j, "log10_min", 0.0);
        const double hi = value_or(j, "log10_max", 4.0);
        const int points = value_or(j, "points", 17);
        if (points < 1) throw ConfigError("omega.points must be positive");
        for (int k = 0; k < points; ++k)
            grid.push_back(std::pow(10.0, points == 1 ? lo : lo + (hi - lo) * k / (points - 1)));
        if (value_or(j, "include_zero", false)) grid.insert(grid.begin(), 0.0);
    }
    if (grid.empty()) throw ConfigError("omega grid is empty");
    for (double w : grid)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("omega values must be finite and nonnegative");
    return grid;
}

SweepConfig sweep_config_from_json(const json& j) {
    SweepConfig c;
    c.seed = value_or(j, "seed", kDefaultSeed);
    if (j.contains("data")) {
        c.data = read_dataset_csv(j.at("data").get<std::string>());
    } else {
        const json ds = j.value("dataset", json::object());
        c.data = simulate_dataset(value_or<std::size_t>(ds, "n", 20), value_or(ds, "seed", c.seed));
    }
    c.outliers = value_or(j, "outliers", std::vector<std::size_t>{c.data.n() - 1});
    for (std::size_t i : c.outliers)
        if (i >= c.data.n()) throw ConfigError("outlier index " + std::to_string(i) + " out of range");
    c.slope = value_or(j, "slope", 1.0);
    c.tie_outliers = value_or(j, "tie_outliers", true);
    if (j.contains("prior")) c.prior = prior_from_json(j.at("prior"));
    if (j.contains("models")) {
        for (const auto& m : j.at("models")) c.models.push_back(error_density_from_json(m));
    } else {
        c.models = {normal_error(), student_t_error(4.0), student_t_error(10.0)};
    }
    if (c.models.empty()) throw ConfigError("no models configured");
    c.omegas = omega_grid_from_json(j.value("omega", json::object()));
    c.sampler = sampler_settings_from_json(j.value("sampler", json::object()));
    c.limiting = value_or(j, "limiting", true);
    c.theorem_ratio = value_or(j, "theorem_ratio", false);
    c.quadrature = quadrature_from_json(j);
    return c;
}

LinearOutlierPath sweep_path(const SweepConfig& c) {
    auto path = linear_path_from_observations(c.data.y, c.outliers, c.slope);
    if (c.tie_outliers && !c.outliers.empty()) {
        double top = 0.0;
        for (std::size_t i : c.outliers) top = std::max(top, path.a[static_cast<Eigen::Index>(i)]);
        for (std::size_t i : c.outliers) {
            path.a[static_cast<Eigen::Index>(i)] = top;
            path.sign[i] = 1;
        }
    }
    return path;
}

std::vector<SweepRecord> sweep_run(const SweepConfig& c) {
    if (c.data.p() < 2) throw ConfigError("sweep needs a slope coefficient (p >= 2)");
    const auto path = sweep_path(c);
    const std::size_t slots = c.omegas.size() + 1;
    std::vector<SweepRecord> rows;
    for (std::size_t mi = 0; mi < c.models.size(); ++mi) {
        const auto& error = c.models[mi];
        const std::string label = error.label();
        const bool exact = !error.tail.heavy() && std::holds_alternative<ConjugatePrior>(c.prior) &&
                           std::holds_alternative<NormalFamily>(error.family);
        for (std::size_t wi = 0; wi < c.omegas.size(); ++wi) {
            const double omega = c.omegas[wi];
            LinearModelSpec spec{error, c.prior, c.data, path.outlier_indices()};
            spec.data.y = apply_outlier_path(path, omega);
            SweepRecord r{omega, label, "posterior_mean_beta2", 0.0, 0.0, 0, c.seed, 0};
            if (exact) {
                const auto cp = std::get<ConjugatePrior>(c.prior);
                r.value = normal_conjugate_posterior(spec.data, cp.a, cp.b).beta_hat[1];
            } else {
                const auto seed = fit_seed(c.seed, mi, wi, slots);
                const auto fit = fit_linear(spec, c.sampler, seed);
                warn_divergences(label, omega, fit);
                r.value = fit.beta[1].mean;
                r.mcse = fit.beta[1].mcse;
                r.n_samples = fit.n_samples;
                r.seed = seed;
                r.divergences = fit.divergences;
            }
            rows.push_back(r);

            if (c.theorem_ratio && error.tail.heavy() && c.data.p() <= 2 && !spec.outliers.empty() &&
                breakdown_check(spec.data.n(), spec.outliers.size(), error.tail, 1.0, 0).assumption3_holds &&
                omega > 0.0) {
                const auto tr = theorem_ratio(LinearModelSpec{error, c.prior, c.data, {}}, path, omega, c.quadrature);
                rows.push_back({omega, label, "theorem_ratio", tr.ratio, 0.0, 0, c.seed, 0});
            }
        }
        if (!c.limiting || !error.tail.heavy()) continue;
        LinearModelSpec spec{error, c.prior, c.data, path.outlier_indices()};
        if (!breakdown_check(spec.data.n(), spec.outliers.size(), error.tail, 1.0, 0).assumption3_holds) {
            std::cerr << "note: " << label << ": limiting posterior skipped, breakdown condition violated with "
                      << spec.outliers.size() << " outliers\n";
            continue;
        }
        const auto seed = fit_seed(c.seed, mi, c.omegas.size(), slots);
        const auto fit = fit_linear(spec, c.sampler, seed, true);
        warn_divergences(label + " (limiting)", 0.0, fit);
        for (double omega : c.omegas)
            rows.push_back({omega, label, "limiting_mean_beta2", fit.beta[1].mean, fit.beta[1].mcse, fit.n_samples,
                            seed, fit.divergences});
    }
    sort_records(rows);
    return rows;
}

std::vector<SweepRecord> sweep_run(const json& config) { return sweep_run(sweep_config_from_json(config)); }

std::vector<SweepRecord> glm_sweep_run(const json& j) {
    const std::uint64_t seed = value_or(j, "seed", kDefaultSeed);
    const std::size_t n = value_or<std::size_t>(j, "n", 30);
    const auto beta_v = value_or(j, "beta", std::vector<double>{1.0, 1.0});
    const double nu = value_or(j, "nu", 4.0);
    const double c_tune = value_or(j, "c", kDefaultRobustGammaC);
    Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(beta_v.data(), static_cast<Eigen::Index>(beta_v.size()));
    if (beta.size() != 2) throw ConfigError("glm sweep expects beta with 2 entries (intercept, slope)");

    GlmModelSpec base;
    base.error = robust_gamma_build(nu, c_tune);
    base.data = simulate_glm_dataset(n, beta, nu, value_or(j, "data_seed", seed));
    if (j.contains("prior")) base.prior = coefficient_priors_from_json(j.at("prior").at("coefficients"));

    const auto outliers = value_or(j, "outliers", std::vector<std::size_t>{n - 1});
    const auto directions = value_or(j, "directions", std::vector<std::string>(outliers.size(), "large"));
    if (directions.size() != outliers.size()) throw ConfigError("'directions' must match 'outliers' in length");
    const double slope = value_or(j, "slope", 1.0);

    GlmOutlierPath path;
    path.a = base.data.y;
    path.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    path.direction.assign(n, OutlierDirection::Large);
    for (std::size_t k = 0; k < outliers.size(); ++k) {
        const auto i = outliers[k];
        if (i >= n) throw ConfigError("outlier index " + std::to_string(i) + " out of range");
        path.b[static_cast<Eigen::Index>(i)] = slope;
        if (directions[k] == "small") {
            if (!base.error.has_left_tail)
                throw ConfigError("small outliers need a left tail (nu > 1 and c < sqrt(nu))");
            path.direction[i] = OutlierDirection::Small;
        } else if (directions[k] != "large") {
            throw ConfigError("direction must be 'large' or 'small'");
        }
    }
    path.validate();

    const auto omegas = omega_grid_from_json(j.value("omega", json{{"log10_min", 0.0}, {"log10_max", 4.0}, {"points", 9}}));
    for (double w : omegas)
        if (!(w > 0.0)) throw ConfigError("GLM omega values must be positive");
    const auto sampler = sampler_settings_from_json(j.value("sampler", json::object()));
    const bool limiting = value_or(j, "limiting", true);
    const bool ratio = value_or(j, "theorem_ratio", true);
    const auto quad = quadrature_from_json(j);
    const std::string label = glm_label(base.error);
    const std::size_t slots = omegas.size() + 1;

    std::vector<SweepRecord> rows;
    for (std::size_t wi = 0; wi < omegas.size(); ++wi) {
        GlmModelSpec spec = base;
        spec.data.y = apply_outlier_path(path, omegas[wi]);
        spec.outliers = path.outlier_indices();
        const auto s = fit_seed(seed, 0, wi, slots);
        const auto fit = fit_glm(spec, sampler, s);
        warn_divergences(label, omegas[wi], fit);
        rows.push_back({omegas[wi], label, "posterior_mean_beta2", fit.beta[1].mean, fit.beta[1].mcse, fit.n_samples,
                        s, fit.divergences});
        if (ratio) {
            const auto tr = glm_theorem_ratio(base, path, omegas[wi], quad);
            rows.push_back({omegas[wi], label, "theorem_ratio", tr.ratio, 0.0, 0, seed, 0});
        }
    }
    if (limiting) {
        GlmModelSpec spec = base;
        spec.data.y = apply_outlier_path(path, omegas.front());
        spec.outliers = path.outlier_indices();
        const auto s = fit_seed(seed, 0, omegas.size(), slots);
        const auto fit = fit_glm(spec, sampler, s, true);
        for (double w : omegas)
            rows.push_back({w, label, "limiting_mean_beta2", fit.beta[1].mean, fit.beta[1].mcse, fit.n_samples, s,
                            fit.divergences});
    }
    sort_records(rows);
    return rows;
}

json to_json(const BreakdownVerdict& v) {
    json j{{"n", v.n},
           {"outliers", v.outliers},
           {"tail", to_string(v.tail)},
           {"assumption3_holds", v.assumption3_holds},
           {"breakdown_fraction", v.breakdown_fraction}};
    j["refined_margin"] = v.refined_margin ? json(*v.refined_margin) : json(nullptr);
    j["refined_holds_for_moment"] = v.refined_holds_for_moment ? json(*v.refined_holds_for_moment) : json(nullptr);
    return j;
}

json breakdown_report(const json& j) {
    const std::size_t n = value_or<std::size_t>(j, "n", 20);
    const double a = value_or(j, "a", 2.0);
    const unsigned moment = value_or(j, "moment_order", 1u);
    const auto counts = value_or(j, "outlier_counts", std::vector<std::size_t>{1, 2, 3});
    std::vector<ErrorDensity> models;
    if (j.contains("models")) {
        for (const auto& m : j.at("models")) models.push_back(error_density_from_json(m));
    } else {
        models = {student_t_error(4.0), student_t_error(10.0), lptn_build(0.95)};
    }
    json out = json::array();
    for (const auto& m : models)
        for (std::size_t o : counts) {
            json v = to_json(breakdown_check(n, o, m.tail, a, moment));
            v["model_label"] = m.label();
            v["alpha"] = m.tail.heavy() ? json(m.tail.alpha) : json(nullptr);
            out.push_back(v);
        }
    return json{{"a", a}, {"moment_order", moment}, {"verdicts", out}};
}

}  // namespace robreg
