#include "robreg/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "robreg/conjugate.hpp"
#include "robreg/errors.hpp"
#include "robreg/quadrature.hpp"
#include "robreg/special_functions.hpp"

namespace robreg {

namespace {

/// Integration box for beta: beta_1 over center_1 +- w scale sqrt((P^{-1})_11), and for
/// p = 2, beta_2 | beta_1 over its conditional mean +- w scale / sqrt(P_22).
struct BetaWindow {
    Eigen::VectorXd center;
    Eigen::MatrixXd precision;
    double sd1 = 0.0;       // unscaled marginal sd of beta_1
    double sd2_cond = 0.0;  // unscaled conditional sd of beta_2 | beta_1
    double slope = 0.0;     // conditional mean of beta_2 moves by slope * (beta_1 - c_1)

    BetaWindow(Eigen::VectorXd c, Eigen::MatrixXd p) : center(std::move(c)), precision(std::move(p)) {
        const auto dim = center.size();
        if (dim == 1) {
            sd1 = 1.0 / std::sqrt(precision(0, 0));
        } else {
            const Eigen::MatrixXd cov = precision.inverse();
            sd1 = std::sqrt(cov(0, 0));
            sd2_cond = 1.0 / std::sqrt(precision(1, 1));
            slope = -precision(1, 0) / precision(1, 1);
        }
    }
};

using LogIntegrand = std::function<double(const Eigen::VectorXd&)>;

QuadratureResult integrate_beta(const LogIntegrand& log_f, const BetaWindow& w, double scale,
                                int pieces, double half_sds, double tol) {
    const auto dim = w.center.size();
    Eigen::VectorXd beta = w.center;
    const double h1 = half_sds * scale * w.sd1;
    bool converged = true;
    auto outer = [&](double b1) {
        beta[0] = b1;
        if (dim == 1) return std::exp(log_f(beta));
        const double c2 = w.center[1] + w.slope * (b1 - w.center[0]);
        const double h2 = half_sds * scale * w.sd2_cond;
        const auto inner = integrate_adaptive(
            [&](double b2) {
                Eigen::VectorXd b = beta;
                b[1] = b2;
                return std::exp(log_f(b));
            },
            c2 - h2, c2 + h2, 0.01 * tol, pieces);
        converged = converged && inner.converged;
        return inner.value;
    };
    auto res = integrate_adaptive(outer, w.center[0] - h1, w.center[0] + h1, tol, pieces);
    res.converged = res.converged && converged;
    return res;
}

void check_dimension(std::size_t p) {
    if (p < 1 || p > 2) throw DomainError("marginal quadrature supports p = 1 or 2 only, got p = " + std::to_string(p));
}

ConjugatePrior window_prior(const PriorSpec& prior) {
    if (const auto* c = std::get_if<ConjugatePrior>(&prior)) return *c;
    return ConjugatePrior{};
}

MarginalResult finish(double ref, const QuadratureResult& q) {
    MarginalResult out;
    if (!(q.value > 0.0) || !std::isfinite(q.value))
        throw NumericError("marginal quadrature produced a non-positive or non-finite value");
    out.log_value = ref + std::log(q.value);
    out.rel_error = q.abs_error / q.value;
    out.converged = q.converged;
    return out;
}

GlmModelSpec glm_target(const GlmModelSpec& m, MarginalMode mode) {
    if (mode == MarginalMode::Full) return m;
    GlmModelSpec r = m;
    r.data = m.data.without(m.outliers);
    r.outliers.clear();
    return r;
}

/// Expected information nu X^T X plus the prior curvature 1/scale^2 per coefficient.
/// Kink-free, unlike the observed Hessian, which jumps where an observation crosses z_l or z_r.
Eigen::MatrixXd glm_information(const GlmModelSpec& target) {
    const auto& x = target.data.x;
    Eigen::MatrixXd info = target.error.nu * (x.transpose() * x);
    for (Eigen::Index j = 0; j < info.rows(); ++j) {
        const double sc = (target.prior.size() == 1 ? target.prior.front() : target.prior.at(static_cast<std::size_t>(j))).scale;
        info(j, j) += 1.0 / (sc * sc);
    }
    return info;
}

/// Fisher scoring with backtracking; stops when no step improves the posterior.
Eigen::VectorXd scoring_mode(const GlmModelSpec& target, Eigen::VectorXd beta) {
    const Eigen::LLT<Eigen::MatrixXd> llt(glm_information(target));
    double fx = glm_log_posterior(target, beta);
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd grad = grad_glm_log_posterior(target, beta);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
        const Eigen::VectorXd dir = llt.solve(grad);
        bool moved = false;
        double t = 1.0;
        for (int k = 0; k < 60 && !moved; ++k, t *= 0.5) {
            const Eigen::VectorXd cand = beta + t * dir;
            const double fc = glm_log_posterior(target, cand);
            if (std::isfinite(fc) && fc > fx) {
                beta = cand;
                fx = fc;
                moved = true;
            }
        }
        if (!moved) break;
    }
    return beta;
}

}  // namespace

MarginalResult marginal_quadrature(const LinearModelSpec& m, MarginalMode mode, const QuadratureSettings& s) {
    m.data.validate();
    check_dimension(m.data.p());
    const int depth = std::max(1, s.depth);

    const ConjugatePrior cp = window_prior(m.prior);
    const auto fit = normal_conjugate_posterior(m.data.without(m.outliers), cp.a, cp.b);
    const BetaWindow window(fit.beta_hat, fit.precision_matrix);

    std::function<double(const ParameterPoint&)> log_target;
    std::optional<LimitingPosterior> limit;
    if (mode == MarginalMode::Limiting) {
        limit.emplace(m);
        log_target = [&](const ParameterPoint& p) { return limit->log_density(p); };
    } else {
        log_target = [&](const ParameterPoint& p) { return log_posterior(m, p); };
    }

    double ref = -std::numeric_limits<double>::infinity();
    const int grid = 561;
    for (int k = 0; k < grid; ++k) {
        const double g = s.gamma_lo + (s.gamma_hi - s.gamma_lo) * k / (grid - 1);
        ref = std::max(ref, log_target(ParameterPoint{fit.beta_hat, g}));
    }
    if (!std::isfinite(ref)) throw NumericError("marginal quadrature: target not finite on the reference grid");

    bool inner_ok = true;
    auto over_gamma = [&](double g) {
        const LogIntegrand log_f = [&](const Eigen::VectorXd& beta) {
            return log_target(ParameterPoint{beta, g}) - ref;
        };
        const auto r = integrate_beta(log_f, window, std::exp(0.5 * g), s.beta_pieces * depth, s.window_sd,
                                      s.inner_rel_tol);
        inner_ok = inner_ok && r.converged;
        return r.value;
    };
    auto q = integrate_adaptive(over_gamma, s.gamma_lo, s.gamma_hi, s.rel_tol, s.gamma_pieces * depth);
    q.converged = q.converged && inner_ok;
    return finish(ref, q);
}

TheoremRatio theorem_ratio(const LinearModelSpec& m, const LinearOutlierPath& path, double omega,
                           const QuadratureSettings& s) {
    path.validate();
    if (static_cast<std::size_t>(path.a.size()) != m.data.n())
        throw ConfigError("outlier path length does not match the dataset");
    LinearModelSpec spec = m;
    spec.data.y = apply_outlier_path(path, omega);
    spec.outliers = path.outlier_indices();

    TheoremRatio out;
    const auto full = marginal_quadrature(spec, MarginalMode::Full, s);
    const auto lim = marginal_quadrature(spec, MarginalMode::Limiting, s);
    out.log_full = full.log_value;
    out.log_limiting = lim.log_value;
    for (std::size_t i : spec.outliers)
        out.log_outlier_density += error_logpdf(spec.error, spec.data.y[static_cast<Eigen::Index>(i)]);
    out.log_ratio = out.log_full - out.log_limiting - out.log_outlier_density;
    out.ratio = std::exp(out.log_ratio);
    out.converged = full.converged && lim.converged;
    return out;
}

ImportanceEstimate importance_marginal(const LinearModelSpec& m, std::size_t n_draws, std::uint64_t seed) {
    m.data.validate();
    if (n_draws < 2) throw DomainError("importance_marginal needs at least 2 draws");
    const ConjugatePrior cp = window_prior(m.prior);
    const auto fit = normal_conjugate_posterior(m.data.without(m.outliers), cp.a, cp.b);
    const Eigen::LLT<Eigen::MatrixXd> llt(fit.precision_matrix);
    const auto p = fit.beta_hat.size();

    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(fit.ig_shape, 1.0 / fit.ig_scale);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> log_w(n_draws);
    for (std::size_t k = 0; k < n_draws; ++k) {
        const double tau = 1.0 / gamma(rng);
        Eigen::VectorXd z(p);
        for (Eigen::Index j = 0; j < p; ++j) z[j] = normal(rng);
        const Eigen::VectorXd beta = fit.beta_hat + std::sqrt(tau) * llt.matrixU().solve(z);
        const ParameterPoint pt{beta, std::log(tau)};
        log_w[k] = log_posterior(m, pt) - fit.log_density(pt);
    }
    const double mx = *std::max_element(log_w.begin(), log_w.end());
    double s1 = 0.0, s2 = 0.0;
    for (double lw : log_w) {
        const double w = std::exp(lw - mx);
        s1 += w;
        s2 += w * w;
    }
    const double n = static_cast<double>(n_draws);
    const double mean = s1 / n;
    const double var = std::max(0.0, (s2 / n - mean * mean) * n / (n - 1.0));
    ImportanceEstimate out;
    out.log_value = mx + std::log(mean);
    out.rel_se = std::sqrt(var / n) / mean;
    out.ess = s1 * s1 / s2;
    return out;
}

GlmLaplaceFit glm_laplace_fit(const GlmModelSpec& m, MarginalMode mode) {
    m.data.validate_positive();
    const GlmModelSpec reduced = glm_target(m, MarginalMode::Limiting);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.data.p()));
    start[0] = std::log(reduced.data.y.mean());
    Eigen::VectorXd mode_beta = scoring_mode(reduced, start);
    const GlmModelSpec target = glm_target(m, mode);
    if (mode == MarginalMode::Full) mode_beta = scoring_mode(target, mode_beta);
    const Eigen::MatrixXd info = glm_information(target);
    return GlmLaplaceFit{mode_beta, info.inverse()};
}

MarginalResult glm_marginal_quadrature(const GlmModelSpec& m, MarginalMode mode, const QuadratureSettings& s) {
    check_dimension(m.data.p());
    const int depth = std::max(1, s.depth);
    const GlmModelSpec target = glm_target(m, mode);
    const auto fit = glm_laplace_fit(m, mode);
    const BetaWindow window(fit.mode, fit.covariance.inverse());
    const double ref = glm_log_posterior(target, fit.mode);
    const LogIntegrand log_f = [&](const Eigen::VectorXd& beta) { return glm_log_posterior(target, beta) - ref; };
    // The outer tolerance governs both levels here since there is no gamma integral.
    const auto q = integrate_beta(log_f, window, 1.0, s.beta_pieces * depth, s.window_sd, s.inner_rel_tol);
    return finish(ref, q);
}

TheoremRatio glm_theorem_ratio(const GlmModelSpec& m, const GlmOutlierPath& path, double omega,
                               const QuadratureSettings& s) {
    path.validate();
    if (static_cast<std::size_t>(path.a.size()) != m.data.n())
        throw ConfigError("outlier path length does not match the dataset");
    GlmModelSpec spec = m;
    spec.data.y = apply_outlier_path(path, omega);
    spec.outliers = path.outlier_indices();

    TheoremRatio out;
    const auto full = glm_marginal_quadrature(spec, MarginalMode::Full, s);
    const auto lim = glm_marginal_quadrature(spec, MarginalMode::Limiting, s);
    out.log_full = full.log_value;
    out.log_limiting = lim.log_value;
    for (std::size_t i : spec.outliers)
        out.log_outlier_density += robust_gamma_logpdf(spec.error, spec.data.y[static_cast<Eigen::Index>(i)]);
    out.log_ratio = out.log_full - out.log_limiting - out.log_outlier_density;
    out.ratio = std::exp(out.log_ratio);
    out.converged = full.converged && lim.converged;
    return out;
}

namespace {

std::vector<SequencePoint> b2_sequence(const std::function<double(double)>& log_f, std::size_t n,
                                       const std::vector<double>& b, const std::vector<double>& omega_grid) {
    std::vector<SequencePoint> out;
    out.reserve(omega_grid.size());
    for (double w : omega_grid) {
        if (!(w > 0.0)) throw DomainError("lemma_b2_sequence: omega must be positive");
        double v = -static_cast<double>(n) * std::log(w);
        for (double bi : b) v -= log_f(2.0 * bi * w);
        out.push_back({w, v});
    }
    return out;
}

}  // namespace

std::vector<SequencePoint> lemma_b2_sequence(const TailClass& tail, std::size_t n, const std::vector<double>& b,
                                             const std::vector<double>& omega_grid) {
    if (b.size() > n) throw ConfigError("more outliers than observations");
    switch (tail.kind) {
        case TailKind::RegularlyVarying:
            return b2_sequence(
                [&](double y) { return std::log(tail.constant) - (tail.alpha + 1.0) * std::log(y); }, n, b,
                omega_grid);
        case TailKind::LogRegularlyVarying:
            return b2_sequence(
                [&](double y) {
                    if (!(y > 1.0)) throw DomainError("log-regular tail form needs |y| > 1");
                    return std::log(tail.constant) - std::log(y) - (tail.alpha + 1.0) * std::log(std::log(y));
                },
                n, b, omega_grid);
        case TailKind::ExponentialTail:
            break;
    }
    throw TailClassError("lemma_b2_sequence needs a heavy-tailed density");
}

std::vector<SequencePoint> lemma_b2_sequence(const ErrorDensity& f, std::size_t n, const std::vector<double>& b,
                                             const std::vector<double>& omega_grid) {
    if (b.size() > n) throw ConfigError("more outliers than observations");
    return b2_sequence([&](double y) { return error_logpdf(f, y); }, n, b, omega_grid);
}

TailBoundVerdict gaussian_tail_bound_check(double sigma0, const std::vector<double>& t_grid) {
    if (!(sigma0 > 0.0)) throw DomainError("sigma0 must be positive");
    TailBoundVerdict v;
    for (double t : t_grid) {
        if (!(t > 0.0)) throw DomainError("tail bound grid must be positive");
        const double u = t / sigma0;
        TailBoundPoint pt{t, special::normal_sf(u), special::kInvSqrt2Pi / u * std::exp(-0.5 * u * u)};
        v.holds = v.holds && pt.survival <= pt.bound;
        v.points.push_back(pt);
    }
    return v;
}

}  // namespace robreg
