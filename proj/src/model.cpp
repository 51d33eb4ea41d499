#include "robreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "robreg/errors.hpp"
#include "robreg/special_functions.hpp"

namespace robreg {

namespace sf = robreg::special;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_path_common(const Eigen::VectorXd& a, const Eigen::VectorXd& b, std::size_t extra,
                       const char* what) {
    if (a.size() != b.size() || static_cast<std::size_t>(a.size()) != extra)
        throw ConfigError(std::string(what) + ": a, b and sign/direction lengths differ");
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]) || a[i] < 0.0)
            throw ConfigError(std::string(what) + ": a_i must be finite and nonnegative");
        if (!(b[i] == 0.0 || b[i] >= 1.0) || !std::isfinite(b[i]))
            throw ConfigError(std::string(what) + ": b_i must be 0 or >= 1");
    }
}

std::vector<std::size_t> indices_with_slope(const Eigen::VectorXd& b) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < b.size(); ++i)
        if (b[i] >= 1.0) out.push_back(static_cast<std::size_t>(i));
    return out;
}

const CoefficientPrior& coefficient_for(const std::vector<CoefficientPrior>& c, Eigen::Index j) {
    if (c.empty()) throw ConfigError("independent prior needs at least one coefficient entry");
    return c.size() == 1 ? c.front() : c.at(static_cast<std::size_t>(j));
}

void check_coefficients(const std::vector<CoefficientPrior>& c, std::size_t p) {
    if (!(c.size() == 1 || c.size() == p))
        throw ConfigError("coefficient prior list must have 1 or p entries");
    for (const auto& cp : c)
        if (!(cp.scale > 0.0)) throw ConfigError("coefficient prior scale must be positive");
}

double log_coefficients(const std::vector<CoefficientPrior>& c, const Eigen::VectorXd& beta) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        s += log_coefficient_prior(coefficient_for(c, j), beta[j]);
    return s;
}

}  // namespace

void Dataset::validate() const {
    if (y.size() < 1) throw ConfigError("dataset must contain at least one observation");
    if (x.cols() < 1) throw ConfigError("design matrix must have at least one column");
    if (x.rows() != y.size()) throw ConfigError("design matrix rows must equal number of observations");
    if (!x.allFinite() || !y.allFinite()) throw ConfigError("dataset entries must be finite");
}

void Dataset::validate_positive() const {
    validate();
    if ((y.array() <= 0.0).any()) throw DomainError("GLM observations must be strictly positive");
}

Dataset Dataset::without(const std::vector<std::size_t>& drop) const {
    const std::set<std::size_t> skip(drop.begin(), drop.end());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (!skip.contains(static_cast<std::size_t>(i))) keep.push_back(i);
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(keep.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.x.row(static_cast<Eigen::Index>(k)) = x.row(keep[k]);
        out.y[static_cast<Eigen::Index>(k)] = y[keep[k]];
    }
    return out;
}

void LinearOutlierPath::validate() const {
    check_path_common(a, b, sign.size(), "LinearOutlierPath");
    for (int s : sign)
        if (s != 1 && s != -1) throw ConfigError("LinearOutlierPath: sign must be +1 or -1");
}

std::vector<std::size_t> LinearOutlierPath::outlier_indices() const { return indices_with_slope(b); }

void GlmOutlierPath::validate() const {
    check_path_common(a, b, direction.size(), "GlmOutlierPath");
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (b[i] == 0.0 && !(a[i] > 0.0))
            throw ConfigError("GlmOutlierPath: non-outlier a_i must be positive");
}

std::vector<std::size_t> GlmOutlierPath::outlier_indices() const { return indices_with_slope(b); }

Eigen::VectorXd apply_outlier_path(const LinearOutlierPath& path, double omega) {
    path.validate();
    if (!(omega >= 0.0)) throw DomainError("apply_outlier_path: omega must be nonnegative");
    Eigen::VectorXd y(path.a.size());
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y[i] = path.sign[static_cast<std::size_t>(i)] * (path.a[i] + path.b[i] * omega);
    return y;
}

Eigen::VectorXd apply_outlier_path(const GlmOutlierPath& path, double omega) {
    path.validate();
    Eigen::VectorXd y(path.a.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (path.b[i] == 0.0) {
            y[i] = path.a[i];
            continue;
        }
        if (!(omega > 0.0)) throw DomainError("apply_outlier_path: GLM outliers need omega > 0");
        const double scaled = path.b[i] * omega;
        y[i] = path.direction[static_cast<std::size_t>(i)] == OutlierDirection::Large
                   ? scaled
                   : 1.0 / scaled;
    }
    return y;
}

LinearOutlierPath linear_path_from_observations(const Eigen::VectorXd& y,
                                                const std::vector<std::size_t>& outliers,
                                                double slope) {
    if (!(slope >= 1.0)) throw ConfigError("outlier slope must be >= 1");
    LinearOutlierPath path;
    path.a = y.cwiseAbs();
    path.b = Eigen::VectorXd::Zero(y.size());
    path.sign.resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) path.sign[static_cast<std::size_t>(i)] = y[i] < 0.0 ? -1 : 1;
    for (std::size_t i : outliers) {
        if (i >= static_cast<std::size_t>(y.size())) throw ConfigError("outlier index out of range");
        path.b[static_cast<Eigen::Index>(i)] = slope;
    }
    return path;
}

Eigen::VectorXd ParameterPoint::packed() const {
    Eigen::VectorXd v(beta.size() + 1);
    v.head(beta.size()) = beta;
    v[beta.size()] = gamma;
    return v;
}

ParameterPoint ParameterPoint::unpack(const Eigen::VectorXd& v) {
    ParameterPoint p;
    p.beta = v.head(v.size() - 1);
    p.gamma = v[v.size() - 1];
    return p;
}

Eigen::VectorXd Gradient::packed() const {
    Eigen::VectorXd v(beta.size() + 1);
    v.head(beta.size()) = beta;
    v[beta.size()] = gamma;
    return v;
}

double log_coefficient_prior(const CoefficientPrior& c, double beta) {
    const double u = (beta - c.location) / c.scale;
    if (c.family == CoefficientFamily::Laplace) return -std::log(2.0 * c.scale) - std::abs(u);
    return -std::log(c.scale) - sf::kLogSqrt2Pi - 0.5 * u * u;
}

double dlog_coefficient_prior(const CoefficientPrior& c, double beta) {
    const double d = beta - c.location;
    if (c.family == CoefficientFamily::Laplace) return d > 0.0 ? -1.0 / c.scale : (d < 0.0 ? 1.0 / c.scale : 0.0);
    return -d / (c.scale * c.scale);
}

double log_prior_density(const PriorSpec& prior, const ParameterPoint& p) {
    const double g = p.gamma;
    const auto dim = static_cast<double>(p.beta.size());
    return std::visit(
        overloaded{
            [&](const ConjugatePrior& c) {
                const double log_ig = c.a * std::log(c.b) - sf::log_gamma(c.a) - (c.a + 1.0) * g -
                                      c.b * std::exp(-g);
                const double log_beta = -dim * sf::kLogSqrt2Pi - 0.5 * dim * g -
                                        0.5 * std::exp(-g) * p.beta.squaredNorm();
                return log_ig + log_beta + g;
            },
            [&](const IndependentPrior& ip) {
                check_coefficients(ip.coefficients, p.beta.size());
                const double log_var = std::visit(
                    overloaded{
                        [g](const LogNormalVariance& v) {
                            // density of log tau is N(m, s^2); the Jacobian cancels the 1/tau.
                            const double u = (g - v.m) / v.s;
                            return -std::log(v.s) - sf::kLogSqrt2Pi - 0.5 * u * u;
                        },
                        [g](const InvGammaVariance& v) {
                            return v.a * std::log(v.b) - sf::log_gamma(v.a) - (v.a + 1.0) * g -
                                   v.b * std::exp(-g) + g;
                        },
                    },
                    ip.variance);
                return log_var + log_coefficients(ip.coefficients, p.beta);
            },
        },
        prior);
}

Gradient grad_log_prior_density(const PriorSpec& prior, const ParameterPoint& p) {
    const double g = p.gamma;
    const auto dim = static_cast<double>(p.beta.size());
    Gradient out;
    std::visit(overloaded{
                   [&](const ConjugatePrior& c) {
                       const double eg = std::exp(-g);
                       out.beta = -eg * p.beta;
                       out.gamma = -(c.a + 1.0) + c.b * eg - 0.5 * dim +
                                   0.5 * eg * p.beta.squaredNorm() + 1.0;
                   },
                   [&](const IndependentPrior& ip) {
                       check_coefficients(ip.coefficients, p.beta.size());
                       out.beta.resize(p.beta.size());
                       for (Eigen::Index j = 0; j < p.beta.size(); ++j)
                           out.beta[j] = dlog_coefficient_prior(coefficient_for(ip.coefficients, j),
                                                                p.beta[j]);
                       out.gamma = std::visit(
                           overloaded{
                               [g](const LogNormalVariance& v) { return -(g - v.m) / (v.s * v.s); },
                               [g](const InvGammaVariance& v) {
                                   return -(v.a + 1.0) + v.b * std::exp(-g) + 1.0;
                               },
                           },
                           ip.variance);
                   },
               },
               prior);
    return out;
}

double log_likelihood_term(const ErrorDensity& f, double y, double x_beta, double gamma) {
    return error_logpdf(f, (y - x_beta) * std::exp(-0.5 * gamma)) - 0.5 * gamma;
}

namespace {

double log_likelihood(const ErrorDensity& f, const Dataset& d, const ParameterPoint& p) {
    const Eigen::VectorXd fitted = d.x * p.beta;
    const double inv_sigma = std::exp(-0.5 * p.gamma);
    double s = 0.0;
    for (Eigen::Index i = 0; i < d.y.size(); ++i) s += error_logpdf(f, (d.y[i] - fitted[i]) * inv_sigma);
    return s - 0.5 * static_cast<double>(d.y.size()) * p.gamma;
}

void add_grad_log_likelihood(const ErrorDensity& f, const Dataset& d, const ParameterPoint& p,
                             Gradient& g) {
    const Eigen::VectorXd fitted = d.x * p.beta;
    const double inv_sigma = std::exp(-0.5 * p.gamma);
    Eigen::VectorXd weights(d.y.size());
    double dgamma = 0.0;
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        const double z = (d.y[i] - fitted[i]) * inv_sigma;
        const double score = error_dlogpdf(f, z);
        weights[i] = score * inv_sigma;  // d/d(x_i^T beta) of log f(z) is -score/sigma
        dgamma += -0.5 * score * z;
    }
    g.beta -= d.x.transpose() * weights;
    g.gamma += dgamma - 0.5 * static_cast<double>(d.y.size());
}

void check_dims(const LinearModelSpec& m, const ParameterPoint& p) {
    if (static_cast<std::size_t>(p.beta.size()) != m.data.p())
        throw ConfigError("parameter dimension does not match the design matrix");
}

}  // namespace

double log_posterior(const LinearModelSpec& m, const ParameterPoint& p) {
    check_dims(m, p);
    return log_prior_density(m.prior, p) + log_likelihood(m.error, m.data, p);
}

Gradient grad_log_posterior(const LinearModelSpec& m, const ParameterPoint& p) {
    check_dims(m, p);
    Gradient g = grad_log_prior_density(m.prior, p);
    add_grad_log_likelihood(m.error, m.data, p, g);
    return g;
}

LimitingPosterior::LimitingPosterior(LinearModelSpec spec) {
    if (!spec.error.tail.heavy())
        throw TailClassError("limiting posterior undefined for " + spec.error.label() +
                             " (exponential tails)");
    const std::set<std::size_t> unique(spec.outliers.begin(), spec.outliers.end());
    for (std::size_t i : unique)
        if (i >= spec.data.n()) throw ConfigError("outlier index out of range");
    outlier_count_ = unique.size();
    const auto verdict =
        breakdown_check(spec.data.n(), outlier_count_, spec.error.tail, 1.0, 0);
    if (!verdict.assumption3_holds)
        throw ConfigError("limiting posterior may be improper: " + std::to_string(outlier_count_) +
                          " outliers among n = " + std::to_string(spec.data.n()) + " violates " +
                          (spec.error.tail.kind == TailKind::RegularlyVarying
                               ? "|O^c| > alpha |O|"
                               : "|O^c| >= |O|"));
    reduced_ = spec;
    reduced_.data = spec.data.without(spec.outliers);
    reduced_.outliers.clear();
}

double LimitingPosterior::log_density(const ParameterPoint& p) const {
    return log_posterior(reduced_, p) +
           static_cast<double>(outlier_count_) * log_g_sigma(reduced_.error, p.sigma());
}

Gradient LimitingPosterior::gradient(const ParameterPoint& p) const {
    Gradient g = grad_log_posterior(reduced_, p);
    if (reduced_.error.tail.kind == TailKind::RegularlyVarying)
        g.gamma += 0.5 * static_cast<double>(outlier_count_) * reduced_.error.tail.alpha;
    return g;
}

double log_limiting_posterior(const LinearModelSpec& m, const ParameterPoint& p) {
    return LimitingPosterior(m).log_density(p);
}

double glm_log_likelihood_term(const RobustGammaDensity& f, double y, double eta) {
    return robust_gamma_logpdf_at_log(f, std::log(y) - eta) - eta;
}

namespace {

double glm_log_posterior_rows(const GlmModelSpec& m, const Eigen::VectorXd& beta, const Dataset& d) {
    d.validate_positive();
    if (static_cast<std::size_t>(beta.size()) != d.p())
        throw ConfigError("parameter dimension does not match the design matrix");
    check_coefficients(m.prior, d.p());
    const Eigen::VectorXd eta = d.x * beta;
    double s = log_coefficients(m.prior, beta);
    for (Eigen::Index i = 0; i < d.y.size(); ++i) s += glm_log_likelihood_term(m.error, d.y[i], eta[i]);
    return s;
}

}  // namespace

double glm_log_posterior(const GlmModelSpec& m, const Eigen::VectorXd& beta) {
    return glm_log_posterior_rows(m, beta, m.data);
}

double glm_log_limiting_posterior(const GlmModelSpec& m, const Eigen::VectorXd& beta) {
    return glm_log_posterior_rows(m, beta, m.data.without(m.outliers));
}

Eigen::VectorXd grad_glm_log_posterior(const GlmModelSpec& m, const Eigen::VectorXd& beta) {
    m.data.validate_positive();
    check_coefficients(m.prior, m.data.p());
    const Eigen::VectorXd eta = m.data.x * beta;
    Eigen::VectorXd weights(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        weights[i] = -1.0 - robust_gamma_dlogpdf_dlog(m.error, std::log(m.data.y[i]) - eta[i]);
    Eigen::VectorXd g = m.data.x.transpose() * weights;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        g[j] += dlog_coefficient_prior(coefficient_for(m.prior, j), beta[j]);
    return g;
}

BreakdownVerdict breakdown_check(std::size_t n, std::size_t outlier_count, const TailClass& tail,
                                 double prior_shape_a, unsigned moment_order) {
    if (outlier_count > n) throw ConfigError("breakdown_check: more outliers than observations");
    BreakdownVerdict v;
    v.n = n;
    v.outliers = outlier_count;
    v.tail = tail.kind;
    const auto o = static_cast<double>(outlier_count);
    const auto oc = static_cast<double>(n - outlier_count);
    switch (tail.kind) {
        case TailKind::RegularlyVarying: {
            v.assumption3_holds = oc > tail.alpha * o;
            const double margin = 0.5 * (oc - tail.alpha * o) + prior_shape_a;
            v.refined_margin = margin;
            v.refined_holds_for_moment = margin > static_cast<double>(moment_order);
            v.breakdown_fraction = 1.0 / (tail.alpha + 1.0);
            break;
        }
        case TailKind::LogRegularlyVarying:
            v.assumption3_holds = oc >= o;
            v.breakdown_fraction = 0.5;
            break;
        case TailKind::ExponentialTail:
            v.assumption3_holds = outlier_count == 0;
            v.breakdown_fraction = 0.0;
            break;
    }
    return v;
}

Dataset simulate_dataset(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw ConfigError("simulate_dataset: n must be at least 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(n), 2);
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double xi = static_cast<double>(i + 1);
        d.x(r, 0) = 1.0;
        d.x(r, 1) = xi;
        d.y[r] = 1.0 + xi + noise(rng);
    }
    return d;
}

Dataset simulate_glm_dataset(std::size_t n, const Eigen::VectorXd& beta, double nu,
                             std::uint64_t seed) {
    if (n < 2) throw ConfigError("simulate_glm_dataset: n must be at least 2");
    if (beta.size() != 2) throw ConfigError("simulate_glm_dataset: beta must have two entries");
    if (!(nu > 0.0)) throw ConfigError("simulate_glm_dataset: nu must be positive");
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> shape_draw(nu, 1.0 / nu);
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(n), 2);
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        d.x(r, 0) = 1.0;
        d.x(r, 1) = static_cast<double>(i + 1) / static_cast<double>(n);
        d.y[r] = std::exp(d.x.row(r).dot(beta)) * shape_draw(rng);
    }
    return d;
}

}  // namespace robreg
