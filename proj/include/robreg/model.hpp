#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "robreg/densities.hpp"

namespace robreg {

/// Design matrix (rows x_i^T, intercept column explicit) and observations.
struct Dataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t p() const { return static_cast<std::size_t>(x.cols()); }

    /// Throws ConfigError unless n >= 1, p >= 1, shapes agree and all entries are finite.
    void validate() const;
    /// As validate(), plus y_i > 0 for every observation.
    void validate_positive() const;

    /// Rows not listed in `drop`, in their original order.
    Dataset without(const std::vector<std::size_t>& drop) const;
};

/// Outlier path for the linear model: y_i = sign_i (a_i + b_i omega).
/// b_i = 0 marks a non-outlier; outliers have b_i >= 1.
struct LinearOutlierPath {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    std::vector<int> sign;

    void validate() const;
    std::vector<std::size_t> outlier_indices() const;
};

enum class OutlierDirection { Large, Small };

/// Outlier path for the gamma GLM: non-outliers y_i = a_i, large outliers
/// y_i = b_i omega, small outliers y_i = 1 / (b_i omega).
struct GlmOutlierPath {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    std::vector<OutlierDirection> direction;

    void validate() const;
    std::vector<std::size_t> outlier_indices() const;
};

/// Observations at position omega along the path.
Eigen::VectorXd apply_outlier_path(const LinearOutlierPath& path, double omega);
Eigen::VectorXd apply_outlier_path(const GlmOutlierPath& path, double omega);

/// Builds a path whose omega = 0 configuration reproduces `y`: a_i = |y_i|,
/// sign_i = sign(y_i), b_i = slope for listed outliers and 0 otherwise.
LinearOutlierPath linear_path_from_observations(const Eigen::VectorXd& y,
                                                const std::vector<std::size_t>& outliers,
                                                double slope = 1.0);

/// beta | sigma ~ N(0, sigma^2 I), sigma^2 ~ InvGamma(a, b).
struct ConjugatePrior {
    double a = 2.0;
    double b = 2.0;
};

enum class CoefficientFamily { Laplace, Normal };

struct CoefficientPrior {
    CoefficientFamily family = CoefficientFamily::Laplace;
    double location = 0.0;
    double scale = 1.0;
};

struct LogNormalVariance {
    double m = 0.0;
    double s = 1.0;
};

struct InvGammaVariance {
    double a = 2.0;
    double b = 2.0;
};

/// Independent sub-exponential coefficients and an independent prior on sigma^2
/// with finite inverse moments.  A single coefficient entry is broadcast to all p.
struct IndependentPrior {
    std::vector<CoefficientPrior> coefficients{CoefficientPrior{}};
    std::variant<LogNormalVariance, InvGammaVariance> variance = LogNormalVariance{};
};

using PriorSpec = std::variant<ConjugatePrior, IndependentPrior>;

/// Unconstrained coordinates (beta, gamma = log sigma^2).
struct ParameterPoint {
    Eigen::VectorXd beta;
    double gamma = 0.0;

    double sigma() const { return std::exp(0.5 * gamma); }

    Eigen::VectorXd packed() const;
    static ParameterPoint unpack(const Eigen::VectorXd& v);
};

struct Gradient {
    Eigen::VectorXd beta;
    double gamma = 0.0;

    Eigen::VectorXd packed() const;
};

struct LinearModelSpec {
    ErrorDensity error;
    PriorSpec prior = ConjugatePrior{};
    Dataset data;
    std::vector<std::size_t> outliers;  // O, used by the limiting posterior
};

struct GlmModelSpec {
    RobustGammaDensity error;
    std::vector<CoefficientPrior> prior{CoefficientPrior{CoefficientFamily::Normal, 0.0, 10.0}};
    Dataset data;
    std::vector<std::size_t> outliers;
};

/// log pi(e^gamma) + log pi(beta | e^gamma) + gamma (the Jacobian of tau = e^gamma).
double log_prior_density(const PriorSpec& prior, const ParameterPoint& p);
Gradient grad_log_prior_density(const PriorSpec& prior, const ParameterPoint& p);

/// log[(1/sigma) f((y_i - x_i^T beta)/sigma)] for one observation.
double log_likelihood_term(const ErrorDensity& f, double y, double x_beta, double gamma);

/// Unnormalized log posterior in (beta, gamma):
///   log pi(e^g) + log pi(beta | e^g) - (n/2 - 1) g + sum_i log f((y_i - x_i^T beta) e^{-g/2}).
double log_posterior(const LinearModelSpec& m, const ParameterPoint& p);
Gradient grad_log_posterior(const LinearModelSpec& m, const ParameterPoint& p);

/// Limiting posterior pi(beta, sigma | y_{O^c}): the prior, the g(sigma)^{|O|}
/// factor and the likelihood of the non-outliers only.  Construction rejects
/// exponential tails and configurations violating |O^c| > alpha |O|
/// (regularly varying) or |O^c| >= |O| (log-regularly varying).
class LimitingPosterior {
public:
    explicit LimitingPosterior(LinearModelSpec spec);

    double log_density(const ParameterPoint& p) const;
    Gradient gradient(const ParameterPoint& p) const;

    std::size_t outlier_count() const { return outlier_count_; }
    /// The non-outlier posterior target (data restricted to O^c).
    const LinearModelSpec& reduced() const { return reduced_; }

private:
    LinearModelSpec reduced_;
    std::size_t outlier_count_ = 0;
};

double log_limiting_posterior(const LinearModelSpec& m, const ParameterPoint& p);

/// Unnormalized GLM log posterior over beta:
///   sum_j log pi_j(beta_j) + sum_i [-x_i^T beta + log f_{nu,c}(y_i e^{-x_i^T beta})].
double glm_log_posterior(const GlmModelSpec& m, const Eigen::VectorXd& beta);
Eigen::VectorXd grad_glm_log_posterior(const GlmModelSpec& m, const Eigen::VectorXd& beta);

/// GLM posterior restricted to non-outliers (no trace term: the limit ratio is 1).
double glm_log_limiting_posterior(const GlmModelSpec& m, const Eigen::VectorXd& beta);

/// log[(1/mu) f_{nu,c}(y/mu)] with mu = exp(eta), evaluated in log space.
double glm_log_likelihood_term(const RobustGammaDensity& f, double y, double eta);

double log_coefficient_prior(const CoefficientPrior& prior, double beta);
double dlog_coefficient_prior(const CoefficientPrior& prior, double beta);

struct BreakdownVerdict {
    std::size_t n = 0;
    std::size_t outliers = 0;
    TailKind tail = TailKind::ExponentialTail;
    bool assumption3_holds = false;
    /// (|O^c| - alpha |O|)/2 + a; defined for regularly varying tails only.
    std::optional<double> refined_margin;
    std::optional<bool> refined_holds_for_moment;
    /// 1/(alpha + 1) (regularly varying), 1/2 (log-regularly varying), 0 (exponential).
    double breakdown_fraction = 0.0;
};

BreakdownVerdict breakdown_check(std::size_t n, std::size_t outlier_count, const TailClass& tail,
                                 double prior_shape_a, unsigned moment_order = 1);

/// n observations with x_{i,2} = i (i = 1..n), intercept column of ones and
/// y_i = 1 + i + eps_i with eps_i iid N(0, 1).  Deterministic in `seed`.
Dataset simulate_dataset(std::size_t n, std::uint64_t seed);

/// Gamma GLM data: x_{i,2} = i/n, mu_i = exp(x_i^T beta), y_i = mu_i Z_i with
/// Z_i ~ Gamma(shape nu, mean 1).
Dataset simulate_glm_dataset(std::size_t n, const Eigen::VectorXd& beta, double nu,
                             std::uint64_t seed);

}  // namespace robreg
