#pragma once

#include <Eigen/Dense>

#include "robreg/model.hpp"

namespace robreg {

/// Closed-form posterior of the Normal-error model under the conjugate prior:
/// beta | sigma^2, y ~ N(beta_hat, sigma^2 A^{-1}), sigma^2 | y ~ InvGamma(ig_shape, ig_scale)
/// with A = X^T X + I.
struct ConjugatePosterior {
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd precision_matrix;
    double ig_shape = 0.0;
    double ig_scale = 0.0;
    double prior_a = 0.0;
    double prior_b = 0.0;
    std::size_t n = 0;

    /// E[sigma^2 | y]; requires ig_shape > 1.
    double sigma2_mean() const;
    /// Marginal posterior sd of each beta_j (multivariate t); requires ig_shape > 1.
    Eigen::VectorXd beta_sd() const;
    /// Posterior covariance of beta, E[sigma^2] A^{-1}.
    Eigen::MatrixXd beta_covariance() const;
    /// log m(y) for the Normal-error model, including the (2 pi)^{-n/2} factor.
    double log_marginal() const;
    /// Log of the normalized joint posterior density in (beta, gamma = log sigma^2) coordinates.
    double log_density(const ParameterPoint& p) const;
};

/// Throws NumericError if A fails to factorize (non-finite inputs).
ConjugatePosterior normal_conjugate_posterior(const Dataset& d, double a, double b);

}  // namespace robreg
