#include "robreg/conjugate.hpp"

#include <cmath>

#include "robreg/errors.hpp"
#include "robreg/special_functions.hpp"

namespace robreg {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& a) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericError("X^T X + I is not positive definite");
    return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

ConjugatePosterior normal_conjugate_posterior(const Dataset& d, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("inverse-gamma a and b must be positive");
    if (d.x.rows() != d.y.size()) throw DomainError("X and y have different row counts");
    if (!d.x.allFinite() || !d.y.allFinite()) throw NumericError("non-finite data");

    ConjugatePosterior post;
    post.prior_a = a;
    post.prior_b = b;
    post.n = d.n();
    const auto p = d.x.cols();
    post.precision_matrix = d.x.transpose() * d.x + Eigen::MatrixXd::Identity(p, p);
    const auto llt = factor(post.precision_matrix);
    const Eigen::VectorXd xty = d.x.transpose() * d.y;
    post.beta_hat = llt.solve(xty);
    post.ig_shape = (2.0 * a + static_cast<double>(d.n())) / 2.0;
    // y^T y - beta_hat^T A beta_hat = y^T y - beta_hat^T X^T y
    post.ig_scale = (2.0 * b + d.y.squaredNorm() - post.beta_hat.dot(xty)) / 2.0;
    if (!std::isfinite(post.ig_scale) || !(post.ig_scale > 0.0))
        throw NumericError("degenerate inverse-gamma scale");
    return post;
}

double ConjugatePosterior::sigma2_mean() const {
    if (!(ig_shape > 1.0)) throw DomainError("E[sigma^2] needs ig_shape > 1");
    return ig_scale / (ig_shape - 1.0);
}

Eigen::MatrixXd ConjugatePosterior::beta_covariance() const {
    const auto llt = factor(precision_matrix);
    return sigma2_mean() * llt.solve(Eigen::MatrixXd::Identity(precision_matrix.rows(), precision_matrix.cols()));
}

Eigen::VectorXd ConjugatePosterior::beta_sd() const {
    return beta_covariance().diagonal().cwiseSqrt();
}

double ConjugatePosterior::log_marginal() const {
    using special::log_gamma;
    const double half_n = 0.5 * static_cast<double>(n);
    return prior_a * std::log(prior_b) - log_gamma(prior_a) + log_gamma(ig_shape) -
           ig_shape * std::log(ig_scale) - half_n * std::log(2.0 * M_PI) -
           0.5 * log_det(factor(precision_matrix));
}

double ConjugatePosterior::log_density(const ParameterPoint& p) const {
    using special::log_gamma;
    const auto llt = factor(precision_matrix);
    const double k = static_cast<double>(beta_hat.size());
    const Eigen::VectorXd diff = p.beta - beta_hat;
    const double quad = diff.dot(precision_matrix * diff);
    const double tau = std::exp(p.gamma);
    // Normal(beta_hat, tau A^{-1}) times InvGamma(tau) times d tau / d gamma.
    const double log_beta = -0.5 * k * std::log(2.0 * M_PI * tau) + 0.5 * log_det(llt) - 0.5 * quad / tau;
    const double log_tau = ig_shape * std::log(ig_scale) - log_gamma(ig_shape) -
                           (ig_shape + 1.0) * p.gamma - ig_scale / tau;
    return log_beta + log_tau + p.gamma;
}

}  // namespace robreg
