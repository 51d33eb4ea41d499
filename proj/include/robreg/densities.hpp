#pragma once

#include <optional>
#include <string>
#include <variant>

#include "robreg/quadrature.hpp"

namespace robreg {

enum class TailKind { RegularlyVarying, LogRegularlyVarying, ExponentialTail };

/// Tail behaviour of a symmetric error density.
///
/// RegularlyVarying:     f(y) ~ constant * |y|^-(alpha+1)
/// LogRegularlyVarying:  f(y) ~ constant * |y|^-1 * (log|y|)^-(alpha+1)
/// ExponentialTail:      lighter than any power; constant and alpha are unused (0).
struct TailClass {
    TailKind kind = TailKind::ExponentialTail;
    double constant = 0.0;
    double alpha = 0.0;

    bool heavy() const { return kind != TailKind::ExponentialTail; }
};

std::string to_string(TailKind kind);

struct NormalFamily {};

struct StudentTFamily {
    double nu = 0.0;
};

/// Log-Pareto-tailed normal: standard normal on |y| < theta, log-Pareto beyond.
struct LptnFamily {
    double rho = 0.0;
    double theta = 0.0;
    double lambda = 0.0;
};

using ErrorFamily = std::variant<NormalFamily, StudentTFamily, LptnFamily>;

/// Standardized error density f of the location-scale regression model.
/// Immutable once built; construct through normal_error(), student_t_error()
/// or lptn_build().
struct ErrorDensity {
    ErrorFamily family;
    double sup_density = 0.0;  // f(0), the global bound
    TailClass tail;

    /// Short label used in sweep output, e.g. "student_t(nu=4)".
    std::string label() const;
};

ErrorDensity normal_error();
ErrorDensity student_t_error(double nu);

/// Tail constants of the Student-t density: alpha = nu and
/// C_f = Gamma((nu+1)/2) nu^(nu/2) / (sqrt(pi) Gamma(nu/2)).
TailClass student_tail_constants(double nu);

/// Builds the LPTN density.  Requires 2 Phi(1) - 1 < rho < 1; throws ConfigError otherwise.
ErrorDensity lptn_build(double rho);

/// log f(y).  Finite for every finite y, including |y| near the double range.
double error_logpdf(const ErrorDensity& d, double y);

/// d/dy log f(y).  One-sided (tail branch) at |y| = theta for LPTN.
double error_dlogpdf(const ErrorDensity& d, double y);

/// Heavy-tailed gamma density on (0, inf) with mean 1 and shape nu: a gamma
/// core on [z_l, z_r] and log-Pareto tails beyond the breakpoints.
struct RobustGammaDensity {
    double nu = 0.0;
    double c = 0.0;
    double z_r = 0.0;
    double z_l = 0.0;
    double lambda_r = 0.0;
    std::optional<double> lambda_l;  // present iff has_left_tail
    bool has_left_tail = false;

    double log_norm = 0.0;     // nu log nu - log Gamma(nu)
    double log_fmid_zr = 0.0;  // log f_mid(z_r)
    double log_fmid_zl = 0.0;  // log f_mid(z_l); only meaningful with a left tail

    /// Tail class of the right tail; alpha = lambda_r - 1.
    TailClass right_tail() const;
};

/// Default tuning constant for the robust gamma density.
inline constexpr double kDefaultRobustGammaC = 1.6;

RobustGammaDensity robust_gamma_build(double nu, double c = kDefaultRobustGammaC);

/// log f_mid(z) = -nu z + (nu - 1) log z + nu log nu - log Gamma(nu).
double robust_gamma_mid_logpdf(const RobustGammaDensity& d, double z);

/// log f_{nu,c}(z) for z > 0; DomainError for z <= 0.
double robust_gamma_logpdf(const RobustGammaDensity& d, double z);

/// log f_{nu,c}(exp(log_z)); works for log_z far outside the double range of z.
double robust_gamma_logpdf_at_log(const RobustGammaDensity& d, double log_z);

/// d log f / d log z evaluated at z = exp(log_z).
double robust_gamma_dlogpdf_dlog(const RobustGammaDensity& d, double log_z);

/// Closed-form mass of the right tail, f_mid(z_r) z_r log(z_r) / (lambda_r - 1).
double robust_gamma_right_tail_mass(const RobustGammaDensity& d);

/// Closed-form mass of the left tail, f_mid(z_l) z_l log(1/z_l) / (lambda_l - 1);
/// ConfigError when the density has no left tail.
double robust_gamma_left_tail_mass(const RobustGammaDensity& d);

/// P(Z > z_r) and P(Z < z_l) for Z ~ Gamma(shape nu, mean 1).
double robust_gamma_core_right_survival(const RobustGammaDensity& d);
double robust_gamma_core_left_cdf(const RobustGammaDensity& d);

/// Scale factor of the location-scale limit: sigma^alpha (regularly varying)
/// or 1 (log-regularly varying).  TailClassError for exponential tails.
double g_sigma(const ErrorDensity& d, double sigma);
double log_g_sigma(const ErrorDensity& d, double sigma);

/// (1/sigma) f((y - x_beta)/sigma) / (g(sigma) f(y)), formed in log space.
double limit_ratio_location_scale(const ErrorDensity& d, double x_beta, double sigma, double y);

/// [f(y/mu)/mu] / f(y) for the robust gamma density.  ConfigError when y < 1
/// (the small-outlier side) and the density has no left tail.
double glm_limit_ratio(const RobustGammaDensity& d, double mu, double y);

/// Normalization check: the central part is integrated numerically and the
/// log-Pareto tails (when present) in closed form.
struct NormalizationResult {
    double total = 0.0;
    double central = 0.0;
    double tails = 0.0;
    double abs_error = 0.0;
    bool converged = true;
};

NormalizationResult normalization_integral(const ErrorDensity& d, double rel_tol = 1e-12);
NormalizationResult normalization_integral(const RobustGammaDensity& d, double rel_tol = 1e-12);

}  // namespace robreg
