#pragma once

// Scalar special functions used by the density formulas.  All functions are
// pure; domain violations throw robreg::DomainError.

namespace robreg::special {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// Regularized upper incomplete gamma Q(shape, x) = Gamma(shape, x) / Gamma(shape).
double reg_gamma_upper(double shape, double x);

/// Regularized lower incomplete gamma P(shape, x) = 1 - Q(shape, x), computed
/// directly so that small values keep full relative precision.
double reg_gamma_lower(double shape, double x);

/// Standard normal density and its logarithm.
double normal_pdf(double z);
double normal_logpdf(double z);

/// Standard normal CDF Phi(z).
double normal_cdf(double z);

/// Upper tail 1 - Phi(z), accurate for large z.
double normal_sf(double z);

/// log Phi(z), finite for very negative z.
double normal_logcdf(double z);

/// Inverse of Phi on (0, 1) (Wichura's AS241, PPND16).
double normal_quantile(double p);

}  // namespace robreg::special
