#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "robreg/model.hpp"

namespace robreg {

enum class MarginalMode { Full, Limiting };

struct QuadratureSettings {
    double rel_tol = 1e-7;
    double inner_rel_tol = 1e-9;
    double gamma_lo = -14.0;
    double gamma_hi = 14.0;
    int gamma_pieces = 28;
    int beta_pieces = 8;
    double window_sd = 12.0;
    /// Multiplies every piece count; depth 2 is the refinement used for self-consistency checks.
    int depth = 1;
};

struct MarginalResult {
    double log_value = 0.0;
    double rel_error = 0.0;  // estimated, relative to the integral
    bool converged = false;
};

/// log m_omega(y) (Full) or log m(y_{O^c}) (Limiting) by nested adaptive
/// Gauss-Kronrod over beta (p <= 2) and gamma = log sigma^2.  The beta window
/// follows the conjugate fit on the non-outliers, scaled by sigma.
/// Throws DomainError for p > 2.
MarginalResult marginal_quadrature(const LinearModelSpec& m, MarginalMode mode,
                                   const QuadratureSettings& s = {});

struct TheoremRatio {
    double ratio = 0.0;
    double log_ratio = 0.0;
    double log_full = 0.0;
    double log_limiting = 0.0;
    double log_outlier_density = 0.0;  // sum over O of log f(y_i)
    bool converged = false;
};

/// m_omega(y) / [m(y_{O^c}) prod_{i in O} f(y_i)] at the data given by the path.
/// The outlier set is taken from the path; throws ConfigError when the
/// configuration violates the breakdown condition.
TheoremRatio theorem_ratio(const LinearModelSpec& m, const LinearOutlierPath& path, double omega,
                           const QuadratureSettings& s = {});

/// Importance-sampling estimate of log m_omega(y) with the conjugate posterior
/// of the Normal fit on the non-outliers as proposal.
struct ImportanceEstimate {
    double log_value = 0.0;
    double rel_se = 0.0;  // standard error of the estimate relative to its value
    double ess = 0.0;
};
ImportanceEstimate importance_marginal(const LinearModelSpec& m, std::size_t n_draws,
                                       std::uint64_t seed);

/// GLM analogues; the beta window comes from a Newton fit of the non-outlier posterior.
MarginalResult glm_marginal_quadrature(const GlmModelSpec& m, MarginalMode mode,
                                       const QuadratureSettings& s = {});
TheoremRatio glm_theorem_ratio(const GlmModelSpec& m, const GlmOutlierPath& path, double omega,
                               const QuadratureSettings& s = {});

/// Mode of the GLM posterior (all data or the non-outliers) and the inverse
/// expected information nu X^T X + diag(1 / scale^2) used as its spread.
struct GlmLaplaceFit {
    Eigen::VectorXd mode;
    Eigen::MatrixXd covariance;
};
GlmLaplaceFit glm_laplace_fit(const GlmModelSpec& m, MarginalMode mode);

struct SequencePoint {
    double omega = 0.0;
    double log_value = 0.0;
};

/// (1/omega^n) prod_{i in O} f(2 b_i omega)^{-1} on the grid, with f replaced by
/// its tail form C_f |y|^{-(alpha+1)} or C_f |y|^{-1} (log |y|)^{-(alpha+1)}.
/// |O| = b.size().
std::vector<SequencePoint> lemma_b2_sequence(const TailClass& tail, std::size_t n,
                                             const std::vector<double>& b,
                                             const std::vector<double>& omega_grid);
/// Same sequence using the exact density.
std::vector<SequencePoint> lemma_b2_sequence(const ErrorDensity& f, std::size_t n,
                                             const std::vector<double>& b,
                                             const std::vector<double>& omega_grid);

struct TailBoundPoint {
    double t = 0.0;
    double survival = 0.0;
    double bound = 0.0;
};

struct TailBoundVerdict {
    bool holds = true;
    std::vector<TailBoundPoint> points;
};

/// P(Z >= t) <= (1/sqrt(2 pi)) (sigma0/t) exp(-t^2/(2 sigma0^2)) for Z ~ N(0, sigma0^2).
TailBoundVerdict gaussian_tail_bound_check(double sigma0, const std::vector<double>& t_grid);

}  // namespace robreg
