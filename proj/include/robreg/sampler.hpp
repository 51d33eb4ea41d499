#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace robreg {

/// Returns log pi(q) up to a constant and writes d log pi / dq into `grad`.
/// Must be safe to call concurrently from several chains.
using LogDensityFn = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

struct HmcConfig {
    double step_size = 0.1;        // initial value; adapted during warmup when adapt_step is set
    int n_leapfrog = 32;
    double leapfrog_jitter = 0.2;  // L drawn uniformly from n_leapfrog * [1 - j, 1 + j]
    Eigen::VectorXd mass_diag;     // empty means identity
    bool adapt_step = true;
    bool adapt_mass = true;        // diagonal estimate from the second quarter of warmup
    std::size_t n_warmup = 2000;
    std::size_t n_samples = 5000;
    std::uint64_t seed = 20250101;
    double target_accept = 0.8;

    void validate(std::size_t dim) const;
};

struct ChainSamples {
    Eigen::MatrixXd draws;  // n_samples x d
    double accept_rate = 0.0;
    std::size_t divergence_count = 0;
    std::uint64_t seed = 0;
    double step_size = 0.0;        // value used after warmup
    Eigen::VectorXd mass_diag;     // value used after warmup
};

struct LeapfrogState {
    Eigen::VectorXd q;
    Eigen::VectorXd p;
    double log_density = 0.0;
    Eigen::VectorXd grad;
    bool divergent = false;
};

/// Hamiltonian error above this marks a divergent trajectory.
inline constexpr double kDivergenceThreshold = 1000.0;

/// Kinetic energy sum_i p_i^2 / (2 m_i).
double kinetic_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& mass_diag);

/// n_steps of the leapfrog integrator from (q, p).  `start` must hold the log
/// density and gradient at q.  Stops early and flags divergence when the
/// Hamiltonian drifts more than kDivergenceThreshold or becomes non-finite.
LeapfrogState leapfrog(const LogDensityFn& target, const LeapfrogState& start, double step_size,
                       int n_steps, const Eigen::VectorXd& mass_diag);

/// Single chain.  Throws NumericError if the target is not finite at `init`.
ChainSamples hmc_run(const LogDensityFn& target, const HmcConfig& cfg, const Eigen::VectorXd& init);

/// Chain k runs with seed cfg.seed + k.  With `parallel` the chains run on
/// separate threads; results are identical to a sequential run.
std::vector<ChainSamples> hmc_run_chains(const LogDensityFn& target, const HmcConfig& cfg,
                                         const Eigen::VectorXd& init, std::size_t n_chains,
                                         bool parallel = true);

/// Effective sample size by Geyer's initial monotone positive sequence.
/// A constant column returns its length.  Needs at least 10 draws.
double ess(const Eigen::VectorXd& draws);

struct CoordinateSummary {
    double mean = 0.0;
    double sd = 0.0;
    double mcse = 0.0;
    double ess = 0.0;
};

/// Pooled mean and sd over all chains, ess summed over chains, mcse = sd / sqrt(ess).
std::vector<CoordinateSummary> posterior_summary(const std::vector<ChainSamples>& chains);

/// Column of a transformed coordinate, e.g. sigma^2 = exp(gamma), pooled over chains.
ChainSamples transform_column(const ChainSamples& chain, Eigen::Index col,
                              const std::function<double(double)>& fn);

}  // namespace robreg
