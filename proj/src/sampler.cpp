#include "robreg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "robreg/errors.hpp"

namespace robreg {

namespace {

struct DualAveraging {
    double mu = 0.0;
    double h_bar = 0.0;
    double log_eps = 0.0;
    double log_eps_bar = 0.0;
    double target = 0.8;
    std::size_t m = 0;

    static constexpr double kGamma = 0.05;
    static constexpr double kT0 = 10.0;
    static constexpr double kKappa = 0.75;

    void restart(double eps) {
        mu = std::log(10.0 * eps);
        h_bar = 0.0;
        log_eps = std::log(eps);
        log_eps_bar = 0.0;
        m = 0;
    }

    double update(double accept_stat) {
        ++m;
        const double md = static_cast<double>(m);
        const double w = 1.0 / (md + kT0);
        h_bar = (1.0 - w) * h_bar + w * (target - accept_stat);
        log_eps = mu - std::sqrt(md) / kGamma * h_bar;
        const double eta = std::pow(md, -kKappa);
        log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
        return std::exp(log_eps);
    }

    double final_step() const { return std::exp(log_eps_bar); }
};

LeapfrogState evaluate(const LogDensityFn& target, const Eigen::VectorXd& q) {
    LeapfrogState s;
    s.q = q;
    s.grad = Eigen::VectorXd::Zero(q.size());
    s.log_density = target(q, s.grad);
    return s;
}

bool finite_state(const LeapfrogState& s) {
    return std::isfinite(s.log_density) && s.grad.allFinite();
}

Eigen::VectorXd draw_momentum(std::mt19937_64& rng, const Eigen::VectorXd& mass) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd p(mass.size());
    for (Eigen::Index i = 0; i < mass.size(); ++i) p[i] = normal(rng) * std::sqrt(mass[i]);
    return p;
}

int jittered_steps(std::mt19937_64& rng, const HmcConfig& cfg) {
    if (cfg.leapfrog_jitter <= 0.0) return cfg.n_leapfrog;
    std::uniform_real_distribution<double> u(1.0 - cfg.leapfrog_jitter, 1.0 + cfg.leapfrog_jitter);
    return std::max(1, static_cast<int>(std::lround(cfg.n_leapfrog * u(rng))));
}

struct Transition {
    double accept_stat = 0.0;
    bool accepted = false;
    bool divergent = false;
};

Transition transition(const LogDensityFn& target, LeapfrogState& current, double eps, int n_steps,
                      const Eigen::VectorXd& mass, std::mt19937_64& rng) {
    LeapfrogState start = current;
    start.p = draw_momentum(rng, mass);
    const double h0 = -start.log_density + kinetic_energy(start.p, mass);
    const LeapfrogState end = leapfrog(target, start, eps, n_steps, mass);
    Transition t;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    if (end.divergent) {
        t.divergent = true;
        return t;
    }
    const double h1 = -end.log_density + kinetic_energy(end.p, mass);
    const double log_ratio = h0 - h1;
    t.accept_stat = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    if (u < t.accept_stat) {
        current = end;
        t.accepted = true;
    }
    return t;
}

double initial_step_size(const LogDensityFn& target, const LeapfrogState& current, double eps,
                         const Eigen::VectorXd& mass, std::mt19937_64& rng) {
    auto log_accept = [&](double e) {
        LeapfrogState start = current;
        start.p = draw_momentum(rng, mass);
        const double h0 = -start.log_density + kinetic_energy(start.p, mass);
        const LeapfrogState end = leapfrog(target, start, e, 1, mass);
        if (end.divergent) return -std::numeric_limits<double>::infinity();
        return h0 - (-end.log_density + kinetic_energy(end.p, mass));
    };
    const double log_half = std::log(0.5);
    const int direction = log_accept(eps) > log_half ? 1 : -1;
    for (int i = 0; i < 60; ++i) {
        const double next = direction > 0 ? eps * 2.0 : eps * 0.5;
        const double la = log_accept(next);
        if (direction > 0 ? !(la > log_half) : la > log_half) return direction > 0 ? eps : next;
        eps = next;
    }
    return eps;
}

Eigen::VectorXd regularized_variance(const std::vector<Eigen::VectorXd>& draws) {
    const auto n = static_cast<double>(draws.size());
    const auto d = draws.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& q : draws) mean += q;
    mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (const auto& q : draws) var += (q - mean).cwiseAbs2();
    var /= (n - 1.0);
    return (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
}

}  // namespace

void HmcConfig::validate(std::size_t dim) const {
    if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
    if (n_leapfrog < 1) throw ConfigError("n_leapfrog must be at least 1");
    if (leapfrog_jitter < 0.0 || leapfrog_jitter >= 1.0) throw ConfigError("leapfrog_jitter must lie in [0, 1)");
    if (n_samples < 1) throw ConfigError("n_samples must be at least 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("target_accept must lie in (0, 1)");
    if (mass_diag.size() != 0) {
        if (static_cast<std::size_t>(mass_diag.size()) != dim)
            throw ConfigError("mass_diag length does not match the target dimension");
        if (!(mass_diag.array() > 0.0).all()) throw ConfigError("mass_diag entries must be positive");
    }
}

double kinetic_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& mass_diag) {
    return 0.5 * (p.array().square() / mass_diag.array()).sum();
}

LeapfrogState leapfrog(const LogDensityFn& target, const LeapfrogState& start, double step_size,
                       int n_steps, const Eigen::VectorXd& mass_diag) {
    const double h0 = -start.log_density + kinetic_energy(start.p, mass_diag);
    LeapfrogState s = start;
    s.divergent = false;
    const Eigen::ArrayXd inv_mass = mass_diag.array().inverse();
    for (int i = 0; i < n_steps; ++i) {
        s.p += 0.5 * step_size * s.grad;
        s.q += step_size * (inv_mass * s.p.array()).matrix();
        s.log_density = target(s.q, s.grad);
        if (!finite_state(s)) {
            s.divergent = true;
            return s;
        }
        s.p += 0.5 * step_size * s.grad;
        const double h = -s.log_density + kinetic_energy(s.p, mass_diag);
        if (!std::isfinite(h) || h - h0 > kDivergenceThreshold) {
            s.divergent = true;
            return s;
        }
    }
    return s;
}

ChainSamples hmc_run(const LogDensityFn& target, const HmcConfig& cfg, const Eigen::VectorXd& init) {
    const auto dim = static_cast<std::size_t>(init.size());
    cfg.validate(dim);
    LeapfrogState current = evaluate(target, init);
    if (!finite_state(current)) throw NumericError("target log density is not finite at the initial point");

    std::mt19937_64 rng(cfg.seed);
    Eigen::VectorXd mass = cfg.mass_diag.size() ? cfg.mass_diag : Eigen::VectorXd::Ones(init.size());
    double eps = cfg.step_size;

    const std::size_t w = cfg.n_warmup;
    const bool adapt_mass = cfg.adapt_mass && w >= 100;
    const std::size_t mass_begin = w / 4;
    const std::size_t mass_end = w / 2;
    DualAveraging da;
    da.target = cfg.target_accept;
    if (cfg.adapt_step && w > 0) {
        eps = initial_step_size(target, current, eps, mass, rng);
        da.restart(eps);
    }
    std::vector<Eigen::VectorXd> window;
    for (std::size_t it = 0; it < w; ++it) {
        const Transition t = transition(target, current, eps, jittered_steps(rng, cfg), mass, rng);
        if (cfg.adapt_step) eps = da.update(t.accept_stat);
        if (adapt_mass && it >= mass_begin && it < mass_end) window.push_back(current.q);
        if (adapt_mass && it + 1 == mass_end) {
            mass = regularized_variance(window).cwiseInverse();
            window.clear();
            if (cfg.adapt_step) {
                eps = initial_step_size(target, current, std::exp(da.log_eps_bar), mass, rng);
                da.restart(eps);
            }
        }
    }
    if (cfg.adapt_step && w > 0) eps = da.final_step();

    ChainSamples out;
    out.seed = cfg.seed;
    out.step_size = eps;
    out.mass_diag = mass;
    out.draws.resize(static_cast<Eigen::Index>(cfg.n_samples), init.size());
    std::size_t accepted = 0;
    for (std::size_t it = 0; it < cfg.n_samples; ++it) {
        const Transition t = transition(target, current, eps, jittered_steps(rng, cfg), mass, rng);
        accepted += t.accepted ? 1 : 0;
        out.divergence_count += t.divergent ? 1 : 0;
        out.draws.row(static_cast<Eigen::Index>(it)) = current.q.transpose();
    }
    out.accept_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_samples);
    return out;
}

std::vector<ChainSamples> hmc_run_chains(const LogDensityFn& target, const HmcConfig& cfg,
                                         const Eigen::VectorXd& init, std::size_t n_chains, bool parallel) {
    std::vector<ChainSamples> chains(n_chains);
    auto run = [&](std::size_t k) {
        HmcConfig c = cfg;
        c.seed = cfg.seed + k;
        chains[k] = hmc_run(target, c, init);
    };
    if (!parallel || n_chains < 2) {
        for (std::size_t k = 0; k < n_chains; ++k) run(k);
        return chains;
    }
    std::vector<std::exception_ptr> errors(n_chains);
    std::vector<std::thread> threads;
    threads.reserve(n_chains);
    for (std::size_t k = 0; k < n_chains; ++k)
        threads.emplace_back([&, k] {
            try {
                run(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return chains;
}

double ess(const Eigen::VectorXd& draws) {
    const auto n = draws.size();
    if (n < 10) throw DomainError("ess needs at least 10 draws");
    const double mean = draws.mean();
    const Eigen::ArrayXd c = draws.array() - mean;
    const double c0 = c.square().sum() / static_cast<double>(n);
    if (!(c0 > 0.0)) return static_cast<double>(n);

    auto rho = [&](Eigen::Index lag) {
        return (c.head(n - lag) * c.tail(n - lag)).sum() / static_cast<double>(n) / c0;
    };
    // Sum of autocorrelation pairs Gamma_k = rho_{2k} + rho_{2k+1}, truncated at the
    // first non-positive pair and forced monotone.
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
        double pair = rho(2 * k) + rho(2 * k + 1);
        if (!(pair > 0.0)) break;
        pair = std::min(pair, prev);
        prev = pair;
        sum += pair;
    }
    const double tau = std::max(2.0 * sum - 1.0, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

std::vector<CoordinateSummary> posterior_summary(const std::vector<ChainSamples>& chains) {
    if (chains.empty()) throw DomainError("posterior_summary needs at least one chain");
    const auto d = chains.front().draws.cols();
    std::vector<CoordinateSummary> out(static_cast<std::size_t>(d));
    Eigen::Index total = 0;
    for (const auto& ch : chains) total += ch.draws.rows();
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXd all(total);
        Eigen::Index off = 0;
        double ess_sum = 0.0;
        for (const auto& ch : chains) {
            all.segment(off, ch.draws.rows()) = ch.draws.col(j);
            off += ch.draws.rows();
            ess_sum += ess(ch.draws.col(j));
        }
        auto& s = out[static_cast<std::size_t>(j)];
        s.mean = all.mean();
        s.sd = total > 1 ? std::sqrt((all.array() - s.mean).square().sum() / static_cast<double>(total - 1)) : 0.0;
        s.ess = ess_sum;
        s.mcse = s.sd / std::sqrt(ess_sum);
    }
    return out;
}

ChainSamples transform_column(const ChainSamples& chain, Eigen::Index col,
                              const std::function<double(double)>& fn) {
    ChainSamples out = chain;
    out.draws.resize(chain.draws.rows(), 1);
    for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) out.draws(i, 0) = fn(chain.draws(i, col));
    return out;
}

}  // namespace robreg
