#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "robreg/errors.hpp"
#include "robreg/sampler.hpp"
#include "robreg/special_functions.hpp"

using namespace robreg;

namespace {

LogDensityFn gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd) {
    return [mean, sd](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
        const Eigen::ArrayXd z = (q - mean).array() / sd.array();
        grad = (-z / sd.array()).matrix();
        return -0.5 * z.square().sum();
    };
}

LeapfrogState start_at(const LogDensityFn& f, const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
    LeapfrogState s{q, p, 0.0, Eigen::VectorXd(q.size()), false};
    s.log_density = f(q, s.grad);
    return s;
}

double hamiltonian(const LeapfrogState& s, const Eigen::VectorXd& m) { return -s.log_density + kinetic_energy(s.p, m); }

HmcConfig small_config(std::uint64_t seed) {
    HmcConfig c;
    c.n_warmup = 500;
    c.n_samples = 1000;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("leapfrog is reversible") {
    const auto f = gaussian(Eigen::Vector2d(1.0, -2.0), Eigen::Vector2d(0.5, 3.0));
    const Eigen::VectorXd m = Eigen::Vector2d(1.0, 2.0);
    testing::Gen g(3);
    for (int k = 0; k < 20; ++k) {
        const auto s0 = start_at(f, g.vector(2), g.vector(2));
        auto s1 = leapfrog(f, s0, 0.1, 25, m);
        s1.p = -s1.p;
        const auto s2 = leapfrog(f, s1, 0.1, 25, m);
        CHECK((s2.q - s0.q).norm() < 1e-10);
        CHECK((s2.p + s0.p).norm() < 1e-10);
    }
}

TEST_CASE("leapfrog energy error is second order") {
    const auto f = gaussian(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 2.0));
    const Eigen::VectorXd m = Eigen::Vector2d::Ones();
    const auto s0 = start_at(f, Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(0.5, -0.7));
    const double t = 1.0;
    const auto err = [&](double eps) {
        const auto s = leapfrog(f, s0, eps, static_cast<int>(std::lround(t / eps)), m);
        return std::abs(hamiltonian(s, m) - hamiltonian(s0, m));
    };
    const double e1 = err(0.1), e2 = err(0.05);
    CHECK(e1 < 0.02);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("leapfrog stays at a fixed point") {
    const auto f = gaussian(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Ones());
    const auto s = leapfrog(f, start_at(f, Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero()), 0.3, 10, Eigen::Vector2d::Ones());
    CHECK(s.q == Eigen::Vector2d(1.0, 2.0));
    CHECK(s.p.norm() == 0.0);
    CHECK_FALSE(s.divergent);
}

TEST_CASE("leapfrog flags divergence") {
    const auto f = gaussian(Eigen::Vector2d::Zero(), Eigen::Vector2d::Constant(0.01));
    const auto s = leapfrog(f, start_at(f, Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d::Zero()), 1.0, 50, Eigen::Vector2d::Ones());
    CHECK(s.divergent);
}

TEST_CASE("hmc recovers gaussian moments") {
    const Eigen::Vector2d mean(3.0, -1.0), sd(0.5, 4.0);
    const auto chains = hmc_run_chains(gaussian(mean, sd), small_config(11), Eigen::Vector2d::Zero(), 4);
    const auto s = posterior_summary(chains);
    for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(s[j].mean - mean[j]) < 4.0 * s[j].mcse);
        CHECK(s[j].sd == doctest::Approx(sd[j]).epsilon(0.1));
    }
    for (const auto& c : chains) {
        CHECK(c.divergence_count == 0);
        CHECK(c.accept_rate > 0.6);
        CHECK(c.draws.rows() == 1000);
    }
}

TEST_CASE("hmc is deterministic and parallel matches sequential") {
    const auto f = gaussian(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.0, 0.2));
    const auto a = hmc_run_chains(f, small_config(5), Eigen::Vector2d::Zero(), 3, true);
    const auto b = hmc_run_chains(f, small_config(5), Eigen::Vector2d::Zero(), 3, false);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a[k].draws == b[k].draws);
        CHECK(a[k].seed == 5 + k);
    }
    CHECK(a[0].draws != a[1].draws);
}

TEST_CASE("different seeds give independent chains") {
    const auto f = gaussian(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
    const auto a = hmc_run(f, small_config(100), Eigen::VectorXd::Zero(1));
    const auto b = hmc_run(f, small_config(200), Eigen::VectorXd::Zero(1));
    const Eigen::ArrayXd x = a.draws.col(0).array() - a.draws.col(0).mean();
    const Eigen::ArrayXd y = b.draws.col(0).array() - b.draws.col(0).mean();
    const double corr = (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
    CHECK(std::abs(corr) < 0.15);
}

TEST_CASE("hmc draws pass a Kolmogorov-Smirnov check") {
    HmcConfig c = small_config(2024);
    c.n_samples = 5000;
    const auto chains = hmc_run_chains(gaussian(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)), c, Eigen::VectorXd::Zero(1), 4);
    std::vector<double> all;
    for (const auto& ch : chains) all.insert(all.end(), ch.draws.data(), ch.draws.data() + ch.draws.rows());
    std::sort(all.begin(), all.end());
    const double n = static_cast<double>(all.size());
    double d = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const double cdf = special::normal_cdf(all[i]);
        d = std::max({d, std::abs(cdf - i / n), std::abs((i + 1) / n - cdf)});
    }
    CHECK(all.size() == 20000);
    CHECK(d < 0.02);
}

TEST_CASE("ess") {
    testing::Gen g(9);
    const Eigen::VectorXd iid = g.vector(4000);
    CHECK(ess(iid) == doctest::Approx(4000.0).epsilon(0.15));
    CHECK(ess(Eigen::VectorXd::Constant(50, 2.5)) == 50.0);

    Eigen::VectorXd ar(20000);
    ar[0] = 0.0;
    for (Eigen::Index i = 1; i < ar.size(); ++i) ar[i] = 0.9 * ar[i - 1] + std::sqrt(1.0 - 0.81) * g.normal();
    // Integrated autocorrelation time (1 + 0.9) / (1 - 0.9) = 19.
    CHECK(ess(ar) == doctest::Approx(20000.0 / 19.0).epsilon(0.25));
    CHECK_THROWS_AS(ess(Eigen::VectorXd::Zero(5)), DomainError);
}

TEST_CASE("transform column and summary") {
    ChainSamples c;
    c.draws = Eigen::MatrixXd(20, 2);
    for (int i = 0; i < 20; ++i) c.draws.row(i) << i, std::log(i + 1.0);
    const auto t = transform_column(c, 1, [](double v) { return std::exp(v); });
    CHECK(t.draws.cols() == 1);
    CHECK(t.draws(4, 0) == doctest::Approx(5.0));
    const auto s = posterior_summary({t});
    CHECK(s[0].mean == doctest::Approx(10.5));
}

TEST_CASE("hmc rejects bad input") {
    const auto bad = [](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
        grad = Eigen::VectorXd::Zero(q.size());
        return -INFINITY;
    };
    CHECK_THROWS_AS(hmc_run(bad, small_config(1), Eigen::VectorXd::Zero(2)), NumericError);
    HmcConfig c = small_config(1);
    c.n_leapfrog = 0;
    CHECK_THROWS(c.validate(2));
    c = small_config(1);
    c.mass_diag = Eigen::Vector3d::Ones();
    CHECK_THROWS(c.validate(2));
}
