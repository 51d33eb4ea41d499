#include <doctest.h>

#include <cmath>

#include "robreg/conjugate.hpp"
#include "robreg/errors.hpp"
#include "robreg/marginal.hpp"

using namespace robreg;

namespace {

Dataset small_data() {
    Eigen::VectorXd y(6);
    y << 0.3, -0.5, 1.2, 0.8, -0.1, 1.0;
    return Dataset{Eigen::MatrixXd::Ones(6, 1), y};
}

}  // namespace

TEST_CASE("normal marginal matches the closed form") {
    for (const auto& d : {small_data(), simulate_dataset(8, 4)}) {
        LinearModelSpec m{normal_error(), ConjugatePrior{2.0, 2.0}, d, {}};
        const auto q = marginal_quadrature(m, MarginalMode::Full);
        CHECK(q.converged);
        CHECK(std::abs(std::expm1(q.log_value - normal_conjugate_posterior(d, 2.0, 2.0).log_marginal())) < 1e-5);
    }
}

TEST_CASE("full equals limiting without outliers") {
    LinearModelSpec m{student_t_error(4.0), ConjugatePrior{2.0, 2.0}, small_data(), {}};
    CHECK(marginal_quadrature(m, MarginalMode::Full).log_value == marginal_quadrature(m, MarginalMode::Limiting).log_value);
    const auto path = linear_path_from_observations(small_data().y, {}, 1.0);
    const auto r = theorem_ratio(m, path, 1e3);
    CHECK(r.ratio == 1.0);
    CHECK(r.log_outlier_density == 0.0);
}

TEST_CASE("quadrature is stable under refinement") {
    LinearModelSpec m{student_t_error(4.0), ConjugatePrior{2.0, 2.0}, small_data(), {5}};
    m.data.y[5] = 1e3;
    QuadratureSettings fine;
    fine.depth = 2;
    for (auto mode : {MarginalMode::Full, MarginalMode::Limiting}) {
        const auto a = marginal_quadrature(m, mode);
        const auto b = marginal_quadrature(m, mode, fine);
        CHECK(std::abs(std::expm1(a.log_value - b.log_value)) < 1e-6);
    }
}

TEST_CASE("marginal is invariant to observation order") {
    Dataset d = simulate_dataset(8, 2);
    d.x = d.x.leftCols(1).eval();
    LinearModelSpec m{student_t_error(4.0), ConjugatePrior{2.0, 2.0}, d, {7}};
    m.data.y[7] = 200.0;
    LinearModelSpec r = m;
    r.data.x = m.data.x.colwise().reverse();
    r.data.y = m.data.y.reverse();
    r.outliers = {0};
    const double a = marginal_quadrature(m, MarginalMode::Full).log_value;
    const double b = marginal_quadrature(r, MarginalMode::Full).log_value;
    CHECK(std::abs(a - b) < 1e-7);
    CHECK(std::abs(marginal_quadrature(m, MarginalMode::Limiting).log_value - marginal_quadrature(r, MarginalMode::Limiting).log_value) < 1e-7);
}

TEST_CASE("importance sampling agrees with quadrature") {
    LinearModelSpec m{student_t_error(4.0), ConjugatePrior{2.0, 2.0}, small_data(), {}};
    const auto q = marginal_quadrature(m, MarginalMode::Full);
    const auto is = importance_marginal(m, 200000, 17);
    CHECK(std::abs(std::expm1(is.log_value - q.log_value)) < 3.0 * is.rel_se + 1e-6);
    CHECK(is.ess > 1000.0);
}

TEST_CASE("theorem ratio approaches one for a Student-t outlier") {
    LinearModelSpec m{student_t_error(4.0), ConjugatePrior{2.0, 2.0}, small_data(), {}};
    const auto path = linear_path_from_observations(small_data().y, {5}, 1.0);
    const auto r3 = theorem_ratio(m, path, 1e3);
    const auto r6 = theorem_ratio(m, path, 1e6);
    CHECK(r6.converged);
    CHECK(std::abs(r6.ratio - 1.0) < 0.05);
    CHECK(std::abs(r6.ratio - 1.0) < std::abs(r3.ratio - 1.0));

    LinearModelSpec normal{normal_error(), ConjugatePrior{2.0, 2.0}, small_data(), {}};
    CHECK_THROWS_AS(theorem_ratio(normal, path, 1e3), TailClassError);
}

TEST_CASE("outlier sequence rates") {
    const std::vector<double> grid{1e4, 1e6, 1e8};
    const auto t = student_t_error(4.0);
    // Tail form gives exactly omega^{|O|(alpha+1) - n} up to constants.
    const auto seq = lemma_b2_sequence(t.tail, 20, {1.0}, grid);
    const double slope = (seq[2].log_value - seq[1].log_value) / std::log(1e2);
    CHECK(slope == doctest::Approx(5.0 - 20.0).epsilon(1e-12));
    const auto exact = lemma_b2_sequence(t, 20, {1.0}, grid);
    CHECK(std::abs(exact[2].log_value - seq[2].log_value) < 1e-6);

    const auto many = lemma_b2_sequence(t.tail, 8, {1.0, 1.0}, grid);
    CHECK(many[2].log_value > many[0].log_value);

    const auto lp = lptn_build(0.95);
    const auto ls = lemma_b2_sequence(lp.tail, 3, {1.0, 2.0}, grid);
    CHECK(ls[2].log_value < ls[1].log_value);
    CHECK(ls[1].log_value < ls[0].log_value);
    const auto lexact = lemma_b2_sequence(lp, 3, {1.0, 2.0}, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(lexact[k].log_value - ls[k].log_value) < 1e-9);
}

TEST_CASE("gaussian tail bound") {
    std::vector<double> grid;
    for (double t = 0.1; t <= 30.0; t *= 1.3) grid.push_back(t);
    for (double s0 : {0.1, 1.0, 5.0}) {
        const auto v = gaussian_tail_bound_check(s0, grid);
        CHECK(v.holds);
        CHECK(v.points.size() == grid.size());
        for (const auto& p : v.points) CHECK(p.survival <= p.bound);
    }
}

TEST_CASE("glm marginal and ratio") {
    const auto rg = robust_gamma_build(4.0);
    const auto one = simulate_glm_dataset(8, Eigen::Vector2d(0.5, 0.1), 4.0, 7);
    GlmModelSpec m{rg, {CoefficientPrior{CoefficientFamily::Normal, 0.0, 10.0}}, one, {}};
    const auto full = glm_marginal_quadrature(m, MarginalMode::Full);
    CHECK(full.converged);
    CHECK(full.log_value == glm_marginal_quadrature(m, MarginalMode::Limiting).log_value);
    const auto fit = glm_laplace_fit(m, MarginalMode::Full);
    const double top = glm_log_posterior(m, fit.mode);
    for (const Eigen::Vector2d step : {Eigen::Vector2d(1e-3, 0.0), Eigen::Vector2d(0.0, 1e-3), Eigen::Vector2d(-1e-3, 1e-3)}) {
        CHECK(glm_log_posterior(m, fit.mode + step) <= top);
        CHECK(glm_log_posterior(m, fit.mode - step) <= top);
    }

    std::vector<OutlierDirection> dirs(8, OutlierDirection::Large);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(8);
    b[7] = 1.0;
    const GlmOutlierPath path{one.y, b, dirs};
    double prev = INFINITY;
    for (double w : {1e3, 1e6, 1e9}) {
        const auto r = glm_theorem_ratio(m, path, w);
        CHECK(std::isfinite(r.ratio));
        CHECK(std::abs(r.log_ratio) < prev);
        prev = std::abs(r.log_ratio);
    }
}

TEST_CASE("quadrature refuses p > 2") {
    Dataset d{Eigen::MatrixXd::Ones(4, 3), Eigen::VectorXd::Ones(4)};
    LinearModelSpec m{student_t_error(4.0), ConjugatePrior{}, d, {}};
    CHECK_THROWS_AS(marginal_quadrature(m, MarginalMode::Full), DomainError);
}
