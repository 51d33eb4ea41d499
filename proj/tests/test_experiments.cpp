#include <doctest.h>

#include <json.hpp>

#include "robreg/conjugate.hpp"
#include "robreg/errors.hpp"
#include "robreg/experiments.hpp"

using namespace robreg;
using nlohmann::json;

namespace {

json small_sampler() { return json{{"chains", 2}, {"warmup", 400}, {"samples", 600}}; }

}  // namespace

TEST_CASE("omega grids") {
    CHECK(omega_grid_from_json(json::array({1.0, 10.0})) == std::vector<double>{1.0, 10.0});
    const auto g = omega_grid_from_json(json{{"log10_min", 0.0}, {"log10_max", 2.0}, {"points", 3}, {"include_zero", true}});
    REQUIRE(g.size() == 4);
    CHECK(g[0] == 0.0);
    CHECK(g[2] == doctest::Approx(10.0));
    CHECK(g[3] == doctest::Approx(100.0));
    CHECK(omega_grid_from_json(json::object()).size() == 17);
    CHECK_THROWS_AS(omega_grid_from_json(json::array({-1.0})), ConfigError);
}

TEST_CASE("sweep config defaults and paths") {
    const auto c = sweep_config_from_json(json{{"outliers", {17, 18, 19}}});
    CHECK(c.data.n() == 20);
    CHECK(c.models.size() == 3);
    CHECK(c.seed == kDefaultSeed);
    const auto path = sweep_path(c);
    const auto y = apply_outlier_path(path, 5.0);
    CHECK(y[17] == y[19]);
    CHECK(y[18] == y[19]);
    CHECK(y[0] == c.data.y[0]);
    CHECK_THROWS_AS(sweep_config_from_json(json{{"outliers", {25}}}), ConfigError);
}

TEST_CASE("small sweep") {
    const json cfg{{"seed", 7},
                   {"dataset", {{"n", 12}}},
                   {"models", {{{"family", "normal"}}, {{"family", "student_t"}, {"nu", 4.0}}}},
                   {"omega", {0.0, 100.0}},
                   {"sampler", small_sampler()}};
    const auto rows = sweep_run(cfg);
    CHECK(rows == sweep_run(cfg));
    // normal: 2 exact rows; student_t: 2 posterior rows and 2 limiting rows.
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) {
        if (r.model_label == "normal") {
            CHECK(r.mcse == 0.0);
            CHECK(r.n_samples == 0);
        } else {
            CHECK(r.n_samples == 1200);
            CHECK(r.mcse > 0.0);
        }
    }
    const auto c = sweep_config_from_json(cfg);
    Dataset d = c.data;
    d.y = apply_outlier_path(sweep_path(c), 100.0);
    CHECK(rows[1].value == normal_conjugate_posterior(d, 2.0, 2.0).beta_hat[1]);
    // Rows sort as normal/posterior, t/limiting, t/posterior.
    CHECK(rows[2].estimator == "limiting_mean_beta2");
    CHECK(rows[2].value == rows[3].value);
    CHECK(rows[5].estimator == "posterior_mean_beta2");
    CHECK(rows[5].omega == 100.0);
    CHECK(std::abs(rows[5].value - rows[3].value) < 0.2);
}

TEST_CASE("limiting lptn fit equals the plain fit on the non-outliers") {
    const auto data = simulate_dataset(15, 3);
    const SamplerSettings s = sampler_settings_from_json(small_sampler());
    LinearModelSpec with{lptn_build(0.95), ConjugatePrior{}, data, {13, 14}};
    LinearModelSpec reduced{lptn_build(0.95), ConjugatePrior{}, data.without({13, 14}), {}};
    const auto a = fit_linear(with, s, 99, true);
    const auto b = fit_linear(reduced, s, 99, false);
    for (std::size_t j = 0; j < 2; ++j) CHECK(a.beta[j].mean == b.beta[j].mean);
    CHECK(a.sigma2.mean == b.sigma2.mean);
}

TEST_CASE("heavy-tailed fit matches exact normal moments when the data are clean") {
    const auto data = simulate_dataset(20, 11);
    SamplerSettings s = sampler_settings_from_json(small_sampler());
    s.samples = 2000;
    const auto fit = fit_linear(LinearModelSpec{normal_error(), ConjugatePrior{}, data, {}}, s, 5);
    const auto exact = normal_conjugate_posterior(data, 2.0, 2.0);
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(fit.beta[j].mean - exact.beta_hat[j]) < 4.0 * fit.beta[j].mcse);
    CHECK(fit.divergences == 0);
}

TEST_CASE("breakdown report") {
    const auto r = breakdown_report(json{{"models", {{{"family", "student_t"}, {"nu", 10.0}}}}});
    const auto& v = r.at("verdicts");
    REQUIRE(v.size() == 3);
    CHECK(v[0].at("refined_margin").get<double>() == 6.5);
    CHECK(v[1].at("refined_margin").get<double>() == 1.0);
    CHECK(v[2].at("refined_margin").get<double>() == -4.5);
    CHECK(v[0].at("assumption3_holds").get<bool>());
    CHECK_FALSE(v[1].at("assumption3_holds").get<bool>());
}

TEST_CASE("glm sweep") {
    const json cfg{{"n", 12}, {"omega", {10.0, 1000.0}}, {"sampler", small_sampler()}, {"theorem_ratio", false}};
    const auto rows = glm_sweep_run(cfg);
    CHECK(rows == glm_sweep_run(cfg));
    CHECK(rows.size() == 4);
    CHECK(rows[0].model_label.find(',') != std::string::npos);
}
