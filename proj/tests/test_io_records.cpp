#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "generators.hpp"
#include "robreg/errors.hpp"
#include "robreg/io.hpp"
#include "robreg/records.hpp"

using namespace robreg;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::current_path() / "io_scratch";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<SweepRecord> sample_records(testing::Gen& g, int n) {
    const char* labels[] = {"normal", "student_t(nu=4)", "robust_gamma(nu=4,c=1.6)", "say \"hi\""};
    std::vector<SweepRecord> out;
    for (int k = 0; k < n; ++k)
        out.push_back({g.log_uniform(1e-3, 1e6), labels[g.integer(0, 3)], k % 2 ? "posterior_mean_beta2" : "theorem_ratio",
                       g.normal() * std::pow(10.0, g.integer(-12, 12)), g.log_uniform(1e-9, 1.0),
                       static_cast<std::size_t>(g.integer(0, 40000)), static_cast<std::uint64_t>(g.integer(0, 1 << 30)), 0});
    return out;
}

}  // namespace

TEST_CASE("dataset csv round trip") {
    testing::Gen g(4);
    for (int k = 0; k < 20; ++k) {
        const int n = g.integer(1, 30), p = g.integer(1, 4);
        Dataset d{Eigen::MatrixXd(n, p), g.vector(n, g.log_uniform(1e-5, 1e5))};
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) d.x(i, j) = g.normal() / 3.0;
        const auto back = dataset_from_csv(dataset_to_csv(d));
        CHECK(back.x == d.x);
        CHECK(back.y == d.y);
    }
    const auto d = simulate_dataset(5, 1);
    write_dataset_csv(d, scratch("d.csv"));
    CHECK(read_dataset_csv(scratch("d.csv")).y == d.y);
    CHECK(dataset_to_csv(d).rfind("x_1,x_2,y\n", 0) == 0);
    CHECK_THROWS_AS(dataset_from_csv("a,b\n1,2\n"), ConfigError);
    CHECK_THROWS_AS(dataset_from_csv("x_1,y\n1\n"), ConfigError);
    CHECK_THROWS(read_dataset_csv(scratch("missing.csv")));
}

TEST_CASE("model json round trip") {
    for (const auto& e : {normal_error(), student_t_error(4.0), lptn_build(0.9)}) CHECK(error_density_from_json(to_json(e)).label() == e.label());
    const PriorSpec ind = IndependentPrior{{CoefficientPrior{CoefficientFamily::Normal, 1.0, 3.0}}, InvGammaVariance{2.0, 5.0}};
    CHECK(to_json(prior_from_json(to_json(ind))) == to_json(ind));
    const PriorSpec con = ConjugatePrior{3.0, 4.0};
    CHECK(to_json(prior_from_json(to_json(con))) == to_json(con));
    const auto rg = robust_gamma_build(4.0, 1.5);
    const auto back = robust_gamma_from_json(to_json(rg));
    CHECK(back.nu == 4.0);
    CHECK(back.c == 1.5);
    CHECK(back.z_r == rg.z_r);

    const LinearModelSpec m{student_t_error(4.0), ind, simulate_dataset(4, 1), {3}};
    const auto m2 = linear_model_from_json(to_json(m), m.data);
    CHECK(to_json(m2) == to_json(m));

    CHECK_THROWS_AS(error_density_from_json(json{{"family", "cauchy"}}), ConfigError);
    CHECK_THROWS_AS(error_density_from_json(json{{"family", "student_t"}}), ConfigError);
    CHECK_THROWS_AS(prior_from_json(json{{"type", "flat"}}), ConfigError);
}

TEST_CASE("records csv round trip and ordering") {
    testing::Gen g(8);
    for (int k = 0; k < 20; ++k) {
        auto rows = sample_records(g, g.integer(1, 30));
        sort_records(rows);
        const auto back = parse_csv(records_to_csv(rows));
        REQUIRE(back.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(std::tie(rows[i - 1].model_label, rows[i - 1].estimator, rows[i - 1].omega) <=
                  std::tie(rows[i].model_label, rows[i].estimator, rows[i].omega));
    }
    const auto csv = records_to_csv({{1.0, "robust_gamma(nu=4,c=1.6)", "theorem_ratio", 0.5, 0.0, 0, 7, 0}});
    CHECK(csv == std::string(kCsvHeader) + "\n1,\"robust_gamma(nu=4,c=1.6)\",theorem_ratio,0.5,0,0,7\n");
}

TEST_CASE("records emission") {
    testing::Gen g(2);
    auto rows = sample_records(g, 12);
    sort_records(rows);
    emit_csv(rows, scratch("a.csv"));
    emit_csv(rows, scratch("b.csv"));
    CHECK(slurp(scratch("a.csv")) == slurp(scratch("b.csv")));
    CHECK(parse_csv(slurp(scratch("a.csv"))) == rows);

    const auto j = to_json(rows);
    CHECK(j.size() == rows.size());
    CHECK(j[0].at("model_label") == rows[0].model_label);
    emit_json(j, scratch("r.json"));
    CHECK(json::parse(slurp(scratch("r.json"))) == j);

    std::filesystem::remove(scratch("empty.csv"));
    CHECK_THROWS_AS(emit_csv({}, scratch("empty.csv")), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(scratch("empty.csv")));
    CHECK_THROWS_AS(parse_csv("omega,value\n1,2\n"), ConfigError);
}

TEST_CASE("number formatting round trips") {
    testing::Gen g(5);
    for (int k = 0; k < 1000; ++k) {
        const double v = g.normal() * std::pow(10.0, g.integer(-300, 300));
        CHECK(std::stod(format_real(v)) == v);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_double(0.1) == "0.1");
}
