#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "robreg/errors.hpp"
#include "robreg/io.hpp"

namespace robreg {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    while (first != last && *first == ' ') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw ConfigError("CSV line " + std::to_string(line) + ": not a number: '" +
                          std::string(field) + "'");
    return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

CoefficientFamily coefficient_family(const std::string& s) {
    if (s == "laplace") return CoefficientFamily::Laplace;
    if (s == "normal") return CoefficientFamily::Normal;
    throw ConfigError("unknown coefficient prior family '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const Dataset& d) {
    d.validate();
    std::string out;
    for (Eigen::Index j = 0; j < d.x.cols(); ++j) out += "x_" + std::to_string(j + 1) + ",";
    out += "y\n";
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        for (Eigen::Index j = 0; j < d.x.cols(); ++j) out += format_double(d.x(i, j)) + ",";
        out += format_double(d.y[i]) + "\n";
    }
    return out;
}

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    if (header.size() < 2 || header.back() != "y")
        throw ConfigError("dataset CSV header must be x_1,...,x_p,y");
    for (std::size_t j = 0; j + 1 < header.size(); ++j)
        if (header[j] != "x_" + std::to_string(j + 1))
            throw ConfigError("dataset CSV header column " + std::to_string(j + 1) + " must be x_" +
                              std::to_string(j + 1));
    const std::size_t p = header.size() - 1;

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != p + 1)
            throw ConfigError("CSV line " + std::to_string(line_no) + ": expected " +
                              std::to_string(p + 1) + " fields");
        std::vector<double> row;
        for (auto f : fields) row.push_back(parse_double(f, line_no));
        rows.push_back(std::move(row));
    }
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j)
            d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        d.y[static_cast<Eigen::Index>(i)] = rows[i][p];
    }
    d.validate();
    return d;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
    write_text_file(path, dataset_to_csv(d));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return dataset_from_csv(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ErrorDensity error_density_from_json(const json& j) {
    const auto family = required<std::string>(j, "family");
    if (family == "normal") return normal_error();
    if (family == "student_t") return student_t_error(required<double>(j, "nu"));
    if (family == "lptn") return lptn_build(required<double>(j, "rho"));
    throw ConfigError("unknown error family '" + family + "'");
}

json to_json(const ErrorDensity& d) {
    return std::visit(overloaded{
                          [](const NormalFamily&) { return json{{"family", "normal"}}; },
                          [](const StudentTFamily& t) {
                              return json{{"family", "student_t"}, {"nu", t.nu}};
                          },
                          [](const LptnFamily& l) { return json{{"family", "lptn"}, {"rho", l.rho}}; },
                      },
                      d.family);
}

RobustGammaDensity robust_gamma_from_json(const json& j) {
    const auto family = j.value("family", std::string("robust_gamma"));
    if (family != "robust_gamma") throw ConfigError("GLM error family must be 'robust_gamma'");
    return robust_gamma_build(required<double>(j, "nu"), j.value("c", kDefaultRobustGammaC));
}

json to_json(const RobustGammaDensity& d) {
    return json{{"family", "robust_gamma"}, {"nu", d.nu}, {"c", d.c}};
}

std::vector<CoefficientPrior> coefficient_priors_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("'coefficients' must be a non-empty array");
    std::vector<CoefficientPrior> out;
    for (const auto& c : j) {
        CoefficientPrior cp;
        cp.family = coefficient_family(c.value("family", std::string("laplace")));
        cp.location = c.value("location", 0.0);
        cp.scale = required<double>(c, "scale");
        if (!(cp.scale > 0.0)) throw ConfigError("coefficient prior scale must be positive");
        out.push_back(cp);
    }
    return out;
}

json to_json(const std::vector<CoefficientPrior>& c) {
    json arr = json::array();
    for (const auto& cp : c)
        arr.push_back({{"family", cp.family == CoefficientFamily::Laplace ? "laplace" : "normal"},
                       {"location", cp.location},
                       {"scale", cp.scale}});
    return arr;
}

PriorSpec prior_from_json(const json& j) {
    const auto type = required<std::string>(j, "type");
    if (type == "conjugate") {
        ConjugatePrior c{required<double>(j, "a"), required<double>(j, "b")};
        if (!(c.a > 0.0) || !(c.b > 0.0)) throw ConfigError("inverse-gamma a and b must be positive");
        return c;
    }
    if (type == "independent") {
        IndependentPrior ip;
        ip.coefficients = coefficient_priors_from_json(j.at("coefficients"));
        const json v = j.value("variance", json{{"type", "lognormal"}, {"m", 0.0}, {"s", 1.0}});
        const auto vt = required<std::string>(v, "type");
        if (vt == "lognormal") {
            LogNormalVariance ln{v.value("m", 0.0), required<double>(v, "s")};
            if (!(ln.s > 0.0)) throw ConfigError("lognormal s must be positive");
            ip.variance = ln;
        } else if (vt == "inv_gamma") {
            InvGammaVariance ig{required<double>(v, "a"), required<double>(v, "b")};
            if (!(ig.a > 0.0) || !(ig.b > 0.0)) throw ConfigError("inverse-gamma a and b must be positive");
            ip.variance = ig;
        } else {
            throw ConfigError("unknown variance prior type '" + vt + "'");
        }
        return ip;
    }
    throw ConfigError("unknown prior type '" + type + "'");
}

json to_json(const PriorSpec& p) {
    return std::visit(
        overloaded{
            [](const ConjugatePrior& c) { return json{{"type", "conjugate"}, {"a", c.a}, {"b", c.b}}; },
            [](const IndependentPrior& ip) {
                json v = std::visit(overloaded{
                                        [](const LogNormalVariance& l) {
                                            return json{{"type", "lognormal"}, {"m", l.m}, {"s", l.s}};
                                        },
                                        [](const InvGammaVariance& g) {
                                            return json{{"type", "inv_gamma"}, {"a", g.a}, {"b", g.b}};
                                        },
                                    },
                                    ip.variance);
                return json{{"type", "independent"},
                            {"coefficients", to_json(ip.coefficients)},
                            {"variance", v}};
            },
        },
        p);
}

namespace {

std::vector<std::size_t> outliers_from_json(const json& j) {
    return j.contains("outliers") ? j.at("outliers").get<std::vector<std::size_t>>()
                                  : std::vector<std::size_t>{};
}

Dataset data_from_json(const json& j, const Dataset& fallback) {
    if (j.contains("data")) return read_dataset_csv(j.at("data").get<std::string>());
    return fallback;
}

}  // namespace

LinearModelSpec linear_model_from_json(const json& j, const Dataset& data) {
    if (j.value("kind", std::string("linear")) != "linear") throw ConfigError("model kind must be 'linear'");
    LinearModelSpec m;
    m.error = error_density_from_json(j.at("error"));
    m.prior = j.contains("prior") ? prior_from_json(j.at("prior")) : PriorSpec{ConjugatePrior{}};
    m.data = data_from_json(j, data);
    m.outliers = outliers_from_json(j);
    return m;
}

json to_json(const LinearModelSpec& m) {
    return json{{"kind", "linear"},
                {"error", to_json(m.error)},
                {"prior", to_json(m.prior)},
                {"outliers", m.outliers}};
}

GlmModelSpec glm_model_from_json(const json& j, const Dataset& data) {
    if (j.value("kind", std::string("glm")) != "glm") throw ConfigError("model kind must be 'glm'");
    GlmModelSpec m;
    m.error = robust_gamma_from_json(j.at("error"));
    if (j.contains("prior")) m.prior = coefficient_priors_from_json(j.at("prior").at("coefficients"));
    m.data = data_from_json(j, data);
    m.outliers = outliers_from_json(j);
    return m;
}

json to_json(const GlmModelSpec& m) {
    return json{{"kind", "glm"},
                {"error", to_json(m.error)},
                {"prior", json{{"coefficients", to_json(m.prior)}}},
                {"outliers", m.outliers}};
}

}  // namespace robreg
