#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "robreg/model.hpp"

namespace robreg {

/// CSV with header `x_1,...,x_p,y`, one row per observation, LF line endings.
void write_dataset_csv(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text);

/// Shortest decimal form that round-trips (up to 17 significant digits).
std::string format_double(double v);

// JSON forms of the model ingredients.  Parsing throws ConfigError with the
// offending key in the message.
//
//   error:  {"family": "normal"} | {"family": "student_t", "nu": 4}
//           | {"family": "lptn", "rho": 0.95} | {"family": "robust_gamma", "nu": 4, "c": 1.6}
//   prior:  {"type": "conjugate", "a": 2, "b": 2}
//           | {"type": "independent",
//              "coefficients": [{"family": "laplace", "location": 0, "scale": 1}],
//              "variance": {"type": "lognormal", "m": 0, "s": 1}
//                        | {"type": "inv_gamma", "a": 2, "b": 2}}
//   model:  {"kind": "linear" | "glm", "error": ..., "prior": ..., "outliers": [i, ...],
//            "data": "<csv path>" (optional)}
ErrorDensity error_density_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ErrorDensity& d);

RobustGammaDensity robust_gamma_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RobustGammaDensity& d);

PriorSpec prior_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PriorSpec& p);

std::vector<CoefficientPrior> coefficient_priors_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<CoefficientPrior>& c);

/// Parses a linear model; `data` is used unless the JSON names a CSV file.
LinearModelSpec linear_model_from_json(const nlohmann::json& j, const Dataset& data = {});
nlohmann::json to_json(const LinearModelSpec& m);

GlmModelSpec glm_model_from_json(const nlohmann::json& j, const Dataset& data = {});
nlohmann::json to_json(const GlmModelSpec& m);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace robreg
