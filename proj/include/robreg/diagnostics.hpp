#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace robreg {

struct DiagnosticEntry {
    std::string name;
    bool passed = false;
    double achieved = 0.0;   // the measured deviation or statistic
    double tolerance = 0.0;  // pass threshold for `achieved`
    std::string detail;
};

/// Runs the density, limit and lemma property checks.  The config may set
/// "sigma_grid", "beta_grid", "lptn_rho", "student_nu", "robust_gamma": {"nu", "c"}.
std::vector<DiagnosticEntry> diagnostics_run(const nlohmann::json& config = nlohmann::json::object());

nlohmann::json to_json(const std::vector<DiagnosticEntry>& entries);
bool all_passed(const std::vector<DiagnosticEntry>& entries);

}  // namespace robreg
