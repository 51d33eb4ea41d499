#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace robreg {

/// One estimator value at one omega for one model.
struct SweepRecord {
    double omega = 0.0;
    std::string model_label;
    std::string estimator;  // posterior_mean_beta2 | limiting_mean_beta2 | theorem_ratio
    double value = 0.0;
    double mcse = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t divergences = 0;  // carried in JSON output only

    bool operator==(const SweepRecord&) const = default;
};

inline const char* const kCsvHeader = "omega,model_label,estimator,value,mcse,n_samples,seed";

/// Orders by (model_label, estimator, omega).
void sort_records(std::vector<SweepRecord>& records);

/// RFC 4180 CSV with LF line endings and 17 significant digits for reals.
/// Throws std::invalid_argument for an empty record list.
std::string records_to_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_csv(const std::string& text);

/// Writes the CSV; an empty list raises before the file is touched.
void emit_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path);
void emit_json(const nlohmann::json& report, const std::filesystem::path& path);

nlohmann::json to_json(const std::vector<SweepRecord>& records);

std::string format_real(double v);

}  // namespace robreg
