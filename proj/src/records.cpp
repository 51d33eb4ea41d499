#include "robreg/records.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <tuple>

#include "robreg/errors.hpp"
#include "robreg/io.hpp"

namespace robreg {

namespace {

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Splits RFC 4180 text into rows of fields; quoted fields may hold commas,
/// doubled quotes and line breaks.
std::vector<std::vector<std::string>> split_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw ConfigError("CSV: quote inside an unquoted field");
                quoted = true;
                field_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                field_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (field_started || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                field.clear();
                row.clear();
                field_started = false;
                break;
            default:
                field += c;
                field_started = true;
        }
    }
    if (quoted) throw ConfigError("CSV: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
T parse_number(const std::string& s, const char* column) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(std::string("CSV: bad value in column ") + column + ": '" + s + "'");
    return v;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void sort_records(std::vector<SweepRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.model_label, a.estimator, a.omega) < std::tie(b.model_label, b.estimator, b.omega);
    });
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw std::invalid_argument("no records to emit");
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : records) {
        out += format_real(r.omega) + "," + quote(r.model_label) + "," + quote(r.estimator) + "," +
               format_real(r.value) + "," + format_real(r.mcse) + "," + std::to_string(r.n_samples) + "," +
               std::to_string(r.seed) + "\n";
    }
    return out;
}

std::vector<SweepRecord> parse_csv(const std::string& text) {
    const auto rows = split_rows(text);
    if (rows.empty()) throw ConfigError("CSV: empty input");
    std::string header;
    for (std::size_t j = 0; j < rows[0].size(); ++j) header += (j ? "," : "") + rows[0][j];
    if (header != kCsvHeader) throw ConfigError("CSV: unexpected header '" + header + "'");
    std::vector<SweepRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != 7) throw ConfigError("CSV: row " + std::to_string(i + 1) + " has " + std::to_string(f.size()) + " fields");
        SweepRecord r;
        r.omega = parse_number<double>(f[0], "omega");
        r.model_label = f[1];
        r.estimator = f[2];
        r.value = parse_number<double>(f[3], "value");
        r.mcse = parse_number<double>(f[4], "mcse");
        r.n_samples = parse_number<std::size_t>(f[5], "n_samples");
        r.seed = parse_number<std::uint64_t>(f[6], "seed");
        out.push_back(std::move(r));
    }
    return out;
}

void emit_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
    const std::string text = records_to_csv(records);
    write_text_file(path, text);
}

void emit_json(const nlohmann::json& report, const std::filesystem::path& path) {
    write_text_file(path, report.dump(2) + "\n");
}

nlohmann::json to_json(const std::vector<SweepRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records)
        arr.push_back({{"omega", r.omega},
                       {"model_label", r.model_label},
                       {"estimator", r.estimator},
                       {"value", r.value},
                       {"mcse", r.mcse},
                       {"n_samples", r.n_samples},
                       {"seed", r.seed},
                       {"divergences", r.divergences}});
    return arr;
}

}  // namespace robreg
