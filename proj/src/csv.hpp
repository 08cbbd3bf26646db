#pragma once

#include "fitngp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cstdint>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace fitngp::csv {

/// Splits plain comma-separated text (no quoting) into rows of fields.
/// Blank lines are skipped; the header row is checked and dropped.
inline std::vector<std::vector<std::string>> read(const std::string& text, const std::string& header)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    std::int64_t line_no = 0;
    bool seen_header = false;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!seen_header) {
            if (line != header) {
                throw FormatError("unexpected CSV header '" + line + "'", -1, line_no);
            }
            seen_header = true;
            columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream row(line);
        while (std::getline(row, field, ',')) {
            fields.push_back(field);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        if (fields.size() != columns) {
            throw FormatError("expected " + std::to_string(columns) + " fields", -1, line_no);
        }
        rows.push_back(std::move(fields));
    }
    if (!seen_header) {
        throw FormatError("missing CSV header", -1, 1);
    }
    return rows;
}

inline double to_double(const std::string& field)
{
    if (field == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError("not a number: '" + field + "'", -1);
    }
    return v;
}

inline std::uint64_t to_u64(const std::string& field)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError("not an integer: '" + field + "'", -1);
    }
    return v;
}

}  // namespace fitngp::csv
