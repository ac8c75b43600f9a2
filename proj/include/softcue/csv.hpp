#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "softcue/errors.hpp"

namespace softcue::csv {

struct Row {
    std::size_t line;  // 1-based line number in the source
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::size_t header_line = 0;
    std::vector<Row> rows;
    std::vector<std::string> comments;  // `#` lines, without the marker

    // Column index by name, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const auto piece = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        out.emplace_back(trim(piece));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Reads a comma-separated table. Blank lines are skipped and lines starting
// with `#` are collected as comments. The first remaining line is the header.
inline Table read(std::istream& in) {
    Table table;
    std::string line;
    std::size_t number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        const auto view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            table.comments.emplace_back(trim(view.substr(1)));
            continue;
        }
        if (!have_header) {
            table.header = split(view);
            table.header_line = number;
            have_header = true;
            continue;
        }
        table.rows.push_back({number, split(view)});
    }
    if (!have_header) throw ParseError(number == 0 ? 1 : number, "missing CSV header");
    return table;
}

inline std::optional<double> try_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

inline double number(const Row& row, std::size_t column, std::string_view name) {
    if (column >= row.fields.size() || row.fields[column].empty())
        throw ParseError(row.line, "missing value for '" + std::string(name) + "'");
    const auto value = try_number(row.fields[column]);
    if (!value)
        throw ParseError(row.line, "malformed number '" + row.fields[column] + "' in column '" +
                                       std::string(name) + "'");
    return *value;
}

// Shortest representation that parses back to the same double.
inline std::string format(double value) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

}  // namespace softcue::csv
