#pragma once

// Minimal delimited-text helpers shared by the readers. Fields in the
// formats handled here never contain quoted delimiters.

#include "cryptomove/error.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline bool is_blank(std::string_view line) {
    return trim(line).empty();
}

inline double to_double(std::string_view field, const std::string& source, std::size_t line,
                        std::string_view column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
        throw ParseError(source, line,
                         "non-numeric value '" + std::string(field) + "' in column " + std::string(column));
    return v;
}

inline std::int64_t to_int(std::string_view field, const std::string& source, std::size_t line,
                           std::string_view column) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
        throw ParseError(source, line,
                         "non-integer value '" + std::string(field) + "' in column " + std::string(column));
    return v;
}

/// Shortest round-trip representation of a double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace cryptomove::csv
