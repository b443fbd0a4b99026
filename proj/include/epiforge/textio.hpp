#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "epiforge/errors.hpp"

namespace epiforge::detail {

/// Shortest digit string that round-trips a double exactly (17 significant
/// digits), locale-independent as long as nobody calls setlocale.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& field, std::size_t line_no, const char* what) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        raise(ErrorKind::ParseError, std::string(what) + " line " + std::to_string(line_no) +
                                         ": bad number '" + field + "'");
    return v;
}

inline long parse_int(const std::string& field, std::size_t line_no, const char* what) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0')
        raise(ErrorKind::ParseError, std::string(what) + " line " + std::to_string(line_no) +
                                         ": bad integer '" + field + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::vector<std::string> split_whitespace(const std::string& line) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : line) {
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

} // namespace epiforge::detail
