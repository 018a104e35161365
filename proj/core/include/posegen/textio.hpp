#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

#include "posegen/errors.hpp"

namespace posegen::textio {

/// Decimal with 17 significant digits: round-trips IEEE doubles exactly.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Hexadecimal float: exact and compact, used in checkpoints.
inline std::string hexfloat(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    const char* p = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p || *end != '\0') throw ParseError("not a number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s) {
    const char* p = s.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(p, &end, 10);
    if (end == p || *end != '\0') throw ParseError("not an integer: '" + s + "'");
    return v;
}

}  // namespace posegen::textio
