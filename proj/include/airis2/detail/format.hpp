#pragma once

#include <charconv>
#include <cstdlib>
#include <string>
#include <string_view>
#include <system_error>

#include "airis2/error.hpp"

namespace airis2::detail {

// Shortest decimal form that round-trips the exact double value.
inline std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, ErrorCode code, const std::string& context) {
    double value = 0.0;
    auto first = text.data();
    auto last = text.data() + text.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc()) throw_error(code, "not a number: '" + std::string(text) + "' in " + context);
    for (auto p = res.ptr; p != last; ++p) {
        if (*p != ' ' && *p != '\t' && *p != '\r')
            throw_error(code, "trailing garbage: '" + std::string(text) + "' in " + context);
    }
    return value;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace airis2::detail
