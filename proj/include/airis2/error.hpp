#pragma once

#include <stdexcept>
#include <string>

namespace airis2 {

enum class ErrorCode {
    invalid_parameter,
    format_error,
    spacing_error,
    value_error,
    empty_input,
    insufficient_data,
    single_class,
    degenerate_data,
    shape_error,
    numeric_error,
    range_error,
    alignment_error,
    usage_error,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_parameter: return "invalid_parameter";
    case ErrorCode::format_error:      return "format_error";
    case ErrorCode::spacing_error:     return "spacing_error";
    case ErrorCode::value_error:       return "value_error";
    case ErrorCode::empty_input:       return "empty_input";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::single_class:      return "single_class";
    case ErrorCode::degenerate_data:   return "degenerate_data";
    case ErrorCode::shape_error:       return "shape_error";
    case ErrorCode::numeric_error:     return "numeric_error";
    case ErrorCode::range_error:       return "range_error";
    case ErrorCode::alignment_error:   return "alignment_error";
    case ErrorCode::usage_error:       return "usage_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw_error(code, message);
}

} // namespace airis2
