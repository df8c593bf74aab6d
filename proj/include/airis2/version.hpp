#pragma once

namespace airis2 {

inline constexpr const char* kVersion = "0.1.0";

} // namespace airis2
