#pragma once

#include <string>

namespace wq {

inline constexpr const char* kVersion = "wq 0.1.0";

/// Locale-independent decimal rendering with 12 significant digits.
std::string format_real(double x);

}  // namespace wq
