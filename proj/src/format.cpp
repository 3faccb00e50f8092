#include "wq/format.hpp"

#include <fmt/format.h>

namespace wq {

std::string format_real(double x) { return fmt::format("{:.12g}", x); }

}  // namespace wq
