#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "pmerge/util.hpp"

namespace pmerge {

/// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace pmerge
