#pragma once

// Shortest round-trip decimal text for doubles. Used wherever numbers end up
// in files, so reruns compare byte for byte.

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace radinv {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    if (r.ec != std::errc{}) return std::to_string(v);
    return std::string(buf, r.ptr);
}

}  // namespace radinv
