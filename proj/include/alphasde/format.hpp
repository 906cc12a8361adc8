#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace alphasde {

// Shortest round-trip decimal form, '.' separator, locale independent.
inline std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

} // namespace alphasde
