#pragma once

#include <cstdio>
#include <string>

namespace levitan::detail {

/// binary64 with 17 significant digits (round-trips exactly).
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace levitan::detail
