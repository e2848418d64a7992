#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace cryptomove {

/// Real-valued series in which undefined entries (warm-up, singular points)
/// are stored as quiet NaN. Defined entries are always finite.
using Series = std::vector<double>;

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline bool is_defined(double v) noexcept { return !std::isnan(v); }

inline Series undefined_series(std::size_t n) { return Series(n, kUndefined); }

/// Number of leading undefined entries.
inline std::size_t leading_undefined(const Series& s) noexcept {
    std::size_t i = 0;
    while (i < s.size() && !is_defined(s[i])) ++i;
    return i;
}

}  // namespace cryptomove
