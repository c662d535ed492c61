#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "engage/error.hpp"

namespace engage {

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;

    friend bool operator==(const FiveNumberSummary&, const FiveNumberSummary&) = default;
};

/// Order statistic of a sorted sample at fraction p, linearly interpolated.
inline double quantile_of_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InputError("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Mean of the two central values for even-sized samples.
inline double median_of_sorted(std::span<const double> sorted) {
    if (sorted.empty()) throw InputError("median of empty sample");
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

inline FiveNumberSummary five_number_summary(std::vector<double> values) {
    if (values.empty()) throw InputError("summary of empty sample");
    std::sort(values.begin(), values.end());
    return FiveNumberSummary{values.front(), quantile_of_sorted(values, 0.25),
                             median_of_sorted(values), quantile_of_sorted(values, 0.75),
                             values.back()};
}

} // namespace engage
