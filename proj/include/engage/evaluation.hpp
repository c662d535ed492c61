#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "engage/engine.hpp"
#include "engage/stats.hpp"
#include "engage/timeline.hpp"

namespace engage {

/// Users who stayed shorter than this are not scored (threshold inclusive).
inline constexpr double kMinEvalDuration = 30.0;

inline constexpr double kHistogramBinWidth = 5.0;

struct UserError {
    std::string session_id;
    std::string user_id;
    double observed = 0.0;
    double estimated = 0.0;
    double error = 0.0; // estimated - observed; negative means under-estimation
};

struct HistogramBin {
    double center = 0.0;
    std::size_t count = 0;

    friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

struct EvalMetrics {
    bool dependence = true;
    std::vector<UserError> per_user_errors;
    double mae = 0.0;
    double median = 0.0;
    double mode = 0.0;                  // center of the fullest 5 s bin
    std::vector<HistogramBin> histogram; // contiguous bins, centers at multiples of 5
    FiveNumberSummary observed_summary;
    FiveNumberSummary estimated_summary;
};

namespace detail {

/// Bin centers sit at integer multiples of the width; bin k covers
/// [k*w - w/2, k*w + w/2).
inline long long histogram_bin(double error, double width = kHistogramBinWidth) {
    return static_cast<long long>(std::floor(error / width + 0.5));
}

} // namespace detail

/// Deterministic duration estimates against observations for every eligible
/// user. Aggregates are computed from value-sorted copies, so reordering the
/// sessions cannot change any metric.
inline EvalMetrics evaluate(std::span<const InteractionSession> dataset,
                            const ParameterSet& params, bool dependence_enabled) {
    EvalMetrics metrics;
    metrics.dependence = dependence_enabled;
    for (const auto& session : dataset) {
        for (const auto& user : session.users) {
            if (user.observed_duration < kMinEvalDuration) continue;
            const double estimated =
                estimate_duration(session, user.user_id, params, dependence_enabled);
            metrics.per_user_errors.push_back({session.session_id, user.user_id,
                                               user.observed_duration, estimated,
                                               estimated - user.observed_duration});
        }
    }
    if (metrics.per_user_errors.empty())
        throw InputError("no users with observed duration >= 30 s");

    std::vector<double> errors;
    std::vector<double> observed;
    std::vector<double> estimated;
    errors.reserve(metrics.per_user_errors.size());
    for (const auto& e : metrics.per_user_errors) {
        errors.push_back(e.error);
        observed.push_back(e.observed);
        estimated.push_back(e.estimated);
    }
    std::sort(errors.begin(), errors.end());

    double abs_sum = 0.0;
    for (double e : errors) abs_sum += std::abs(e);
    metrics.mae = abs_sum / static_cast<double>(errors.size());
    metrics.median = median_of_sorted(errors);

    std::map<long long, std::size_t> bins;
    for (double e : errors) ++bins[detail::histogram_bin(e)];
    for (long long k = bins.begin()->first; k <= bins.rbegin()->first; ++k) {
        const auto it = bins.find(k);
        metrics.histogram.push_back(
            {static_cast<double>(k) * kHistogramBinWidth, it == bins.end() ? 0 : it->second});
    }
    std::size_t best_count = 0;
    double best_center = 0.0;
    for (const auto& bin : metrics.histogram) {
        const bool better =
            bin.count > best_count ||
            (bin.count == best_count && bin.count > 0 &&
             (std::abs(bin.center) < std::abs(best_center) ||
              (std::abs(bin.center) == std::abs(best_center) && bin.center < best_center)));
        if (better) {
            best_count = bin.count;
            best_center = bin.center;
        }
    }
    metrics.mode = best_center;

    metrics.observed_summary = five_number_summary(observed);
    metrics.estimated_summary = five_number_summary(estimated);
    return metrics;
}

struct MethodComparison {
    EvalMetrics method1; // all behaviors independent, scored with params1
    EvalMetrics method2; // dependence coupling on, scored with params2
    double mae_difference = 0.0; // method1.mae - method2.mae; positive favors method 2
};

inline MethodComparison compare_methods(std::span<const InteractionSession> dataset,
                                        const ParameterSet& params1,
                                        const ParameterSet& params2) {
    MethodComparison cmp{evaluate(dataset, params1, false), evaluate(dataset, params2, true),
                         0.0};
    cmp.mae_difference = cmp.method1.mae - cmp.method2.mae;
    return cmp;
}

inline std::string format_metrics_row(const EvalMetrics& m, std::string_view label) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s  %8.1f  %8.1f  %8.1f  %6zu", std::string(label).c_str(),
                  m.mae, m.median, m.mode, m.per_user_errors.size());
    return buf;
}

/// Side-by-side table of the two methods, Tables-style: MAE / median / mode.
inline std::string format_comparison_table(const MethodComparison& cmp) {
    std::string out = "method      MAE s     median s  mode s    users\n";
    out += format_metrics_row(cmp.method1, "method 1") + "\n";
    out += format_metrics_row(cmp.method2, "method 2") + "\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "MAE difference (method1 - method2): %.3f s\n",
                  cmp.mae_difference);
    out += buf;
    return out;
}

} // namespace engage
