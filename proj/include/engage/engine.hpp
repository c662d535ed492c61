#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "engage/behavior.hpp"
#include "engage/error.hpp"
#include "engage/rng.hpp"
#include "engage/timeline.hpp"

namespace engage {

// Engagement EL starts at 1 on arrival and moves linearly within each
// section, with a slope drawn from (or fixed to the mean of) the section's
// effective slope distribution. The first time EL reaches 0 is the estimated
// end of the interaction; if that never happens within t_max seconds the
// estimate is capped.

/// Gaussian proportional to the pointwise product of the factor densities:
/// precisions add, the mean is the precision-weighted average.
inline GaussianParams gaussian_product(std::span<const GaussianParams> factors) {
    if (factors.empty())
        throw InputError("gaussian_product: factor list must be non-empty");
    double precision = 0.0;
    double weighted_mean = 0.0;
    for (const auto& f : factors) {
        if (!(f.variance > 0.0))
            throw InputError("gaussian_product: variance must be positive");
        const double p = 1.0 / f.variance;
        precision += p;
        weighted_mean += p * f.mean;
    }
    return GaussianParams{weighted_mean / precision, 1.0 / precision};
}

/// Slope distribution applied within a section. Independent behaviors keep
/// their own distribution; dependent ones are fused with every co-present
/// user's distribution.
inline GaussianParams effective_slope(Behavior target,
                                      std::span<const Behavior> co_behaviors,
                                      const ParameterSet& params) {
    if (!is_dependent(target) || co_behaviors.empty()) return params[target];

    constexpr std::size_t kStack = 16;
    if (co_behaviors.size() + 1 <= kStack) {
        std::array<GaussianParams, kStack> factors;
        factors[0] = params[target];
        for (std::size_t i = 0; i < co_behaviors.size(); ++i)
            factors[i + 1] = params[co_behaviors[i]];
        return gaussian_product(std::span(factors.data(), co_behaviors.size() + 1));
    }
    std::vector<GaussianParams> factors;
    factors.reserve(co_behaviors.size() + 1);
    factors.push_back(params[target]);
    for (Behavior b : co_behaviors) factors.push_back(params[b]);
    return gaussian_product(factors);
}

struct TraceBreakpoint {
    double time = 0.0;
    double engagement = 0.0;

    friend bool operator==(const TraceBreakpoint&, const TraceBreakpoint&) = default;
};

struct SectionSlope {
    Section section;
    GaussianParams effective;
    double applied = 0.0; // the slope actually integrated
};

struct EngagementTrace {
    std::vector<TraceBreakpoint> breakpoints; // first is (arrival, 1.0)
    std::vector<SectionSlope> section_slopes; // sections actually traversed
    double estimated_duration = 0.0;          // seconds from arrival
    bool capped = false;

    double arrival() const { return breakpoints.empty() ? 0.0 : breakpoints.front().time; }
};

enum class SlopeMode { mean, sampled };

struct TrajectoryOptions {
    SlopeMode mode = SlopeMode::mean;
    std::uint64_t seed = 0;  // used in sampled mode only
    bool dependence = true;  // false ignores co-behaviors everywhere
};

namespace detail {

struct DurationOutcome {
    double duration = 0.0;
    bool capped = false;
};

/// Core integrator over a pre-segmented timeline. `slope_of` maps an
/// effective distribution to the slope applied in that section; `trace` is
/// optional. Sections must be the output of segment(): contiguous, with an
/// open-ended final entry, so the loop always terminates by crossing or cap.
template <typename SlopeFn>
DurationOutcome integrate_sections(std::span<const Section> sections,
                                   const ParameterSet& params, bool dependence,
                                   SlopeFn&& slope_of, EngagementTrace* trace) {
    static constexpr std::span<const Behavior> kNoCo{};
    const double arrival = sections.front().start;
    const double cap_time = arrival + params.t_max();
    double t = arrival;
    double el = 1.0;
    if (trace) trace->breakpoints.push_back({t, el});

    for (const auto& section : sections) {
        const GaussianParams eff = effective_slope(
            section.target_behavior,
            dependence ? std::span<const Behavior>(section.co_behaviors) : kNoCo, params);
        const double a = slope_of(eff);
        if (trace) trace->section_slopes.push_back({section, eff, a});

        const double end =
            section.open_ended ? std::numeric_limits<double>::infinity() : section.end;
        double t_cross = std::numeric_limits<double>::infinity();
        if (a < 0.0) t_cross = std::max(t + el / (-a), t); // clamp against rounding

        if (t_cross <= end && t_cross <= cap_time) {
            if (trace) trace->breakpoints.push_back({t_cross, 0.0});
            return {t_cross - arrival, false};
        }
        if (cap_time <= end) {
            if (trace) {
                const double el_cap = std::max(el + a * (cap_time - t), 0.0);
                trace->breakpoints.push_back({cap_time, el_cap});
            }
            return {params.t_max(), true};
        }
        el += a * (end - t);
        t = end;
        if (trace) trace->breakpoints.push_back({t, el});
    }
    // Unreachable: the final section is open-ended.
    throw NumericError("trajectory integration ran past the final section");
}

inline double mean_slope(const GaussianParams& g) { return g.mean; }

} // namespace detail

/// Estimated duration for a pre-segmented timeline; the fast path used by
/// training and evaluation, which segment each user once and re-score many
/// parameter sets.
inline detail::DurationOutcome duration_from_sections(std::span<const Section> sections,
                                                      const ParameterSet& params,
                                                      bool dependence = true) {
    return detail::integrate_sections(sections, params, dependence, detail::mean_slope,
                                      nullptr);
}

/// Full engagement path for one user of a session.
inline EngagementTrace trajectory(const InteractionSession& session,
                                  std::string_view target, const ParameterSet& params,
                                  const TrajectoryOptions& options = {}) {
    const std::vector<Section> sections = segment(session, target);
    EngagementTrace trace;
    trace.breakpoints.reserve(sections.size() + 1);
    detail::DurationOutcome outcome;
    if (options.mode == SlopeMode::mean) {
        outcome = detail::integrate_sections(sections, params, options.dependence,
                                             detail::mean_slope, &trace);
    } else {
        rng::Engine gen(options.seed);
        auto sampled = [&gen](const GaussianParams& g) {
            return rng::normal(gen, g.mean, std::sqrt(g.variance));
        };
        outcome = detail::integrate_sections(sections, params, options.dependence, sampled,
                                             &trace);
    }
    trace.estimated_duration = outcome.duration;
    trace.capped = outcome.capped;
    return trace;
}

/// Deterministic (mean-slope) duration estimate in seconds from arrival.
inline double estimate_duration(const InteractionSession& session, std::string_view target,
                                const ParameterSet& params, bool dependence = true) {
    const std::vector<Section> sections = segment(session, target);
    return duration_from_sections(sections, params, dependence).duration;
}

} // namespace engage
