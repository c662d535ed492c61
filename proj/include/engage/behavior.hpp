#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "engage/error.hpp"

namespace engage {

/// The eight observable behavior categories a user can show while
/// interacting with the robot. Each annotated interval carries exactly one.
enum class Behavior : std::uint8_t {
    Prowl,
    Gaze,
    LookAround,
    DoingOthers,
    Pointing,
    TalkToRobot,
    Touch,
    WaveHands,
};

inline constexpr std::size_t kBehaviorCount = 8;

inline constexpr std::array<Behavior, kBehaviorCount> kAllBehaviors{
    Behavior::Prowl,       Behavior::Gaze,  Behavior::LookAround,
    Behavior::DoingOthers, Behavior::Pointing, Behavior::TalkToRobot,
    Behavior::Touch,       Behavior::WaveHands,
};

constexpr std::string_view to_string(Behavior b) {
    switch (b) {
    case Behavior::Prowl: return "Prowl";
    case Behavior::Gaze: return "Gaze";
    case Behavior::LookAround: return "LookAround";
    case Behavior::DoingOthers: return "DoingOthers";
    case Behavior::Pointing: return "Pointing";
    case Behavior::TalkToRobot: return "TalkToRobot";
    case Behavior::Touch: return "Touch";
    case Behavior::WaveHands: return "WaveHands";
    }
    return "?";
}

inline std::optional<Behavior> behavior_from_string(std::string_view name) {
    for (Behavior b : kAllBehaviors) {
        if (to_string(b) == name) return b;
    }
    return std::nullopt;
}

/// Whether the behavior's engagement slope is pulled toward co-present
/// users' slopes. Prowl, LookAround and DoingOthers are the behaviors one
/// only shows while waiting on (or distracted from) somebody else's
/// interaction; the other five are directed at the robot itself.
constexpr bool is_dependent(Behavior b) {
    switch (b) {
    case Behavior::Prowl:
    case Behavior::LookAround:
    case Behavior::DoingOthers:
        return true;
    default:
        return false;
    }
}

/// Normal distribution over an engagement slope, in engagement units per second.
struct GaussianParams {
    double mean = 0.0;
    double variance = 1.0;

    friend bool operator==(const GaussianParams&, const GaussianParams&) = default;
};

inline void validate_gaussian(const GaussianParams& g, std::string_view context) {
    if (!std::isfinite(g.mean))
        throw InputError(std::string(context) + ": mean must be finite");
    if (!(g.variance > 0.0) || !std::isfinite(g.variance))
        throw InputError(std::string(context) + ": variance must be positive");
}

/// The trainable state: one slope distribution per behavior category, the
/// residual-scale constant alpha and the duration cap t_max. Immutable after
/// construction, so concurrent readers need no synchronization.
class ParameterSet {
public:
    ParameterSet(const std::array<GaussianParams, kBehaviorCount>& per_behavior,
                 double alpha, double t_max)
        : per_behavior_(per_behavior), alpha_(alpha), t_max_(t_max) {
        for (Behavior b : kAllBehaviors)
            validate_gaussian(per_behavior_[static_cast<std::size_t>(b)], to_string(b));
        if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
            throw InputError("alpha must be positive");
        if (!(t_max_ > 0.0) || !std::isfinite(t_max_))
            throw InputError("t_max must be positive");
    }

    const GaussianParams& operator[](Behavior b) const {
        return per_behavior_[static_cast<std::size_t>(b)];
    }

    double alpha() const { return alpha_; }
    double t_max() const { return t_max_; }

    const std::array<GaussianParams, kBehaviorCount>& per_behavior() const {
        return per_behavior_;
    }

    /// Copy with one behavior's distribution replaced.
    ParameterSet with_behavior(Behavior b, GaussianParams g) const {
        auto copy = per_behavior_;
        copy[static_cast<std::size_t>(b)] = g;
        return ParameterSet(copy, alpha_, t_max_);
    }

    ParameterSet with_alpha(double alpha) const {
        return ParameterSet(per_behavior_, alpha, t_max_);
    }

    ParameterSet with_t_max(double t_max) const {
        return ParameterSet(per_behavior_, alpha_, t_max);
    }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::array<GaussianParams, kBehaviorCount> per_behavior_;
    double alpha_;
    double t_max_;
};

/// Untrained starting point: every behavior gets the same mildly negative
/// slope distribution.
inline ParameterSet default_parameter_set() {
    std::array<GaussianParams, kBehaviorCount> g;
    g.fill(GaussianParams{-0.15, 0.1});
    return ParameterSet(g, /*alpha=*/0.1, /*t_max=*/1800.0);
}

/// Slope distributions fitted on the original shopping-mall recordings
/// (multi-party coupling enabled). Useful as a realistic starting point and
/// for the bundled demos.
inline ParameterSet reference_parameter_set() {
    std::array<GaussianParams, kBehaviorCount> g{};
    auto set = [&](Behavior b, double mean, double var) {
        g[static_cast<std::size_t>(b)] = GaussianParams{mean, var};
    };
    set(Behavior::Prowl, -0.012, 0.279e-6);
    set(Behavior::Gaze, -0.800e-2, 0.180e-2);
    set(Behavior::LookAround, -0.011, 1.000e-6);
    set(Behavior::DoingOthers, -0.010, 0.347e-3);
    set(Behavior::Pointing, -0.130, 0.095);
    set(Behavior::TalkToRobot, -0.128, 0.095);
    set(Behavior::Touch, -0.118, 0.115);
    set(Behavior::WaveHands, -0.157, 0.093);
    return ParameterSet(g, /*alpha=*/0.1, /*t_max=*/1800.0);
}

} // namespace engage
