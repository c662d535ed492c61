#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "engage/engine.hpp"
#include "engage/rng.hpp"
#include "engage/stats.hpp"
#include "engage/timeline.hpp"

namespace engage {

/// Dwell-time range and next-behavior weights of one category's script
/// process. Self-transitions are allowed; they only over-segment.
struct BehaviorDynamics {
    double dwell_min = 5.0;
    double dwell_max = 20.0;
    std::array<double, kBehaviorCount> next_weights{};
};

struct ScenarioConfig {
    int n_sessions = 50;
    /// Weights over group sizes 1..4; the default realizes a mean of 2.25.
    std::array<double, 4> group_size_weights{0.25, 0.40, 0.20, 0.15};
    std::array<double, kBehaviorCount> initial_weights = default_behavior_frequencies();
    std::array<BehaviorDynamics, kBehaviorCount> dynamics = default_dynamics();
    ParameterSet ground_truth = reference_parameter_set();
    double jitter_min = 0.9; // multiplicative duration noise, uniform
    double jitter_max = 1.1;
    std::uint64_t seed = 1;

    /// Base rates: the calm behaviors dominate, robot-directed bursts are rare
    /// and brief.
    static constexpr std::array<double, kBehaviorCount> default_behavior_frequencies() {
        return {0.20, 0.28, 0.17, 0.11, 0.06, 0.06, 0.06, 0.06};
    }

    static std::array<BehaviorDynamics, kBehaviorCount> default_dynamics() {
        constexpr std::array<std::pair<double, double>, kBehaviorCount> dwell{{
            {8.0, 30.0},  // Prowl
            {10.0, 40.0}, // Gaze
            {5.0, 20.0},  // LookAround
            {8.0, 30.0},  // DoingOthers
            {2.0, 6.0},   // Pointing
            {3.0, 10.0},  // TalkToRobot
            {2.0, 6.0},   // Touch
            {2.0, 5.0},   // WaveHands
        }};
        const auto base = default_behavior_frequencies();
        std::array<BehaviorDynamics, kBehaviorCount> dyn{};
        for (std::size_t b = 0; b < kBehaviorCount; ++b) {
            dyn[b].dwell_min = dwell[b].first;
            dyn[b].dwell_max = dwell[b].second;
            dyn[b].next_weights = base;
            dyn[b].next_weights[b] = 0.0; // no self-transitions by default
        }
        return dyn;
    }
};

inline void validate_scenario(const ScenarioConfig& config) {
    if (config.n_sessions < 1) throw InputError("n_sessions must be >= 1");
    auto check_weights = [](std::span<const double> w, const std::string& what) {
        double total = 0.0;
        for (double v : w) {
            if (!(v >= 0.0)) throw InputError(what + ": weights must be non-negative");
            total += v;
        }
        if (!(total > 0.0)) throw InputError(what + ": at least one weight must be positive");
    };
    check_weights(config.group_size_weights, "group_size_weights");
    check_weights(config.initial_weights, "initial_weights");
    for (Behavior b : kAllBehaviors) {
        const auto& dyn = config.dynamics[static_cast<std::size_t>(b)];
        const std::string name(to_string(b));
        if (!(dyn.dwell_min > 0.0) || !(dyn.dwell_min < dyn.dwell_max))
            throw InputError(name + ": dwell range must satisfy 0 < min < max");
        check_weights(dyn.next_weights, name + " next_weights");
    }
    if (!(config.jitter_min > 0.0) || !(config.jitter_min <= config.jitter_max))
        throw InputError("jitter range must satisfy 0 < min <= max");
}

namespace detail {

inline std::string padded_id(char prefix, std::size_t index, std::size_t total) {
    std::size_t width = 1;
    for (std::size_t v = total; v >= 10; v /= 10) ++width;
    std::string digits = std::to_string(index);
    std::string out(1, prefix);
    out.append(width > digits.size() ? width - digits.size() : 0, '0');
    out += digits;
    return out;
}

struct SimUser {
    std::vector<BehaviorInterval> script;
    std::size_t cursor = 0;
    double el = 1.0;
    bool alive = true;
    double departure = 0.0;
    double jitter = 1.0;
};

/// Runs every user of one group forward in time simultaneously. Engagement
/// follows the same effective-slope rule the estimator uses; when a user's
/// engagement reaches 0 they depart and stop influencing the others. This
/// makes the emitted annotations self-consistent: re-estimating any user on
/// the final records reproduces their departure time exactly (before jitter).
inline void simulate_departures(std::vector<SimUser>& users, const ParameterSet& truth,
                                const std::string& session_id) {
    const double cap = truth.t_max();
    std::size_t alive_count = users.size();
    double t = 0.0;
    std::vector<double> slopes(users.size(), 0.0);
    std::vector<double> crossings(users.size(), 0.0);
    std::vector<Behavior> co;
    co.reserve(users.size());

    while (alive_count > 0) {
        double next_boundary = std::numeric_limits<double>::infinity();
        for (auto& u : users) {
            if (!u.alive) continue;
            while (u.script[u.cursor].end <= t) ++u.cursor;
            next_boundary = std::min(next_boundary, u.script[u.cursor].end);
        }

        double min_cross = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (!users[i].alive) continue;
            co.clear();
            for (std::size_t j = 0; j < users.size(); ++j)
                if (j != i && users[j].alive) co.push_back(users[j].script[users[j].cursor].behavior);
            const GaussianParams eff =
                effective_slope(users[i].script[users[i].cursor].behavior, co, truth);
            slopes[i] = eff.mean;
            crossings[i] = slopes[i] < 0.0
                               ? std::max(t + users[i].el / (-slopes[i]), t)
                               : std::numeric_limits<double>::infinity();
            min_cross = std::min(min_cross, crossings[i]);
        }

        if (min_cross <= next_boundary && min_cross <= cap) {
            for (std::size_t i = 0; i < users.size(); ++i) {
                if (!users[i].alive) continue;
                users[i].el += slopes[i] * (min_cross - t);
                if (crossings[i] == min_cross) {
                    users[i].alive = false;
                    users[i].departure = min_cross;
                    users[i].el = 0.0;
                    --alive_count;
                }
            }
            t = min_cross;
        } else if (cap <= next_boundary) {
            for (std::size_t i = 0; i < users.size(); ++i) {
                if (users[i].alive)
                    throw InputError(
                        "scenario yields no engagement zero-crossing below t_max for user " +
                        padded_id('u', i + 1, users.size()) + " in session '" + session_id +
                        "'; ground-truth slopes never drain engagement");
            }
        } else {
            for (std::size_t i = 0; i < users.size(); ++i)
                if (users[i].alive) users[i].el += slopes[i] * (next_boundary - t);
            t = next_boundary;
        }
    }
}

} // namespace detail

/// Seeded synthetic corpus. Per-session generators are derived from the
/// master seed by session index, so generation order cannot change the
/// output. Observed durations are the simulated departures scaled by the
/// jitter factor; annotations are clipped (or extended) to match.
inline std::vector<InteractionSession> generate(const ScenarioConfig& config) {
    validate_scenario(config);
    const double horizon =
        config.ground_truth.t_max() * std::max(1.0, config.jitter_max) + 1.0;

    std::vector<InteractionSession> sessions;
    sessions.reserve(static_cast<std::size_t>(config.n_sessions));
    for (std::size_t s = 0; s < static_cast<std::size_t>(config.n_sessions); ++s) {
        rng::Engine gen(rng::mix(config.seed, s));
        InteractionSession session;
        session.session_id =
            detail::padded_id('s', s + 1, static_cast<std::size_t>(config.n_sessions));

        const std::size_t group_size = 1 + rng::categorical(gen, config.group_size_weights);
        std::vector<detail::SimUser> sims(group_size);
        for (auto& sim : sims) {
            Behavior b = kAllBehaviors[rng::categorical(gen, config.initial_weights)];
            double t = 0.0;
            while (t < horizon) {
                const auto& dyn = config.dynamics[static_cast<std::size_t>(b)];
                const double dwell = rng::uniform(gen, dyn.dwell_min, dyn.dwell_max);
                sim.script.push_back({b, t, t + dwell});
                t += dwell;
                b = kAllBehaviors[rng::categorical(gen, dyn.next_weights)];
            }
        }
        for (auto& sim : sims)
            sim.jitter = rng::uniform(gen, config.jitter_min, config.jitter_max);

        detail::simulate_departures(sims, config.ground_truth, session.session_id);

        for (std::size_t i = 0; i < sims.size(); ++i) {
            UserRecord user;
            user.user_id = detail::padded_id('u', i + 1, sims.size());
            const double observed = sims[i].departure * sims[i].jitter;
            for (const auto& iv : sims[i].script) {
                if (iv.start >= observed) break;
                user.intervals.push_back({iv.behavior, iv.start, std::min(iv.end, observed)});
            }
            if (user.intervals.empty())
                throw NumericError("generated script did not cover the observed duration");
            if (user.intervals.back().end < observed)
                user.intervals.back().end = observed; // freeze the last behavior
            user.observed_duration = observed;
            session.users.push_back(std::move(user));
        }
        sessions.push_back(std::move(session));
    }
    return sessions;
}

struct CorpusStats {
    std::size_t n_users = 0;
    std::size_t n_sessions = 0;
    double mean_group_size = 0.0;
    std::array<std::size_t, kBehaviorCount> occurrences{};
    FiveNumberSummary duration_summary;
};

inline CorpusStats corpus_stats(std::span<const InteractionSession> sessions) {
    if (sessions.empty()) throw InputError("corpus is empty");
    CorpusStats stats;
    stats.n_sessions = sessions.size();
    stats.occurrences = behavior_occurrences(sessions);
    std::vector<double> durations;
    for (const auto& session : sessions) {
        stats.n_users += session.users.size();
        for (const auto& user : session.users) durations.push_back(user.observed_duration);
    }
    stats.mean_group_size =
        static_cast<double>(stats.n_users) / static_cast<double>(stats.n_sessions);
    stats.duration_summary = five_number_summary(std::move(durations));
    return stats;
}

} // namespace engage
