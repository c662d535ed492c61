#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "engage/behavior.hpp"
#include "engage/error.hpp"

namespace engage {

/// One annotated behavior span. Intervals of a user tile their stay without
/// gaps, so `end` of one interval equals `start` of the next.
struct BehaviorInterval {
    Behavior behavior = Behavior::Gaze;
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const BehaviorInterval&, const BehaviorInterval&) = default;
};

struct UserRecord {
    std::string user_id;
    std::vector<BehaviorInterval> intervals; // sorted, contiguous
    double observed_duration = 0.0;          // last end - first start

    double arrival() const { return intervals.empty() ? 0.0 : intervals.front().start; }
    double departure() const { return intervals.empty() ? 0.0 : intervals.back().end; }

    friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

/// One annotated group visit: every user that shared the robot at some point.
struct InteractionSession {
    std::string session_id;
    std::vector<UserRecord> users;

    const UserRecord* find_user(std::string_view user_id) const {
        for (const auto& u : users)
            if (u.user_id == user_id) return &u;
        return nullptr;
    }

    friend bool operator==(const InteractionSession&, const InteractionSession&) = default;
};

struct Violation {
    std::string user_id; // empty for session-level problems
    std::string message;
};

namespace detail {

inline std::string num(double v) {
    char buf[64];
    int n = std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf, buf + n);
}

} // namespace detail

/// Collects every invariant violation instead of stopping at the first one.
/// An empty result means the session is valid.
inline std::vector<Violation> validate(const InteractionSession& session) {
    std::vector<Violation> out;
    if (session.users.empty())
        out.push_back({"", "session has no users"});
    for (std::size_t i = 0; i < session.users.size(); ++i) {
        const auto& user = session.users[i];
        for (std::size_t j = i + 1; j < session.users.size(); ++j) {
            if (session.users[j].user_id == user.user_id) {
                out.push_back({user.user_id, "duplicate user_id"});
                break;
            }
        }
        if (user.intervals.empty()) {
            out.push_back({user.user_id, "user has no intervals"});
            continue;
        }
        for (const auto& iv : user.intervals) {
            if (!std::isfinite(iv.start) || !std::isfinite(iv.end)) {
                out.push_back({user.user_id, "non-finite interval time"});
                continue;
            }
            if (iv.start < 0.0)
                out.push_back({user.user_id, "negative time at t=" + detail::num(iv.start)});
            if (!(iv.start < iv.end))
                out.push_back({user.user_id,
                               "interval start must precede end at t=" + detail::num(iv.start)});
        }
        for (std::size_t k = 0; k + 1 < user.intervals.size(); ++k) {
            const double cur_end = user.intervals[k].end;
            const double next_start = user.intervals[k + 1].start;
            if (next_start < cur_end)
                out.push_back({user.user_id, "overlap at t=" + detail::num(next_start)});
            else if (next_start > cur_end)
                out.push_back({user.user_id, "gap at t=" + detail::num(cur_end)});
        }
        const double span = user.departure() - user.arrival();
        if (std::abs(user.observed_duration - span) > 1e-9)
            out.push_back({user.user_id,
                           "observed_duration " + detail::num(user.observed_duration) +
                               " does not match annotated span " + detail::num(span)});
    }
    return out;
}

inline void require_valid(const InteractionSession& session) {
    auto violations = validate(session);
    if (violations.empty()) return;
    std::string msg = "invalid session '" + session.session_id + "':";
    for (const auto& v : violations) {
        msg += "\n  ";
        if (!v.user_id.empty()) msg += "user " + v.user_id + ": ";
        msg += v.message;
    }
    throw InputError(msg);
}

/// Number of annotated intervals per behavior category across a dataset.
inline std::array<std::size_t, kBehaviorCount> behavior_occurrences(
    std::span<const InteractionSession> sessions) {
    std::array<std::size_t, kBehaviorCount> counts{};
    for (const auto& session : sessions)
        for (const auto& user : session.users)
            for (const auto& iv : user.intervals)
                ++counts[static_cast<std::size_t>(iv.behavior)];
    return counts;
}

/// Maximal time span over which the target user's behavior and every
/// co-present user's behavior are all constant. The last section of a user is
/// open-ended: its configuration is frozen and extrapolated past `end`.
struct Section {
    int index = 1; // 1-based position in the user's section sequence
    double start = 0.0;
    double end = 0.0;
    bool open_ended = false;
    Behavior target_behavior = Behavior::Gaze;
    std::vector<Behavior> co_behaviors; // session user order, target excluded

    friend bool operator==(const Section&, const Section&) = default;
};

/// Cuts the target user's stay at every change of the joint behavior
/// configuration: their own annotation boundaries plus any other user's
/// boundaries (including arrivals and departures) that fall inside the stay.
/// Co-present users contribute their active behavior to each section;
/// a user departing exactly at a boundary is absent from the section that
/// starts there.
inline std::vector<Section> segment(const InteractionSession& session,
                                    std::string_view target) {
    require_valid(session);
    const UserRecord* target_user = session.find_user(target);
    if (!target_user)
        throw InputError("unknown user '" + std::string(target) + "' in session '" +
                         session.session_id + "'");

    const double arrival = target_user->arrival();
    const double departure = target_user->departure();

    std::vector<double> cuts;
    for (const auto& iv : target_user->intervals) {
        cuts.push_back(iv.start);
        cuts.push_back(iv.end);
    }
    for (const auto& user : session.users) {
        if (&user == target_user) continue;
        for (const auto& iv : user.intervals) {
            for (double t : {iv.start, iv.end})
                if (t > arrival && t < departure) cuts.push_back(t);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Behavior active at time t for a user covering t (intervals are contiguous).
    auto behavior_at = [](const UserRecord& user, double t) {
        for (const auto& iv : user.intervals)
            if (t < iv.end) return iv.behavior;
        return user.intervals.back().behavior;
    };

    std::vector<Section> sections;
    sections.reserve(cuts.size() - 1);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Section s;
        s.index = static_cast<int>(i) + 1;
        s.start = cuts[i];
        s.end = cuts[i + 1];
        s.open_ended = (i + 2 == cuts.size());
        s.target_behavior = behavior_at(*target_user, s.start);
        for (const auto& user : session.users) {
            if (&user == target_user) continue;
            if (user.arrival() <= s.start && user.departure() >= s.end)
                s.co_behaviors.push_back(behavior_at(user, s.start));
        }
        sections.push_back(std::move(s));
    }
    return sections;
}

} // namespace engage
