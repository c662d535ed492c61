#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "engage/behavior.hpp"
#include "engage/engine.hpp"
#include "engage/error.hpp"
#include "engage/evaluation.hpp"
#include "engage/synthgen.hpp"
#include "engage/timeline.hpp"
#include "engage/trainer.hpp"

namespace engage {

namespace detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
    if (!out) throw InputError("write failed for '" + path + "'");
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputError(what + ": malformed JSON");
    return j;
}

inline double require_number(const nlohmann::json& j, const std::string& key,
                             const std::string& context) {
    if (!j.contains(key)) throw InputError(context + ": missing field '" + key + "'");
    if (!j[key].is_number()) throw InputError(context + ": field '" + key + "' must be a number");
    return j[key].get<double>();
}

} // namespace detail

// --- parameter sets ---------------------------------------------------------

inline nlohmann::json parameters_to_json(const ParameterSet& params) {
    nlohmann::json behaviors;
    for (Behavior b : kAllBehaviors) {
        behaviors[std::string(to_string(b))] = {{"mean", params[b].mean},
                                                {"variance", params[b].variance}};
    }
    return {{"alpha", params.alpha()}, {"t_max", params.t_max()}, {"behaviors", behaviors}};
}

inline ParameterSet parameters_from_json(const nlohmann::json& j, const std::string& context) {
    if (!j.is_object()) throw InputError(context + ": expected a JSON object");
    const double alpha = detail::require_number(j, "alpha", context);
    const double t_max = detail::require_number(j, "t_max", context);
    if (!j.contains("behaviors") || !j["behaviors"].is_object())
        throw InputError(context + ": missing field 'behaviors'");
    const auto& behaviors = j["behaviors"];
    for (const auto& [name, value] : behaviors.items()) {
        if (!behavior_from_string(name))
            throw InputError(context + ": unknown behavior category '" + name + "'");
        (void)value;
    }
    std::array<GaussianParams, kBehaviorCount> g{};
    for (Behavior b : kAllBehaviors) {
        const std::string name(to_string(b));
        if (!behaviors.contains(name))
            throw InputError(context + ": missing category " + name);
        g[static_cast<std::size_t>(b)] =
            GaussianParams{detail::require_number(behaviors[name], "mean", context + ": " + name),
                           detail::require_number(behaviors[name], "variance",
                                                  context + ": " + name)};
    }
    return ParameterSet(g, alpha, t_max); // constructor re-validates ranges
}

inline void save_parameters(const ParameterSet& params, const std::string& path) {
    detail::write_file(path, parameters_to_json(params).dump(2) + "\n");
}

inline ParameterSet load_parameters(const std::string& path) {
    return parameters_from_json(detail::parse_json(detail::read_file(path), path), path);
}

// --- sessions ---------------------------------------------------------------

inline nlohmann::json session_to_json(const InteractionSession& session) {
    nlohmann::json users = nlohmann::json::array();
    for (const auto& user : session.users) {
        nlohmann::json intervals = nlohmann::json::array();
        for (const auto& iv : user.intervals)
            intervals.push_back({{"behavior", std::string(to_string(iv.behavior))},
                                 {"start", iv.start},
                                 {"end", iv.end}});
        users.push_back({{"user_id", user.user_id}, {"intervals", intervals}});
    }
    return {{"session_id", session.session_id}, {"users", users}};
}

inline InteractionSession session_from_json(const nlohmann::json& j,
                                            const std::string& context) {
    if (!j.is_object() || !j.contains("session_id") || !j["session_id"].is_string())
        throw InputError(context + ": missing field 'session_id'");
    if (!j.contains("users") || !j["users"].is_array())
        throw InputError(context + ": missing field 'users'");
    InteractionSession session;
    session.session_id = j["session_id"].get<std::string>();
    for (const auto& ju : j["users"]) {
        UserRecord user;
        if (!ju.contains("user_id") || !ju["user_id"].is_string())
            throw InputError(context + ": user entry missing 'user_id'");
        user.user_id = ju["user_id"].get<std::string>();
        if (!ju.contains("intervals") || !ju["intervals"].is_array())
            throw InputError(context + ": user " + user.user_id + " missing 'intervals'");
        for (const auto& jiv : ju["intervals"]) {
            const std::string uctx = context + ": user " + user.user_id;
            if (!jiv.contains("behavior") || !jiv["behavior"].is_string())
                throw InputError(uctx + ": interval missing 'behavior'");
            const auto behavior = behavior_from_string(jiv["behavior"].get<std::string>());
            if (!behavior)
                throw InputError(uctx + ": unknown behavior category '" +
                                 jiv["behavior"].get<std::string>() + "'");
            user.intervals.push_back({*behavior, detail::require_number(jiv, "start", uctx),
                                      detail::require_number(jiv, "end", uctx)});
        }
        user.observed_duration = user.departure() - user.arrival();
        session.users.push_back(std::move(user));
    }
    return session;
}

/// ELAN-style tier export: one row per annotation, tab-separated
/// `user_id  behavior  start  end`. Blank lines and '#' comments are skipped.
inline InteractionSession session_from_tsv(const std::string& text,
                                           const std::string& session_id,
                                           const std::string& context) {
    InteractionSession session;
    session.session_id = session_id;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::string where = context + ":" + std::to_string(line_no);

        std::array<std::string, 4> fields;
        std::size_t field = 0;
        std::size_t pos = 0;
        while (field < 4) {
            const std::size_t tab = line.find('\t', pos);
            fields[field++] = line.substr(pos, tab == std::string::npos ? tab : tab - pos);
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (field != 4) throw InputError(where + ": expected 4 tab-separated fields");

        const auto behavior = behavior_from_string(fields[1]);
        if (!behavior)
            throw InputError(where + ": unknown behavior category '" + fields[1] + "'");
        auto parse_time = [&](const std::string& s) {
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
                throw InputError(where + ": '" + s + "' is not a number");
            return v;
        };
        const BehaviorInterval iv{*behavior, parse_time(fields[2]), parse_time(fields[3])};

        UserRecord* user = nullptr;
        for (auto& u : session.users)
            if (u.user_id == fields[0]) user = &u;
        if (!user) {
            session.users.push_back({fields[0], {}, 0.0});
            user = &session.users.back();
        }
        user->intervals.push_back(iv);
    }
    for (auto& user : session.users) {
        std::stable_sort(user.intervals.begin(), user.intervals.end(),
                         [](const auto& a, const auto& b) { return a.start < b.start; });
        user.observed_duration = user.departure() - user.arrival();
    }
    return session;
}

/// Load one session file; JSON and the tab-separated import are both
/// accepted. The result is validated.
inline InteractionSession load_session(const std::string& path) {
    const std::string text = detail::read_file(path);
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    InteractionSession session;
    if (first != std::string::npos && text[first] == '{') {
        session = session_from_json(detail::parse_json(text, path), path);
    } else {
        session = session_from_tsv(text, std::filesystem::path(path).stem().string(), path);
    }
    require_valid(session);
    return session;
}

inline void save_session(const InteractionSession& session, const std::string& path) {
    detail::write_file(path, session_to_json(session).dump(2) + "\n");
}

/// Load every session file in a directory, sorted by filename for
/// reproducibility. JSON files without a session_id (for example a
/// ground-truth parameter sidecar) are skipped.
inline std::vector<InteractionSession> load_sessions(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".json" || ext == ".tsv") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<InteractionSession> sessions;
    for (const auto& path : paths) {
        if (path.ends_with(".json")) {
            const auto j = detail::parse_json(detail::read_file(path), path);
            if (!j.is_object() || !j.contains("session_id")) continue;
            auto session = session_from_json(j, path);
            require_valid(session);
            sessions.push_back(std::move(session));
        } else {
            sessions.push_back(load_session(path));
        }
    }
    if (sessions.empty()) throw InputError("no session files found in '" + dir + "'");
    return sessions;
}

// --- scenarios ---------------------------------------------------------------

inline nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    nlohmann::json behaviors;
    for (Behavior b : kAllBehaviors) {
        const auto& dyn = config.dynamics[static_cast<std::size_t>(b)];
        nlohmann::json next;
        for (Behavior n : kAllBehaviors)
            next[std::string(to_string(n))] = dyn.next_weights[static_cast<std::size_t>(n)];
        behaviors[std::string(to_string(b))] = {
            {"dwell_min", dyn.dwell_min}, {"dwell_max", dyn.dwell_max}, {"next_weights", next}};
    }
    nlohmann::json initial;
    for (Behavior b : kAllBehaviors)
        initial[std::string(to_string(b))] =
            config.initial_weights[static_cast<std::size_t>(b)];
    return {{"n_sessions", config.n_sessions},
            {"seed", config.seed},
            {"group_size_weights", config.group_size_weights},
            {"initial_weights", initial},
            {"behaviors", behaviors},
            {"jitter", {{"min", config.jitter_min}, {"max", config.jitter_max}}},
            {"ground_truth", parameters_to_json(config.ground_truth)}};
}

/// Missing keys keep their defaults, so a scenario file can specify only
/// what it changes.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::string& context) {
    if (!j.is_object()) throw InputError(context + ": expected a JSON object");
    ScenarioConfig config;
    if (j.contains("n_sessions")) config.n_sessions = j["n_sessions"].get<int>();
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("group_size_weights")) {
        const auto& w = j["group_size_weights"];
        if (!w.is_array() || w.size() != 4)
            throw InputError(context + ": group_size_weights must be an array of 4 weights");
        for (std::size_t i = 0; i < 4; ++i) config.group_size_weights[i] = w[i].get<double>();
    }
    auto read_weights = [&](const nlohmann::json& w, std::array<double, kBehaviorCount>& out,
                            const std::string& what) {
        if (!w.is_object()) throw InputError(context + ": " + what + " must be an object");
        for (const auto& [name, value] : w.items()) {
            const auto b = behavior_from_string(name);
            if (!b) throw InputError(context + ": unknown behavior category '" + name + "'");
            out[static_cast<std::size_t>(*b)] = value.get<double>();
        }
    };
    if (j.contains("initial_weights"))
        read_weights(j["initial_weights"], config.initial_weights, "initial_weights");
    if (j.contains("behaviors")) {
        if (!j["behaviors"].is_object())
            throw InputError(context + ": 'behaviors' must be an object");
        for (const auto& [name, jdyn] : j["behaviors"].items()) {
            const auto b = behavior_from_string(name);
            if (!b) throw InputError(context + ": unknown behavior category '" + name + "'");
            auto& dyn = config.dynamics[static_cast<std::size_t>(*b)];
            if (jdyn.contains("dwell_min")) dyn.dwell_min = jdyn["dwell_min"].get<double>();
            if (jdyn.contains("dwell_max")) dyn.dwell_max = jdyn["dwell_max"].get<double>();
            if (jdyn.contains("next_weights"))
                read_weights(jdyn["next_weights"], dyn.next_weights,
                             std::string(name) + ".next_weights");
        }
    }
    if (j.contains("jitter")) {
        config.jitter_min = detail::require_number(j["jitter"], "min", context + ": jitter");
        config.jitter_max = detail::require_number(j["jitter"], "max", context + ": jitter");
    }
    if (j.contains("ground_truth"))
        config.ground_truth = parameters_from_json(j["ground_truth"], context + ": ground_truth");
    validate_scenario(config);
    return config;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    return scenario_from_json(detail::parse_json(detail::read_file(path), path), path);
}

inline void save_scenario(const ScenarioConfig& config, const std::string& path) {
    detail::write_file(path, scenario_to_json(config).dump(2) + "\n");
}

// --- training reports ---------------------------------------------------------

inline nlohmann::json train_report_to_json(const TrainReport& report) {
    nlohmann::json iterations = nlohmann::json::array();
    for (const auto& it : report.trajectory)
        iterations.push_back({{"iteration", it.iteration},
                              {"objective", it.objective},
                              {"gradient_norm", it.gradient_norm},
                              {"step", it.step}});
    nlohmann::json occurrences;
    for (Behavior b : kAllBehaviors)
        occurrences[std::string(to_string(b))] =
            report.occurrences[static_cast<std::size_t>(b)];
    return {{"converged", report.converged},
            {"final_objective", report.trajectory.back().objective},
            {"iterations", iterations},
            {"occurrences", occurrences},
            {"parameters", parameters_to_json(report.params)}};
}

inline void save_train_report(const TrainReport& report, const std::string& path) {
    detail::write_file(path, train_report_to_json(report).dump(2) + "\n");
}

// --- evaluation reports and exports -------------------------------------------

inline nlohmann::json metrics_to_json(const EvalMetrics& metrics) {
    nlohmann::json histogram = nlohmann::json::array();
    for (const auto& bin : metrics.histogram)
        histogram.push_back({bin.center, bin.count});
    auto summary = [](const FiveNumberSummary& s) {
        return nlohmann::json{
            {"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
    };
    return {{"method", metrics.dependence ? "method 2" : "method 1"},
            {"dependence", metrics.dependence},
            {"users", metrics.per_user_errors.size()},
            {"mae", metrics.mae},
            {"median", metrics.median},
            {"mode", metrics.mode},
            {"histogram", histogram},
            {"observed_summary", summary(metrics.observed_summary)},
            {"estimated_summary", summary(metrics.estimated_summary)}};
}

inline void save_metrics_report(std::span<const EvalMetrics> methods,
                                const std::string& path,
                                std::optional<double> mae_difference = std::nullopt) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& m : methods) rows.push_back(metrics_to_json(m));
    nlohmann::json j{{"methods", rows}};
    if (mae_difference) j["mae_difference"] = *mae_difference;
    detail::write_file(path, j.dump(2) + "\n");
}

/// One row per breakpoint; consecutive rows bound one linear segment.
inline void export_trace(const EngagementTrace& trace, const std::string& path) {
    if (trace.breakpoints.empty()) throw InputError("empty trace");
    std::string out = "time\tengagement\tsection\tbehavior\tslope_mean\tslope_variance\n";
    using detail::format_double;
    for (std::size_t i = 0; i < trace.breakpoints.size(); ++i) {
        const auto& bp = trace.breakpoints[i];
        const auto& slope =
            trace.section_slopes[std::min(i, trace.section_slopes.size() - 1)];
        out += format_double(bp.time) + "\t" + format_double(bp.engagement) + "\t" +
               std::to_string(slope.section.index) + "\t" +
               std::string(to_string(slope.section.target_behavior)) + "\t" +
               format_double(slope.effective.mean) + "\t" +
               format_double(slope.effective.variance) + "\n";
    }
    detail::write_file(path, out);
}

inline void export_histogram(const EvalMetrics& metrics, const std::string& path) {
    if (metrics.per_user_errors.empty()) throw InputError("metrics contain no users");
    std::string out = "bin_center\tcount\n";
    for (const auto& bin : metrics.histogram)
        out += detail::format_double(bin.center) + "\t" + std::to_string(bin.count) + "\n";
    detail::write_file(path, out);
}

/// Raw duration samples per series; input for violin/density plots.
inline void export_violin_data(const EvalMetrics& metrics, const std::string& path) {
    if (metrics.per_user_errors.empty()) throw InputError("metrics contain no users");
    std::string out = "series\tduration\n";
    for (const auto& e : metrics.per_user_errors)
        out += "observed\t" + detail::format_double(e.observed) + "\n";
    for (const auto& e : metrics.per_user_errors)
        out += "estimated\t" + detail::format_double(e.estimated) + "\n";
    detail::write_file(path, out);
}

// --- pretty printers ------------------------------------------------------------

/// Per-behavior table: mean / variance / frequency.
inline std::string format_parameter_table(
    const ParameterSet& params,
    const std::array<std::size_t, kBehaviorCount>* occurrences = nullptr) {
    std::string out = "behavior      mean         variance     frequency\n";
    for (Behavior b : kAllBehaviors) {
        char buf[128];
        if (occurrences) {
            std::snprintf(buf, sizeof buf, "%-12s  %11.4e  %11.4e  %9zu\n",
                          std::string(to_string(b)).c_str(), params[b].mean, params[b].variance,
                          (*occurrences)[static_cast<std::size_t>(b)]);
        } else {
            std::snprintf(buf, sizeof buf, "%-12s  %11.4e  %11.4e  %9s\n",
                          std::string(to_string(b)).c_str(), params[b].mean, params[b].variance,
                          "-");
        }
        out += buf;
    }
    return out;
}

inline std::string format_corpus_stats(const CorpusStats& stats) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "sessions: %zu\nusers: %zu\nmean group size: %.3f\n"
                  "durations [s]: min %.1f  q1 %.1f  median %.1f  q3 %.1f  max %.1f\n",
                  stats.n_sessions, stats.n_users, stats.mean_group_size,
                  stats.duration_summary.min, stats.duration_summary.q1,
                  stats.duration_summary.median, stats.duration_summary.q3,
                  stats.duration_summary.max);
    std::string out = buf;
    out += "occurrences:\n";
    for (Behavior b : kAllBehaviors) {
        std::snprintf(buf, sizeof buf, "  %-12s %zu\n", std::string(to_string(b)).c_str(),
                      stats.occurrences[static_cast<std::size_t>(b)]);
        out += buf;
    }
    return out;
}

} // namespace engage
