#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "engage/engine.hpp"
#include "engage/rng.hpp"
#include "engage/timeline.hpp"

namespace engage {

struct TrainConfig {
    int max_iterations = 150;
    double gradient_step = 1e-4;         // central-difference half-step, per coordinate
    double convergence_tolerance = 1e-6; // stop once an accepted step improves less
    double mean_lower = -1.0;
    double mean_upper = 1.0;
    double log_variance_lower = std::log(1e-8);
    double log_variance_upper = std::log(10.0);
    bool dependence_enabled = true;      // false trains the all-independent model
    std::uint64_t seed = 0;              // reserved for stochastic restarts

    void validate() const {
        if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
        if (!(gradient_step > 0.0)) throw InputError("gradient_step must be positive");
        if (!(convergence_tolerance > 0.0))
            throw InputError("convergence_tolerance must be positive");
        if (!(mean_lower < mean_upper) || !(log_variance_lower < log_variance_upper))
            throw InputError("parameter bounds must be well-ordered");
    }
};

struct IterationStat {
    int iteration = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
};

struct TrainReport {
    ParameterSet params;
    std::vector<IterationStat> trajectory; // objective is non-increasing
    std::array<std::size_t, kBehaviorCount> occurrences{};
    bool converged = false;
};

namespace detail {

/// Pre-segmented user, so repeated likelihood evaluations skip segmentation.
struct TrainingCase {
    std::string session_id;
    std::string user_id;
    double observed = 0.0;
    std::vector<Section> sections;
};

inline std::vector<TrainingCase> build_cases(std::span<const InteractionSession> dataset) {
    std::vector<TrainingCase> cases;
    for (const auto& session : dataset) {
        for (const auto& user : session.users) {
            if (!(user.observed_duration > 0.0))
                throw InputError("user " + user.user_id + " in session '" +
                                 session.session_id + "' has non-positive observed duration");
            cases.push_back({session.session_id, user.user_id, user.observed_duration,
                             segment(session, user.user_id)});
        }
    }
    return cases;
}

inline double nll_term(const TrainingCase& c, const ParameterSet& params, bool dependence) {
    const double estimated = duration_from_sections(c.sections, params, dependence).duration;
    const double sigma = params.alpha() * c.observed;
    const double residual = estimated - c.observed;
    return residual * residual / (2.0 * sigma * sigma) + std::log(sigma) +
           0.5 * std::log(2.0 * std::numbers::pi);
}

/// Fixed summation order (session order, then user order) for bit-stable results.
inline double nll_over_cases(std::span<const TrainingCase> cases, const ParameterSet& params,
                             bool dependence) {
    double total = 0.0;
    for (const auto& c : cases) total += nll_term(c, params, dependence);
    return total;
}

// 16-dimensional parameter vector: 8 means followed by 8 log-variances.
// Variances are optimized in log-space, which keeps them positive without
// constrained steps.
inline constexpr std::size_t kDim = 2 * kBehaviorCount;

inline std::array<double, kDim> pack(const ParameterSet& p) {
    std::array<double, kDim> x{};
    for (std::size_t i = 0; i < kBehaviorCount; ++i) {
        x[i] = p.per_behavior()[i].mean;
        x[kBehaviorCount + i] = std::log(p.per_behavior()[i].variance);
    }
    return x;
}

inline ParameterSet unpack(const std::array<double, kDim>& x, const ParameterSet& like) {
    std::array<GaussianParams, kBehaviorCount> g{};
    for (std::size_t i = 0; i < kBehaviorCount; ++i)
        g[i] = GaussianParams{x[i], std::exp(x[kBehaviorCount + i])};
    return ParameterSet(g, like.alpha(), like.t_max());
}

inline void clamp_into_bounds(std::array<double, kDim>& x, const TrainConfig& config) {
    for (std::size_t i = 0; i < kBehaviorCount; ++i)
        x[i] = std::clamp(x[i], config.mean_lower, config.mean_upper);
    for (std::size_t i = kBehaviorCount; i < kDim; ++i)
        x[i] = std::clamp(x[i], config.log_variance_lower, config.log_variance_upper);
}

inline double dot(const std::array<double, kDim>& a, const std::array<double, kDim>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const std::array<double, kDim>& a) { return std::sqrt(dot(a, a)); }

struct InverseHessian {
    // Dense symmetric kDim x kDim approximation, row-major.
    std::array<double, kDim * kDim> h{};

    void reset() {
        h.fill(0.0);
        for (std::size_t i = 0; i < kDim; ++i) h[i * kDim + i] = 1.0;
    }

    std::array<double, kDim> apply(const std::array<double, kDim>& v) const {
        std::array<double, kDim> out{};
        for (std::size_t i = 0; i < kDim; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < kDim; ++j) s += h[i * kDim + j] * v[j];
            out[i] = s;
        }
        return out;
    }

    /// BFGS update from the step s and gradient difference y:
    /// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, rho = 1/(s.y).
    void update(const std::array<double, kDim>& s, const std::array<double, kDim>& y) {
        const double sy = dot(s, y);
        if (!(sy > 1e-12 * norm(s) * norm(y))) return; // curvature too weak, keep H
        const double rho = 1.0 / sy;
        const std::array<double, kDim> hy = apply(y);
        const double yhy = dot(y, hy);
        for (std::size_t i = 0; i < kDim; ++i) {
            for (std::size_t j = 0; j < kDim; ++j) {
                h[i * kDim + j] += (1.0 + rho * yhy) * rho * s[i] * s[j] -
                                   rho * (s[i] * hy[j] + hy[i] * s[j]);
            }
        }
    }
};

} // namespace detail

/// Negative log of the duration likelihood: each user contributes a Gaussian
/// residual between the estimated and observed duration whose scale grows
/// with the observed duration (sigma = alpha * t_obs).
inline double negative_log_likelihood(std::span<const InteractionSession> dataset,
                                      const ParameterSet& params, bool dependence_enabled) {
    const auto cases = detail::build_cases(dataset);
    return detail::nll_over_cases(cases, params, dependence_enabled);
}

using TrainCallback = std::function<void(const IterationStat&)>;

/// Maximum-likelihood fit of the 16 distribution parameters (8 means, 8
/// log-variances) with a BFGS quasi-Newton loop: central-difference
/// gradients, backtracking line search that only accepts a decrease, and box
/// bounds enforced by projection. alpha and t_max stay fixed. Returns the
/// best parameters seen.
inline TrainReport train(std::span<const InteractionSession> dataset,
                         const ParameterSet& init, const TrainConfig& config = {},
                         const TrainCallback& on_iteration = {}) {
    using namespace detail;
    config.validate();
    if (dataset.empty()) throw InputError("training dataset is empty");

    const auto cases = build_cases(dataset);
    const bool dep = config.dependence_enabled;

    auto objective = [&](const std::array<double, kDim>& x) {
        return nll_over_cases(cases, unpack(x, init), dep);
    };

    std::array<double, kDim> x = pack(init);
    clamp_into_bounds(x, config);
    double f = objective(x);
    if (!std::isfinite(f)) {
        const ParameterSet p = unpack(x, init);
        for (const auto& c : cases) {
            if (!std::isfinite(nll_term(c, p, dep)))
                throw NumericError("non-finite objective at init for user " + c.user_id +
                                   " in session '" + c.session_id + "'");
        }
        throw NumericError("non-finite objective at init");
    }

    auto fd_gradient = [&](const std::array<double, kDim>& at) {
        std::array<double, kDim> g{};
        std::array<double, kDim> probe = at;
        for (std::size_t i = 0; i < kDim; ++i) {
            const double h = config.gradient_step * std::max(std::abs(at[i]), 1.0);
            probe[i] = at[i] + h;
            const double fp = objective(probe);
            probe[i] = at[i] - h;
            const double fm = objective(probe);
            probe[i] = at[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    };

    std::array<double, kDim> grad = fd_gradient(x);

    TrainReport report{init, {}, behavior_occurrences(dataset), false};
    report.trajectory.push_back({0, f, norm(grad), 0.0});
    if (on_iteration) on_iteration(report.trajectory.back());

    std::array<double, kDim> best_x = x;
    double best_f = f;

    InverseHessian hess;
    hess.reset();

    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 40;

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        std::array<double, kDim> direction = hess.apply(grad);
        for (double& d : direction) d = -d;
        if (dot(grad, direction) >= 0.0) { // not a descent direction, restart
            hess.reset();
            for (std::size_t i = 0; i < kDim; ++i) direction[i] = -grad[i];
        }

        double step = 1.0;
        std::array<double, kDim> x_new{};
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            for (std::size_t i = 0; i < kDim; ++i) x_new[i] = x[i] + step * direction[i];
            clamp_into_bounds(x_new, config);
            f_new = objective(x_new);
            if (std::isfinite(f_new)) {
                std::array<double, kDim> moved{};
                for (std::size_t i = 0; i < kDim; ++i) moved[i] = x_new[i] - x[i];
                const double slope = dot(grad, moved);
                if (f_new <= f + kArmijo * std::min(slope, 0.0) && f_new < f) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) {
            report.converged = true; // no decrease found at line-search resolution
            break;
        }

        const std::array<double, kDim> grad_new = fd_gradient(x_new);
        std::array<double, kDim> s{};
        std::array<double, kDim> y{};
        for (std::size_t i = 0; i < kDim; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = grad_new[i] - grad[i];
        }
        hess.update(s, y);

        const double decrease = f - f_new;
        x = x_new;
        f = f_new;
        grad = grad_new;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        report.trajectory.push_back({iter, f, norm(grad), step});
        if (on_iteration) on_iteration(report.trajectory.back());
        if (decrease < config.convergence_tolerance) {
            report.converged = true;
            break;
        }
    }

    report.params = unpack(best_x, init);
    return report;
}

struct DatasetSplit {
    std::vector<InteractionSession> train;
    std::vector<InteractionSession> validation;
    double train_user_fraction = 0.0; // achieved, user-level
};

/// Splits whole sessions (never individual users, so co-present users stay
/// on one side) with a seeded shuffle.
inline DatasetSplit split_dataset(std::span<const InteractionSession> sessions,
                                  double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InputError("train_fraction must be in (0, 1)");
    if (sessions.size() < 2) throw InputError("too few sessions to split");

    std::vector<std::size_t> order(sessions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng::Engine gen(seed);
    rng::shuffle(gen, std::span(order));

    const auto n = sessions.size();
    std::size_t k = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n - 1);

    DatasetSplit split;
    std::size_t train_users = 0;
    std::size_t total_users = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = sessions[order[i]];
        total_users += s.users.size();
        if (i < k) {
            split.train.push_back(s);
            train_users += s.users.size();
        } else {
            split.validation.push_back(s);
        }
    }
    split.train_user_fraction =
        static_cast<double>(train_users) / static_cast<double>(total_users);
    return split;
}

} // namespace engage
