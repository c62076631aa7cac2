#pragma once

#include "flowplan/environment.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/parallel.hpp"
#include "flowplan/step.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace flowplan {

enum class TerminalStatus { reached_target, outbound, horizon };

inline std::string_view to_string(TerminalStatus s) {
    switch (s) {
    case TerminalStatus::reached_target: return "reached_target";
    case TerminalStatus::outbound: return "outbound";
    case TerminalStatus::horizon: return "horizon";
    }
    return "?";
}

struct TrajectoryStep {
    int t = 0;
    Cell cell;          // departure cell; its center is the recorded position
    int action = 0;
    double reward = 0.0;
    double cum_reward = 0.0;
    StepOutcome outcome = StepOutcome::moved;
    Vec2 landing{};     // continuous landing point (before snapping)
};

struct Trajectory {
    int realization = 0;
    std::vector<TrajectoryStep> steps;
    TerminalStatus status = TerminalStatus::horizon;
    double cumulative_reward = 0.0;
    /// Time index at which the target was entered; -1 if never.
    int arrival_t = -1;
    /// Mission metrics: energy spent (c_f F^2 dt summed) and net energy
    /// (spent minus harvested, c_r (g(s) + g(s')) / 2 dt).
    double energy = 0.0;
    double net_energy = 0.0;
};

/**
 * Follow `policy` in realization r from `start` at t = 0 until the target is
 * entered, the agent is absorbed (domain exit, obstacle, horizon), or the
 * horizon runs out. Uses the same step routine as the model builder.
 */
inline Trajectory simulate_trajectory(const Environment& env, const Problem& prob, std::span<const std::uint16_t> policy,
                                      int r, Cell start) {
    const GridSpec& grid = env.grid;
    require(policy.size() == grid.n_states(), "simulate_trajectory: policy has the wrong length");
    require(grid.contains(start), "simulate_trajectory: start outside the grid");
    require(r >= 0 && r < env.velocity.n_realizations, "simulate_trajectory: realization out of range");

    Trajectory traj;
    traj.realization = r;
    Cell cell = start;
    for (int t = 0; t < grid.nt; ++t) {
        const StateId s = grid.state(cell, t);
        const int a = policy[s];
        const Action action = prob.actions[a];
        const StepResult res = step(env, prob, cell, t, reconstruct_velocity(env.velocity, s, r), action);
        traj.cumulative_reward += res.reward;
        traj.steps.push_back({t, cell, a, res.reward, traj.cumulative_reward, res.outcome, res.landing});

        if (res.outcome != StepOutcome::from_terminal && res.outcome != StepOutcome::from_obstacle) {
            const double spent = prob.reward.c_f * action.speed * action.speed * grid.dt;
            const double g_next = res.landing_cell ? env.scalar.at(*res.landing_cell, t + 1) : 0.0;
            traj.energy += spent;
            traj.net_energy += spent - 0.5 * prob.reward.c_r * (env.scalar.at(cell, t) + g_next) * grid.dt;
        }

        switch (res.outcome) {
        case StepOutcome::moved:
            cell = *res.landing_cell;
            continue;
        case StepOutcome::reached_target:
            traj.status = TerminalStatus::reached_target;
            traj.arrival_t = t + 1;
            return traj;
        case StepOutcome::from_terminal:
            traj.status = TerminalStatus::reached_target;
            traj.arrival_t = t;
            return traj;
        case StepOutcome::horizon:
            traj.status = TerminalStatus::horizon;
            return traj;
        default:
            traj.status = TerminalStatus::outbound;
            return traj;
        }
    }
    traj.status = TerminalStatus::horizon;
    return traj;
}

struct EnsembleSummary {
    std::size_t n = 0;
    double mean_reward = 0.0;
    double std_reward = 0.0;
    double standard_error = 0.0;
    /// 5, 25, 50, 75, 95 percent quantiles of the cumulative reward.
    std::vector<double> reward_quantiles;
    std::size_t reached = 0;
    std::size_t outbound = 0;
    std::size_t horizon = 0;
    double mean_arrival_time = 0.0;  // over reached trajectories, time units
    std::vector<double> arrival_time_quantiles;
    double mean_energy = 0.0;
    double mean_net_energy = 0.0;
};

struct TrajectoryEnsemble {
    std::vector<Trajectory> trajectories;
    EnsembleSummary summary;
};

namespace detail {

// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return std::nan("");
    const double pos = q * (v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

} // namespace detail

inline EnsembleSummary summarize(const std::vector<Trajectory>& trajs, double dt) {
    EnsembleSummary s;
    s.n = trajs.size();
    if (trajs.empty()) return s;
    std::vector<double> rewards, arrivals;
    for (const auto& tr : trajs) {
        rewards.push_back(tr.cumulative_reward);
        s.mean_energy += tr.energy;
        s.mean_net_energy += tr.net_energy;
        switch (tr.status) {
        case TerminalStatus::reached_target:
            ++s.reached;
            arrivals.push_back(tr.arrival_t * dt);
            break;
        case TerminalStatus::outbound: ++s.outbound; break;
        case TerminalStatus::horizon: ++s.horizon; break;
        }
    }
    const double n = static_cast<double>(s.n);
    for (double r : rewards) s.mean_reward += r;
    s.mean_reward /= n;
    s.mean_energy /= n;
    s.mean_net_energy /= n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double r : rewards) ss += (r - s.mean_reward) * (r - s.mean_reward);
        s.std_reward = std::sqrt(ss / (n - 1.0));
        s.standard_error = s.std_reward / std::sqrt(n);
    }
    std::sort(rewards.begin(), rewards.end());
    std::sort(arrivals.begin(), arrivals.end());
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        s.reward_quantiles.push_back(detail::quantile_sorted(rewards, q));
        if (!arrivals.empty()) s.arrival_time_quantiles.push_back(detail::quantile_sorted(arrivals, q));
    }
    if (!arrivals.empty()) {
        for (double a : arrivals) s.mean_arrival_time += a;
        s.mean_arrival_time /= static_cast<double>(arrivals.size());
    }
    return s;
}

/// Every realization in parallel; trajectories are stored in realization order.
inline TrajectoryEnsemble ensemble_rollout(const Environment& env, const Problem& prob,
                                           std::span<const std::uint16_t> policy, Cell start, unsigned threads = 0) {
    TrajectoryEnsemble out;
    out.trajectories.resize(static_cast<std::size_t>(env.velocity.n_realizations));
    parallel_for(out.trajectories.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r)
            out.trajectories[r] = simulate_trajectory(env, prob, policy, static_cast<int>(r), start);
    });
    out.summary = summarize(out.trajectories, env.grid.dt);
    return out;
}

} // namespace flowplan
