#pragma once

#include "flowplan/environment.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/grid.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace flowplan {

enum class Objective { time, energy, net_energy };

inline std::string_view to_string(Objective o) {
    switch (o) {
    case Objective::time: return "time";
    case Objective::energy: return "energy";
    case Objective::net_energy: return "net_energy";
    }
    return "?";
}

inline Objective parse_objective(std::string_view name) {
    if (name == "time") return Objective::time;
    if (name == "energy") return Objective::energy;
    if (name == "net_energy") return Objective::net_energy;
    throw ConfigError("unknown objective '" + std::string(name) + "' (expected time, energy or net_energy)");
}

/// Reward structure: per-step objective reward, +r_term on entering the
/// target, r_outbound for leaving the domain, obstacles and the horizon.
struct RewardConfig {
    Objective objective = Objective::time;
    double c_f = 1.0;
    double c_r = 1.0;
    double r_term = 100.0;
    double r_outbound = -1000.0;

    void validate() const {
        if (!(r_term > 0.0)) throw ContractViolation("reward: r_term must be positive");
        if (!(r_outbound < 0.0)) throw ContractViolation("reward: r_outbound must be negative");
    }
};

/// What the agent is asked to do in an environment.
struct Problem {
    ActionSpace actions;
    RewardConfig reward;
    Cell target;

    void validate(const GridSpec& grid) const {
        actions.validate();
        reward.validate();
        require(grid.contains(target), "problem: target cell outside the grid");
    }
};

enum class StepOutcome {
    moved,             // landed in a regular cell at t+1
    reached_target,    // landed in the target cell at t+1
    from_terminal,     // source is the target cell: absorbed, reward 0
    from_obstacle,     // source is a restricted cell: absorbed, r_outbound
    left_domain,       // landing point outside the spatial domain
    horizon,           // t + 1 == nt
    landed_on_obstacle,
    crossed_obstacle,  // transit segment passes through a restricted cell at t
};

inline std::string_view to_string(StepOutcome o) {
    switch (o) {
    case StepOutcome::moved: return "moved";
    case StepOutcome::reached_target: return "reached_target";
    case StepOutcome::from_terminal: return "from_terminal";
    case StepOutcome::from_obstacle: return "from_obstacle";
    case StepOutcome::left_domain: return "left_domain";
    case StepOutcome::horizon: return "horizon";
    case StepOutcome::landed_on_obstacle: return "landed_on_obstacle";
    case StepOutcome::crossed_obstacle: return "crossed_obstacle";
    }
    return "?";
}

inline bool hits_obstacle(StepOutcome o) {
    return o == StepOutcome::landed_on_obstacle || o == StepOutcome::crossed_obstacle;
}

struct StepResult {
    StepOutcome outcome = StepOutcome::moved;
    /// Successor state at t+1, or the grid's sink.
    StateId next = 0;
    /// Landing cell when the successor is a grid state.
    std::optional<Cell> landing_cell;
    double reward = 0.0;
    Vec2 landing{};

    bool absorbed() const {
        return outcome != StepOutcome::moved && outcome != StepOutcome::reached_target;
    }
};

/// Objective part of R(s, a, s') before terminal/outbound adjustments.
/// `g_next` is the mean scalar at the successor (0 when it is Outside).
inline double objective_reward(const RewardConfig& rc, double speed, double dt, double g_here, double g_next) {
    switch (rc.objective) {
    case Objective::time: return -dt;
    case Objective::energy: return -rc.c_f * speed * speed * dt;
    case Objective::net_energy:
        return (-rc.c_f * speed * speed + 0.5 * rc.c_r * g_here + 0.5 * rc.c_r * g_next) * dt;
    }
    return 0.0;
}

/**
 * One kinematic transition from the center of `source` at layer t under flow
 * `flow` and action `action`. The model builder, the dense oracle and the
 * rollout all go through this routine, so they agree on every successor.
 * `bounds`, when given, only short-cuts the transit check; the result is the
 * same with or without it.
 */
inline StepResult step(const Environment& env, const Problem& prob, Cell source, int t, Vec2 flow,
                       const Action& action, const MaskBounds* bounds = nullptr) {
    const GridSpec& grid = env.grid;
    StepResult out;
    out.next = grid.sink();

    if (source == prob.target) {
        out.outcome = StepOutcome::from_terminal;
        out.reward = 0.0;
        return out;
    }
    require(grid.contains(source) && t >= 0 && t < grid.nt, "step: source out of range");
    if (env.mask.cells[grid.flat(source, t)]) {
        out.outcome = StepOutcome::from_obstacle;
        out.reward = prob.reward.r_outbound;
        return out;
    }

    const Vec2 start = grid.center(source);
    const Vec2 landing{start.x + (flow.x + action.velocity.x) * grid.dt,
                       start.y + (flow.y + action.velocity.y) * grid.dt};
    out.landing = landing;

    const std::optional<Cell> cell = grid.locate(landing);
    const int t_next = t + 1;
    const double g_here = env.scalar.values[grid.flat(source, t)];
    const double g_next = (cell && t_next < grid.nt) ? env.scalar.values[grid.flat(*cell, t_next)] : 0.0;
    double reward = objective_reward(prob.reward, action.speed, grid.dt, g_here, g_next);

    if (!cell) {
        out.outcome = StepOutcome::left_domain;
    } else if (t_next >= grid.nt) {
        out.outcome = StepOutcome::horizon;
    } else if (env.mask.cells[grid.flat(*cell, t_next)]) {
        out.outcome = StepOutcome::landed_on_obstacle;
    } else if ((!bounds || bounds->may_touch(t, start, landing)) &&
               segment_blocked(env.mask, grid, start, landing, t)) {
        out.outcome = StepOutcome::crossed_obstacle;
    } else {
        out.landing_cell = cell;
        out.next = grid.flat(*cell, t_next);
        if (*cell == prob.target) {
            out.outcome = StepOutcome::reached_target;
            reward += prob.reward.r_term;
        } else {
            out.outcome = StepOutcome::moved;
        }
        out.reward = reward;
        return out;
    }
    out.reward = prob.reward.r_outbound;
    return out;
}

} // namespace flowplan
