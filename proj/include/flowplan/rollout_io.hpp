#pragma once

#include "flowplan/errors.hpp"
#include "flowplan/rollout.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace flowplan {

/**
 * One row per step: the departure cell center, the action taken, its reward
 * and the step outcome. Each trajectory ends with a row holding the final
 * landing point, action -1, reward 0 and the terminal status.
 */
inline void write_trajectories_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens,
                                   const GridSpec& grid) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "realization,step,t,x,y,action,reward,cum_reward,status\n";
    char line[256];
    for (const auto& tr : ens.trajectories) {
        int k = 0;
        for (const auto& st : tr.steps) {
            const Vec2 p = grid.center(st.cell);
            std::snprintf(line, sizeof line, "%d,%d,%d,%.9g,%.9g,%d,%.9g,%.9g,%s\n", tr.realization, k, st.t, p.x,
                          p.y, st.action, st.reward, st.cum_reward, std::string(to_string(st.outcome)).c_str());
            out << line;
            ++k;
        }
        if (!tr.steps.empty()) {
            const auto& last = tr.steps.back();
            std::snprintf(line, sizeof line, "%d,%d,%d,%.9g,%.9g,-1,0,%.9g,%s\n", tr.realization, k, last.t + 1,
                          last.landing.x, last.landing.y, tr.cumulative_reward,
                          std::string(to_string(tr.status)).c_str());
            out << line;
        }
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline nlohmann::json summary_to_json(const EnsembleSummary& s) {
    return {{"n_trajectories", s.n},
            {"mean_cumulative_reward", s.mean_reward},
            {"std_cumulative_reward", s.std_reward},
            {"standard_error", s.standard_error},
            {"cumulative_reward_quantiles", {{"q05", s.reward_quantiles.at(0)}, {"q25", s.reward_quantiles.at(1)},
                                             {"q50", s.reward_quantiles.at(2)}, {"q75", s.reward_quantiles.at(3)},
                                             {"q95", s.reward_quantiles.at(4)}}},
            {"status_counts", {{"reached_target", s.reached}, {"outbound", s.outbound}, {"horizon", s.horizon}}},
            {"mean_arrival_time", s.mean_arrival_time},
            {"arrival_time_quantiles", s.arrival_time_quantiles},
            {"mean_energy", s.mean_energy},
            {"mean_net_energy", s.mean_net_energy}};
}

inline void write_summary(const std::filesystem::path& path, const nlohmann::json& summary) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << summary.dump(2) << '\n';
}

} // namespace flowplan
