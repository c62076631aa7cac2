#pragma once

#include "flowplan/environment.hpp"
#include "flowplan/environment_io.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/solver.hpp"
#include "flowplan/step.hpp"
#include "flowplan/synthesis.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace flowplan {

/// File locations. Relative entries resolve against the config file's directory.
struct RunPaths {
    std::filesystem::path environment = "environment";
    std::filesystem::path ensemble;
    std::filesystem::path model = "model.bin";
    std::filesystem::path policy = "policy.bin";
    std::filesystem::path trajectories = "trajectories.csv";
    std::filesystem::path summary = "summary.json";
    std::filesystem::path bench = "bench.csv";
};

struct VerifySettings {
    int instances = 20;
    int scalar_ensembles = 10;
    std::uint64_t seed = 7;
};

struct BenchSettings {
    std::vector<std::array<int, 3>> sizes;  // nx, ny, nt
    std::vector<unsigned> threads;
    int n_realizations = 100;
};

/**
 * Everything a pipeline run needs. Keys mirror the member names; the JSON
 * files under configs/ are complete examples.
 */
struct RunConfig {
    GridSpec grid;
    DoubleGyreConfig double_gyre;
    RadiationConfig radiation;
    ObstacleConfig obstacles;
    ActionSpace actions;
    RewardConfig reward;
    Cell start;
    Cell target;
    SolverConfig solver;
    int subgrid_buffer = 1;
    int reduce_modes = -1;  // < 0: same as double_gyre.n_modes
    unsigned threads = 0;
    std::uint64_t seed = 1;
    RunPaths paths;
    VerifySettings verify;
    BenchSettings bench;

    Problem problem() const { return Problem{actions, reward, target}; }

    void validate() const {
        try {
            grid.validate();
            double_gyre.validate();
            radiation.validate();
            obstacles.validate();
            actions.validate();
            reward.validate();
            solver.validate();
        } catch (const ContractViolation& e) {
            throw ConfigError(e.what());
        }
        if (!grid.contains(start)) throw ConfigError("mission: start cell outside the grid");
        if (!grid.contains(target)) throw ConfigError("mission: target cell outside the grid");
        if (start == target) throw ConfigError("mission: start and target must differ");
        if (subgrid_buffer < 1) throw ConfigError("subgrid_buffer must be >= 1");
    }
};

namespace config_detail {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline Cell read_cell(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("cells are written as [i, j]");
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace config_detail

/// Parse a config document. `base` anchors relative paths.
inline RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = ".") {
    using config_detail::read;
    RunConfig c;
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        c.grid = env_io::grid_from_json(j.at("grid"));
        read(j, "seed", c.seed);
        read(j, "threads", c.threads);
        read(j, "subgrid_buffer", c.subgrid_buffer);

        c.double_gyre.grid = c.grid;
        c.double_gyre.rng_seed = c.seed;
        if (j.contains("double_gyre")) {
            const auto& d = j.at("double_gyre");
            read(d, "amplitude", c.double_gyre.amplitude);
            read(d, "eps", c.double_gyre.eps);
            read(d, "n_modes", c.double_gyre.n_modes);
            read(d, "n_realizations", c.double_gyre.n_realizations);
            read(d, "modulation", c.double_gyre.modulation);
            read(d, "period", c.double_gyre.period);
            read(d, "time_correlation", c.double_gyre.time_correlation);
        }
        if (j.contains("reduce")) read(j.at("reduce"), "n_modes", c.reduce_modes);

        c.radiation.grid = c.grid;
        if (j.contains("radiation")) {
            const auto& r = j.at("radiation");
            read(r, "base", c.radiation.base);
            read(r, "cloud_speed", c.radiation.cloud_speed);
            read(r, "cloud_width", c.radiation.cloud_width);
            read(r, "cloud_depth", c.radiation.cloud_depth);
            read(r, "cloud_start", c.radiation.cloud_start);
        }

        c.obstacles.grid = c.grid;
        if (j.contains("obstacles")) {
            const auto& o = j.at("obstacles");
            read(o, "side", c.obstacles.side);
            read(o, "entry_time", c.obstacles.entry_time);
            read(o, "speed", c.obstacles.speed);
            if (o.contains("initial_positions"))
                for (const auto& p : o.at("initial_positions")) {
                    if (!p.is_array() || p.size() != 2) throw ConfigError("obstacle positions are written as [x, y]");
                    c.obstacles.initial_positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                }
        }

        if (j.contains("actions")) {
            const auto& a = j.at("actions");
            read(a, "n_headings", c.actions.n_headings);
            read(a, "n_speeds", c.actions.n_speeds);
            read(a, "f_max", c.actions.f_max);
        }

        if (j.contains("reward")) {
            const auto& r = j.at("reward");
            if (r.contains("objective")) c.reward.objective = parse_objective(r.at("objective").get<std::string>());
            read(r, "c_f", c.reward.c_f);
            read(r, "c_r", c.reward.c_r);
            read(r, "r_term", c.reward.r_term);
            read(r, "r_outbound", c.reward.r_outbound);
        }

        const auto& mission = j.at("mission");
        c.start = config_detail::read_cell(mission.at("start"));
        c.target = config_detail::read_cell(mission.at("target"));

        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            read(s, "epsilon", c.solver.epsilon);
            read(s, "max_iterations", c.solver.max_iterations);
        }

        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            auto path = [&](const char* key, std::filesystem::path& out) {
                if (p.contains(key)) out = config_detail::resolve(base, p.at(key).get<std::string>());
                else if (!out.empty()) out = base / out;
            };
            path("environment", c.paths.environment);
            path("ensemble", c.paths.ensemble);
            path("model", c.paths.model);
            path("policy", c.paths.policy);
            path("trajectories", c.paths.trajectories);
            path("summary", c.paths.summary);
            path("bench", c.paths.bench);
        } else {
            for (auto* p : {&c.paths.environment, &c.paths.model, &c.paths.policy, &c.paths.trajectories,
                            &c.paths.summary, &c.paths.bench})
                *p = base / *p;
        }

        if (j.contains("verify")) {
            const auto& v = j.at("verify");
            read(v, "instances", c.verify.instances);
            read(v, "scalar_ensembles", c.verify.scalar_ensembles);
            read(v, "seed", c.verify.seed);
        }

        if (j.contains("bench")) {
            const auto& b = j.at("bench");
            if (b.contains("sizes"))
                for (const auto& s : b.at("sizes")) c.bench.sizes.push_back(s.get<std::array<int, 3>>());
            read(b, "threads", c.bench.threads);
            read(b, "n_realizations", c.bench.n_realizations);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// Synthetic environment described by the config's generator sections.
inline Environment synthesize_environment(const RunConfig& c) {
    Environment env;
    env.grid = c.grid;
    env.velocity = generate_double_gyre(c.double_gyre);
    env.scalar = generate_radiation(c.radiation);
    env.mask = generate_obstacles(c.obstacles);
    return env;
}

} // namespace flowplan
