#pragma once

#include "flowplan/binary_io.hpp"
#include "flowplan/environment.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/synthesis.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace flowplan {

/**
 * Environment container: a directory holding manifest.json and five raw
 * little-endian blobs.
 *
 *   mean.bin    float32 [t][y][x][component]
 *   modes.bin   float32 [m][t][y][x][component]
 *   coeffs.bin  float32 [t][r][m]
 *   scalar.bin  float32 [t][y][x]
 *   mask.bin    uint8   [t][y][x]  (1 = restricted)
 */
namespace env_io {

inline constexpr int kFormatVersion = 1;

inline nlohmann::json grid_to_json(const GridSpec& g) {
    return {{"nx", g.nx}, {"ny", g.ny}, {"nt", g.nt}, {"dx", g.dx}, {"dt", g.dt},
            {"origin", {g.origin.x, g.origin.y}}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    try {
        GridSpec g;
        g.nx = j.at("nx").get<int>();
        g.ny = j.at("ny").get<int>();
        g.nt = j.at("nt").get<int>();
        g.dx = j.at("dx").get<double>();
        g.dt = j.at("dt").get<double>();
        if (j.contains("origin")) g.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
        g.validate();
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
}

inline void write_manifest(const std::filesystem::path& dir, const Environment& env) {
    nlohmann::json m;
    m["format"] = "flowplan-environment";
    m["version"] = kFormatVersion;
    m["endianness"] = "little";
    m["grid"] = grid_to_json(env.grid);
    m["n_modes"] = env.velocity.n_modes;
    m["n_realizations"] = env.velocity.n_realizations;
    m["files"] = {{"mean", "mean.bin"}, {"modes", "modes.bin"}, {"coeffs", "coeffs.bin"},
                  {"scalar", "scalar.bin"}, {"mask", "mask.bin"}};
    m["dtypes"] = {{"mean", "float32"}, {"modes", "float32"}, {"coeffs", "float32"},
                   {"scalar", "float32"}, {"mask", "uint8"}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
    out << m.dump(2) << '\n';
}

} // namespace env_io

inline void write_environment(const std::filesystem::path& dir, const Environment& env) {
    env.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    env_io::write_manifest(dir, env);
    io::write_f32(dir / "mean.bin", env.velocity.mean);
    io::write_f32(dir / "modes.bin", env.velocity.modes);
    io::write_f32(dir / "coeffs.bin", env.velocity.coeffs);
    io::write_f32(dir / "scalar.bin", env.scalar.values);
    io::Writer mask(dir / "mask.bin");
    mask.put_all<std::uint8_t>(env.mask.cells);
    mask.close();
}

inline Environment read_environment(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open '" + manifest_path.string() + "'");
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (m.value("format", "") != "flowplan-environment" || m.value("version", 0) != env_io::kFormatVersion)
        throw IoError("'" + manifest_path.string() + "' is not a version-1 flowplan environment");
    if (m.value("endianness", "") != "little") throw IoError("unsupported endianness in manifest");

    Environment env;
    try {
        env.grid = env_io::grid_from_json(m.at("grid"));
        const auto files = m.at("files");
        env.velocity = DOVelocityField(env.grid, m.at("n_modes").get<int>(), m.at("n_realizations").get<int>());
        env.velocity.mean = io::read_f32(dir / files.at("mean").get<std::string>(), env.velocity.mean.size());
        env.velocity.modes = io::read_f32(dir / files.at("modes").get<std::string>(), env.velocity.modes.size());
        env.velocity.coeffs = io::read_f32(dir / files.at("coeffs").get<std::string>(), env.velocity.coeffs.size());
        env.scalar = ScalarMeanField(env.grid);
        env.scalar.values = io::read_f32(dir / files.at("scalar").get<std::string>(), env.scalar.values.size());
        env.mask = ObstacleMask(env.grid);
        {
            const auto path = dir / files.at("mask").get<std::string>();
            io::Reader r(path);
            env.mask.cells = r.get_all<std::uint8_t>(env.grid.n_states());
            if (!r.at_end()) throw IoError("'" + path.string() + "' is longer than expected");
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest '" + manifest_path.string() + "': " + e.what());
    } catch (const ConfigError& e) {
        throw IoError("manifest '" + manifest_path.string() + "': " + e.what());
    }
    env.validate();
    return env;
}

/// Raw ensemble file: float32 little-endian [r][t][y][x][component].
inline void write_ensemble(const std::filesystem::path& path, const VelocityEnsemble& ens) {
    io::write_f32(path, ens.data);
}

inline VelocityEnsemble read_ensemble(const std::filesystem::path& path, const GridSpec& grid, int n_realizations) {
    require(n_realizations >= 1, "read_ensemble: n_realizations must be >= 1");
    VelocityEnsemble ens{grid, n_realizations, {}};
    ens.data = io::read_f32(path, 2 * grid.n_states() * static_cast<std::size_t>(n_realizations));
    return ens;
}

} // namespace flowplan
