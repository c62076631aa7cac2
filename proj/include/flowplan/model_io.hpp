#pragma once

#include "flowplan/binary_io.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/model_builder.hpp"
#include "flowplan/solver.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flowplan {

/**
 * Model file, all little-endian:
 *
 *   char[4]  "FPMD"
 *   u32      version (1)
 *   u32      n_states   (N_g + 1, sink last)
 *   u32      n_actions
 *   u32      nt
 *   u64      nnz_total
 *   u64      offsets[n_actions * nt + 1]   entry offset of block a * nt + t
 *   per block: u32 rows[nnz_b], u32 cols[nnz_b], f32 vals[nnz_b]
 *   f32      rewards[n_actions * N_g]      index a * N_g + s
 */
inline constexpr std::array<char, 4> kModelMagic{'F', 'P', 'M', 'D'};
inline constexpr std::array<char, 4> kPolicyMagic{'F', 'P', 'P', 'L'};
inline constexpr std::uint32_t kBinaryVersion = 1;

inline void write_model(const std::filesystem::path& path, const SparseModel& model) {
    io::Writer w(path);
    w.put_bytes(kModelMagic.data(), kModelMagic.size());
    w.put<std::uint32_t>(kBinaryVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.n_states()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.n_actions));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.nt()));
    w.put<std::uint64_t>(model.nnz());
    std::uint64_t off = 0;
    for (const auto& b : model.blocks) {
        w.put<std::uint64_t>(off);
        off += b.nnz();
    }
    w.put<std::uint64_t>(off);
    for (const auto& b : model.blocks) {
        w.put_all<std::uint32_t>(b.rows);
        w.put_all<std::uint32_t>(b.cols);
        const std::vector<float> vals(b.vals.begin(), b.vals.end());
        w.put_all<float>(vals);
    }
    const std::vector<float> rewards(model.rewards.begin(), model.rewards.end());
    w.put_all<float>(rewards);
    w.close();
}

/// Reads a model file. Without `grid` the spatial layer is treated as a
/// single row of N_g / nt cells, which is all the solver needs.
inline SparseModel read_model(const std::filesystem::path& path, std::optional<GridSpec> grid = std::nullopt) {
    io::Reader r(path);
    std::array<char, 4> magic{};
    r.get_bytes(magic.data(), magic.size());
    if (magic != kModelMagic) throw IoError("'" + path.string() + "' is not a model file (bad magic)");
    if (r.get<std::uint32_t>() != kBinaryVersion) throw IoError("'" + path.string() + "': unsupported model version");
    const auto n_states = r.get<std::uint32_t>();
    const auto n_actions = r.get<std::uint32_t>();
    const auto nt = r.get<std::uint32_t>();
    const auto nnz_total = r.get<std::uint64_t>();
    if (n_states < 2 || nt < 1 || n_actions < 1 || (n_states - 1) % nt != 0)
        throw IoError("'" + path.string() + "': inconsistent header");
    const std::uint32_t n_grid = n_states - 1;

    SparseModel model;
    if (grid) {
        if (grid->n_states() != n_grid || grid->nt != static_cast<int>(nt))
            throw IoError("'" + path.string() + "': model does not match the environment grid");
        model.grid = *grid;
    } else {
        model.grid = GridSpec{static_cast<int>(n_grid / nt), 1, static_cast<int>(nt), 1.0, 1.0, {}};
    }
    model.n_actions = static_cast<int>(n_actions);
    const std::size_t n_blocks = static_cast<std::size_t>(n_actions) * nt;
    const auto offsets = r.get_all<std::uint64_t>(n_blocks + 1);
    if (offsets.front() != 0 || offsets.back() != nnz_total)
        throw IoError("'" + path.string() + "': block offsets disagree with nnz_total");
    model.blocks.resize(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        if (offsets[b + 1] < offsets[b]) throw IoError("'" + path.string() + "': block offsets not monotone");
        const std::size_t n = offsets[b + 1] - offsets[b];
        auto& blk = model.blocks[b];
        blk.rows = r.get_all<std::uint32_t>(n);
        blk.cols = r.get_all<std::uint32_t>(n);
        const auto vals = r.get_all<float>(n);
        blk.vals.assign(vals.begin(), vals.end());
    }
    const auto rewards = r.get_all<float>(static_cast<std::size_t>(n_actions) * n_grid);
    model.rewards.assign(rewards.begin(), rewards.end());
    if (!r.at_end()) throw IoError("'" + path.string() + "': trailing bytes after rewards");
    return model;
}

/**
 * Policy file, little-endian:
 *
 *   char[4]  "FPPL"
 *   u32      version (1)
 *   u32      n_states   (N_g + 1)
 *   f32      values[n_states]
 *   u16      actions[n_states - 1]
 */
inline void write_policy(const std::filesystem::path& path, const PolicyValue& pv) {
    require(!pv.values.empty() && pv.actions.size() + 1 == pv.values.size(),
            "write_policy: values/actions lengths disagree");
    io::Writer w(path);
    w.put_bytes(kPolicyMagic.data(), kPolicyMagic.size());
    w.put<std::uint32_t>(kBinaryVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(pv.values.size()));
    const std::vector<float> values(pv.values.begin(), pv.values.end());
    w.put_all<float>(values);
    w.put_all<std::uint16_t>(pv.actions);
    w.close();
}

inline PolicyValue read_policy(const std::filesystem::path& path) {
    io::Reader r(path);
    std::array<char, 4> magic{};
    r.get_bytes(magic.data(), magic.size());
    if (magic != kPolicyMagic) throw IoError("'" + path.string() + "' is not a policy file (bad magic)");
    if (r.get<std::uint32_t>() != kBinaryVersion) throw IoError("'" + path.string() + "': unsupported policy version");
    const auto n_states = r.get<std::uint32_t>();
    if (n_states < 2) throw IoError("'" + path.string() + "': inconsistent header");
    PolicyValue pv;
    const auto values = r.get_all<float>(n_states);
    pv.values.assign(values.begin(), values.end());
    pv.actions = r.get_all<std::uint16_t>(n_states - 1);
    if (!r.at_end()) throw IoError("'" + path.string() + "': trailing bytes after actions");
    pv.converged = true;
    pv.residual = 0.0;
    return pv;
}

} // namespace flowplan
