#pragma once

#include "flowplan/environment.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/grid.hpp"
#include "flowplan/parallel.hpp"
#include "flowplan/step.hpp"
#include "flowplan/velocity_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowplan {

/**
 * Window of cells around a source cell that contains every reachable
 * in-domain successor. Slot (di, dj) lives at
 * (dj + half_y) * (2*half_x + 1) + (di + half_x); one extra OUT slot per
 * source collects every transition into the sink.
 */
struct SubGridSpec {
    int half_x = 1;
    int half_y = 1;

    int width() const { return 2 * half_x + 1; }
    int height() const { return 2 * half_y + 1; }
    /// N_sg, excluding the OUT slot.
    std::size_t slots() const { return static_cast<std::size_t>(width()) * height(); }
    std::size_t out_slot() const { return slots(); }
    std::size_t stride() const { return slots() + 1; }

    std::optional<std::size_t> slot_of(int di, int dj) const {
        if (std::abs(di) > half_x || std::abs(dj) > half_y) return std::nullopt;
        return static_cast<std::size_t>(dj + half_y) * width() + static_cast<std::size_t>(di + half_x);
    }
    /// Inverse of slot_of for in-window slots.
    std::pair<int, int> displacement(std::size_t slot) const {
        return {static_cast<int>(slot % width()) - half_x, static_cast<int>(slot / width()) - half_y};
    }
};

/// half_width = ceil((max|v_component| + F_max) * dt / dx) + buffer, with the
/// maximum taken over every (state, realization) of the reduced-order field.
inline SubGridSpec compute_subgrid(const DOVelocityField& field, const ActionSpace& actions, const GridSpec& grid,
                                   int buffer, unsigned threads = 0) {
    require(buffer >= 1, "compute_subgrid: buffer must be >= 1");
    const std::size_t n = grid.n_states();
    std::vector<double> max_x(n, 0.0), max_y(n, 0.0);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            double mx = 0.0, my = 0.0;
            for (int r = 0; r < field.n_realizations; ++r) {
                const Vec2 v = reconstruct_velocity(field, static_cast<StateId>(s), r);
                mx = std::max(mx, std::abs(v.x));
                my = std::max(my, std::abs(v.y));
            }
            max_x[s] = mx;
            max_y[s] = my;
        }
    });
    const double vx = *std::max_element(max_x.begin(), max_x.end());
    const double vy = *std::max_element(max_y.begin(), max_y.end());
    auto half = [&](double vmax) {
        return static_cast<int>(std::ceil((vmax + actions.f_max) * grid.dt / grid.dx)) + buffer;
    };
    return {half(vx), half(vy)};
}

/// Per-layer counts and reward sums for one (t, a) sweep.
struct SubGridAccumulator {
    SubGridSpec spec;
    std::size_t n_cells = 0;
    std::vector<std::uint32_t> s2_count;  // [source][slot], stride N_sg + 1
    std::vector<double> sum_r;            // [source]

    SubGridAccumulator() = default;
    SubGridAccumulator(const SubGridSpec& sg, std::size_t cells)
        : spec(sg), n_cells(cells), s2_count(cells * sg.stride(), 0), sum_r(cells, 0.0) {}

    std::uint32_t count(std::size_t source, std::size_t slot) const { return s2_count[source * spec.stride() + slot]; }
};

/// Flow at every (cell, realization) of one time layer, [cell][r].
struct LayerFlow {
    int t = 0;
    int n_realizations = 0;
    std::vector<Vec2> flow;

    Vec2 at(std::size_t local, int r) const { return flow[local * n_realizations + r]; }
};

inline LayerFlow reconstruct_layer(const DOVelocityField& field, int t, unsigned threads = 0) {
    const GridSpec& grid = field.grid;
    LayerFlow lf{t, field.n_realizations, std::vector<Vec2>(grid.n_cells() * field.n_realizations)};
    parallel_for(grid.n_cells(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const StateId s = grid.state(grid.cell_at(c), t);
            for (int r = 0; r < field.n_realizations; ++r)
                lf.flow[c * field.n_realizations + r] = reconstruct_velocity(field, s, r);
        }
    });
    return lf;
}

/**
 * Sweep every (source cell, realization) pair of layer t under action a and
 * fill `acc`. Workers own disjoint source ranges and visit realizations in
 * order, so counts and float reward sums do not depend on the thread count.
 * Throws ContractViolation if an in-domain successor falls outside the
 * sub-grid window.
 */
inline void transition_sweep(const Environment& env, const Problem& prob, int t, int a, const SubGridSpec& subgrid,
                             SubGridAccumulator& acc, const LayerFlow& layer, unsigned threads = 0,
                             const MaskBounds* bounds = nullptr) {
    const GridSpec& grid = env.grid;
    require(t >= 0 && t < grid.nt, "transition_sweep: time index out of range");
    require(layer.t == t && layer.n_realizations == env.velocity.n_realizations,
            "transition_sweep: layer flow does not match");
    const Action action = prob.actions[a];
    const std::size_t stride = subgrid.stride();
    if (acc.n_cells != grid.n_cells() || acc.s2_count.size() != grid.n_cells() * stride)
        acc = SubGridAccumulator(subgrid, grid.n_cells());
    acc.spec = subgrid;
    const int n_r = env.velocity.n_realizations;

    parallel_for(grid.n_cells(), threads, [&](std::size_t begin, std::size_t end) {
        std::fill(acc.s2_count.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                  acc.s2_count.begin() + static_cast<std::ptrdiff_t>(end * stride), 0u);
        for (std::size_t c = begin; c < end; ++c) {
            const Cell src = grid.cell_at(c);
            std::uint32_t* counts = acc.s2_count.data() + c * stride;
            double sum = 0.0;
            for (int r = 0; r < n_r; ++r) {
                const StepResult res = step(env, prob, src, t, layer.at(c, r), action, bounds);
                std::size_t slot = subgrid.out_slot();
                if (res.landing_cell) {
                    auto in_window = subgrid.slot_of(res.landing_cell->i - src.i, res.landing_cell->j - src.j);
                    if (!in_window)
                        throw ContractViolation("transition_sweep: successor outside the neighbouring sub-grid");
                    slot = *in_window;
                }
                ++counts[slot];
                sum += res.reward;
            }
            acc.sum_r[c] = sum;
        }
    });
}

inline SubGridAccumulator transition_sweep(const Environment& env, const Problem& prob, int t, int a,
                                           const SubGridSpec& subgrid, unsigned threads = 0) {
    SubGridAccumulator acc(subgrid, env.grid.n_cells());
    transition_sweep(env, prob, t, a, subgrid, acc, reconstruct_layer(env.velocity, t, threads), threads);
    return acc;
}

/// Sample-mean expected reward per source: sum_r / N_{r,v}.
inline std::vector<double> finalize_rewards(const SubGridAccumulator& acc, int n_realizations) {
    require(n_realizations >= 1, "finalize_rewards: n_realizations must be >= 1");
    std::vector<double> out(acc.sum_r.size());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = acc.sum_r[s] / n_realizations;
    return out;
}

struct NnzCount {
    std::size_t nnz = 0;
    std::vector<std::uint32_t> per_state;
};

inline NnzCount count_nnz(const SubGridAccumulator& acc, unsigned threads = 0) {
    NnzCount out;
    out.per_state.assign(acc.n_cells, 0);
    const std::size_t stride = acc.spec.stride();
    parallel_for(acc.n_cells, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            std::uint32_t n = 0;
            for (std::size_t k = 0; k < stride; ++k) n += acc.s2_count[s * stride + k] != 0;
            out.per_state[s] = n;
        }
    });
    for (auto n : out.per_state) out.nnz += n;
    return out;
}

/// One (action, time) transition block in COO form, rows then cols ascending.
struct CooBlock {
    std::vector<std::uint32_t> rows;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;

    std::size_t nnz() const { return vals.size(); }
};

/// Decode the slot counts of layer t into a canonical COO block with
/// probability count / N_{r,v}; OUT-slot entries point at the sink.
inline CooBlock assemble_coo(const SubGridAccumulator& acc, const NnzCount& nnz, int n_realizations,
                             const GridSpec& grid, int t, unsigned threads = 0) {
    require(acc.n_cells == grid.n_cells() && nnz.per_state.size() == acc.n_cells,
            "assemble_coo: accumulator does not match the grid");
    require(t >= 0 && t < grid.nt, "assemble_coo: time index out of range");
    CooBlock block;
    block.rows.resize(nnz.nnz);
    block.cols.resize(nnz.nnz);
    block.vals.resize(nnz.nnz);

    std::vector<std::size_t> offset(acc.n_cells + 1, 0);
    for (std::size_t s = 0; s < acc.n_cells; ++s) offset[s + 1] = offset[s] + nnz.per_state[s];

    const SubGridSpec& sg = acc.spec;
    const std::size_t stride = sg.stride();
    const StateId sink = grid.sink();
    parallel_for(acc.n_cells, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            const Cell src = grid.cell_at(s);
            const StateId row = grid.state(src, t);
            std::size_t k = offset[s];
            for (std::size_t slot = 0; slot < stride; ++slot) {
                const std::uint32_t n = acc.s2_count[s * stride + slot];
                if (n == 0) continue;
                StateId col = sink;
                if (slot != sg.out_slot()) {
                    auto [di, dj] = sg.displacement(slot);
                    col = grid.state(Cell{src.i + di, src.j + dj}, t + 1);
                }
                block.rows[k] = row;
                block.cols[k] = col;
                block.vals[k] = static_cast<double>(n) / n_realizations;
                ++k;
            }
            require(k == offset[s + 1], "assemble_coo: nnz_count disagrees with slot counts");
        }
    });
    return block;
}

/**
 * The appended model: blocks[a * nt + t] holds P_{a,t}; rewards[a * N_g + s]
 * holds R(s, a). State N_g is the absorbing sink (self-loop, reward 0).
 */
struct SparseModel {
    GridSpec grid;
    int n_actions = 0;
    std::vector<CooBlock> blocks;
    std::vector<double> rewards;

    std::size_t n_grid_states() const { return grid.n_states(); }
    std::size_t n_states() const { return grid.n_states() + 1; }
    StateId sink() const { return grid.sink(); }
    int nt() const { return grid.nt; }

    const CooBlock& block(int a, int t) const { return blocks[static_cast<std::size_t>(a) * grid.nt + t]; }
    CooBlock& block(int a, int t) { return blocks[static_cast<std::size_t>(a) * grid.nt + t]; }
    double reward(int a, StateId s) const { return rewards[static_cast<std::size_t>(a) * grid.n_states() + s]; }

    std::size_t nnz() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.nnz();
        return n;
    }
};

/// Run the sweep / mean / count / assemble stages for every (t, a): time in
/// the outer loop, actions inside, appending each block into the model.
inline SparseModel build_model(const Environment& env, const Problem& prob, const SubGridSpec& subgrid,
                               unsigned threads = 0) {
    env.validate();
    prob.validate(env.grid);
    const GridSpec& grid = env.grid;
    const int n_a = prob.actions.size();
    const int n_r = env.velocity.n_realizations;

    SparseModel model;
    model.grid = grid;
    model.n_actions = n_a;
    model.blocks.resize(static_cast<std::size_t>(n_a) * grid.nt);
    model.rewards.assign(static_cast<std::size_t>(n_a) * grid.n_states(), 0.0);

    SubGridAccumulator acc(subgrid, grid.n_cells());
    const MaskBounds bounds(env.mask);
    for (int t = 0; t < grid.nt; ++t) {
        const LayerFlow layer = reconstruct_layer(env.velocity, t, threads);
        for (int a = 0; a < n_a; ++a) {
            transition_sweep(env, prob, t, a, subgrid, acc, layer, threads, &bounds);
            const std::vector<double> r_at = finalize_rewards(acc, n_r);
            const NnzCount nnz = count_nnz(acc, threads);
            model.block(a, t) = assemble_coo(acc, nnz, n_r, grid, t, threads);
            std::copy(r_at.begin(), r_at.end(),
                      model.rewards.begin() +
                          static_cast<std::ptrdiff_t>(static_cast<std::size_t>(a) * grid.n_states() +
                                                      static_cast<std::size_t>(t) * grid.n_cells()));
        }
    }
    return model;
}

} // namespace flowplan
