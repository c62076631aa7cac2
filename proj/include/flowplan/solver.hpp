#pragma once

#include "flowplan/errors.hpp"
#include "flowplan/model_builder.hpp"
#include "flowplan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace flowplan {

struct SolverConfig {
    double epsilon = 1e-8;
    /// <= 0 selects nt + 2.
    int max_iterations = 0;
    /// Finite-horizon, undiscounted: only 1.0 is accepted.
    double gamma = 1.0;

    void validate() const {
        if (!(epsilon > 0.0)) throw ContractViolation("solver: epsilon must be positive");
        if (gamma != 1.0) throw ContractViolation("solver: only the undiscounted case (gamma = 1) is supported");
    }
};

struct PolicyValue {
    std::vector<double> values;          // N_g + 1, sink last
    std::vector<std::uint16_t> actions;  // N_g
    int iterations_run = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

/// Row ranges of every (a, t) block, indexed by local cell.
class RowIndex {
public:
    explicit RowIndex(const SparseModel& model) : n_cells_(model.grid.n_cells()), nt_(model.grid.nt) {
        ptr_.resize(model.blocks.size());
        for (std::size_t b = 0; b < model.blocks.size(); ++b) {
            const CooBlock& blk = model.blocks[b];
            const int t = static_cast<int>(b % nt_);
            const std::size_t base = static_cast<std::size_t>(t) * n_cells_;
            auto& p = ptr_[b];
            p.assign(n_cells_ + 1, 0);
            for (std::uint32_t row : blk.rows) {
                require(row >= base && row < base + n_cells_, "model: block row outside its time layer");
                ++p[row - base + 1];
            }
            for (std::size_t c = 0; c < n_cells_; ++c) p[c + 1] += p[c];
        }
    }

    std::pair<std::size_t, std::size_t> range(int a, int t, std::size_t local) const {
        const auto& p = ptr_[static_cast<std::size_t>(a) * nt_ + t];
        return {p[local], p[local + 1]};
    }

private:
    std::size_t n_cells_;
    std::size_t nt_;
    std::vector<std::vector<std::size_t>> ptr_;
};

/// Q(s, a) = R(s, a) + sum_{s'} P(s'|s, a) v(s'); the successor sum runs in
/// canonical COO order.
inline double backed_up_value(const SparseModel& model, const RowIndex& index, int a, StateId s,
                              std::span<const double> values) {
    const std::size_t n_cells = model.grid.n_cells();
    const int t = static_cast<int>(s / n_cells);
    const CooBlock& blk = model.block(a, t);
    auto [begin, end] = index.range(a, t, s % n_cells);
    double expect = 0.0;
    for (std::size_t k = begin; k < end; ++k) expect += blk.vals[k] * values[blk.cols[k]];
    return model.reward(a, s) + expect;
}

/**
 * Jacobi value iteration from v_0 = 0 with the sink pinned at 0. Stops once
 * max_s |v_{k+1}(s) - v_k(s)| < epsilon or after max_iterations sweeps; the
 * result records whether it converged.
 */
inline PolicyValue value_iteration(const SparseModel& model, const SolverConfig& cfg, unsigned threads = 0) {
    cfg.validate();
    const std::size_t n_grid = model.n_grid_states();
    const int max_iter = cfg.max_iterations > 0 ? cfg.max_iterations : model.nt() + 2;
    const RowIndex index(model);

    std::vector<double> current(n_grid + 1, 0.0), next(n_grid + 1, 0.0);
    PolicyValue out;
    std::vector<double> partial(n_grid, 0.0);
    for (int it = 1; it <= max_iter; ++it) {
        parallel_for(n_grid, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t s = begin; s < end; ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < model.n_actions; ++a)
                    best = std::max(best, backed_up_value(model, index, a, static_cast<StateId>(s), current));
                next[s] = best;
                partial[s] = std::abs(best - current[s]);
            }
        });
        next[n_grid] = 0.0;
        double residual = 0.0;
        for (double d : partial) residual = std::max(residual, d);
        current.swap(next);
        out.iterations_run = it;
        out.residual = residual;
        if (residual < cfg.epsilon) {
            out.converged = true;
            break;
        }
    }
    out.values = std::move(current);
    return out;
}

/// Greedy policy with respect to `pv.values`; ties go to the lowest action index.
inline void extract_policy(const SparseModel& model, PolicyValue& pv, unsigned threads = 0) {
    require(pv.values.size() == model.n_states(), "extract_policy: value vector has the wrong length");
    const std::size_t n_grid = model.n_grid_states();
    const RowIndex index(model);
    pv.actions.assign(n_grid, 0);
    parallel_for(n_grid, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < model.n_actions; ++a) {
                const double q = backed_up_value(model, index, a, static_cast<StateId>(s), pv.values);
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            pv.actions[s] = static_cast<std::uint16_t>(best_a);
        }
    });
}

inline PolicyValue solve(const SparseModel& model, const SolverConfig& cfg, unsigned threads = 0) {
    PolicyValue pv = value_iteration(model, cfg, threads);
    extract_policy(model, pv, threads);
    return pv;
}

/// Exact value of a fixed deterministic policy by backward evaluation over
/// the time layers (sink = 0).
inline std::vector<double> policy_value(const SparseModel& model, std::span<const std::uint16_t> policy,
                                        unsigned threads = 0) {
    require(policy.size() == model.n_grid_states(), "policy_value: policy has the wrong length");
    const std::size_t n_cells = model.grid.n_cells();
    const RowIndex index(model);
    std::vector<double> v(model.n_states(), 0.0);
    for (int t = model.nt() - 1; t >= 0; --t) {
        const std::size_t base = static_cast<std::size_t>(t) * n_cells;
        parallel_for(n_cells, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t c = begin; c < end; ++c) {
                const auto s = static_cast<StateId>(base + c);
                const int a = policy[s];
                require(a < model.n_actions, "policy_value: action index out of range");
                v[s] = backed_up_value(model, index, a, s, v);
            }
        });
    }
    return v;
}

} // namespace flowplan
