#pragma once

// Slow reference implementations. Everything here is single-threaded and
// deliberately avoids the sub-grid, the COO layout and the layer cache used
// by the fast path.

#include "flowplan/environment.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/model_builder.hpp"
#include "flowplan/step.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace flowplan::oracle {

/// counts[t][a][s][s'] over the full spatial layer with one extra OUT column
/// (index N_c) for the sink; reward_mean[t][a][s].
struct DenseModel {
    GridSpec grid;
    int n_actions = 0;
    int n_realizations = 0;
    std::vector<std::uint32_t> counts;
    std::vector<double> reward_mean;

    std::size_t n_cells() const { return grid.n_cells(); }
    std::size_t width() const { return n_cells() + 1; }
    std::size_t row(int t, int a, std::size_t s) const {
        return ((static_cast<std::size_t>(t) * n_actions + a) * n_cells() + s) * width();
    }
    std::uint32_t count(int t, int a, std::size_t s, std::size_t col) const { return counts[row(t, a, s) + col]; }
    double probability(int t, int a, std::size_t s, std::size_t col) const {
        return static_cast<double>(count(t, a, s, col)) / n_realizations;
    }
    double reward(int t, int a, std::size_t s) const {
        return reward_mean[(static_cast<std::size_t>(t) * n_actions + a) * n_cells() + s];
    }
};

inline constexpr std::size_t kDenseCellLimit = 64;

/// Count every (t, a, s, r) transition into full N_c x (N_c + 1) matrices.
inline DenseModel dense_build(const Environment& env, const Problem& prob, std::size_t max_cells = kDenseCellLimit) {
    const GridSpec& g = env.grid;
    if (g.n_cells() > max_cells)
        throw ContractViolation("dense_build: N_c exceeds the dense oracle size limit");
    DenseModel d;
    d.grid = g;
    d.n_actions = prob.actions.size();
    d.n_realizations = env.velocity.n_realizations;
    const std::size_t nc = g.n_cells();
    d.counts.assign(static_cast<std::size_t>(g.nt) * d.n_actions * nc * (nc + 1), 0);
    d.reward_mean.assign(static_cast<std::size_t>(g.nt) * d.n_actions * nc, 0.0);

    for (int t = 0; t < g.nt; ++t)
        for (int a = 0; a < d.n_actions; ++a) {
            const Action action = prob.actions[a];
            for (std::size_t s = 0; s < nc; ++s) {
                const Cell src = g.cell_at(s);
                double sum = 0.0;
                for (int r = 0; r < d.n_realizations; ++r) {
                    const Vec2 flow = reconstruct_velocity(env.velocity, g.state(src, t), r);
                    const StepResult res = step(env, prob, src, t, flow, action);
                    const std::size_t col = res.landing_cell ? g.cell_index(*res.landing_cell) : nc;
                    ++d.counts[d.row(t, a, s) + col];
                    sum += res.reward;
                }
                d.reward_mean[(static_cast<std::size_t>(t) * d.n_actions + a) * nc + s] = sum / d.n_realizations;
            }
        }
    return d;
}

/// Expand one COO block into the dense N_c x (N_c + 1) layout of DenseModel.
inline std::vector<double> densify(const CooBlock& block, const GridSpec& g, int t) {
    const std::size_t nc = g.n_cells();
    std::vector<double> dense(nc * (nc + 1), 0.0);
    const std::size_t base = static_cast<std::size_t>(t) * nc;
    for (std::size_t k = 0; k < block.nnz(); ++k) {
        require(block.rows[k] >= base && block.rows[k] < base + nc, "densify: row outside the layer");
        const std::size_t row = block.rows[k] - base;
        std::size_t col = nc;
        if (block.cols[k] != g.sink()) {
            require(block.cols[k] >= base + nc && block.cols[k] < base + 2 * nc, "densify: column outside layer t+1");
            col = block.cols[k] - base - nc;
        }
        dense[row * (nc + 1) + col] += block.vals[k];
    }
    return dense;
}

/// Exact finite-horizon backward induction on the dense model. Returns N_g + 1
/// values with the sink last.
inline std::vector<double> naive_vi(const DenseModel& d, int nt) {
    require(nt == d.grid.nt, "naive_vi: horizon does not match the model");
    const std::size_t nc = d.n_cells();
    std::vector<double> v(d.grid.n_states() + 1, 0.0);
    for (int t = nt - 1; t >= 0; --t) {
        const std::size_t next_base = static_cast<std::size_t>(t + 1) * nc;
        for (std::size_t s = 0; s < nc; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < d.n_actions; ++a) {
                double q = d.reward(t, a, s);
                for (std::size_t c = 0; c < nc; ++c) {
                    const std::uint32_t n = d.count(t, a, s, c);
                    if (n != 0) q += d.probability(t, a, s, c) * v[next_base + c];
                }
                best = std::max(best, q);
            }
            v[static_cast<std::size_t>(t) * nc + s] = best;
        }
    }
    return v;
}

/// Q(s, a) for every grid state given values over the time-expanded space.
inline std::vector<double> q_values(const DenseModel& d, const std::vector<double>& v) {
    const std::size_t nc = d.n_cells();
    std::vector<double> q(d.grid.n_states() * d.n_actions, 0.0);
    for (int t = 0; t < d.grid.nt; ++t)
        for (std::size_t s = 0; s < nc; ++s)
            for (int a = 0; a < d.n_actions; ++a) {
                double val = d.reward(t, a, s);
                for (std::size_t c = 0; c < nc; ++c)
                    if (d.count(t, a, s, c) != 0 && t + 1 < d.grid.nt)
                        val += d.probability(t, a, s, c) * v[static_cast<std::size_t>(t + 1) * nc + c];
                q[(static_cast<std::size_t>(t) * nc + s) * d.n_actions + a] = val;
            }
    return q;
}

/// Samples of the stochastic scalar field, [k][t][y][x].
struct ScalarEnsemble {
    GridSpec grid;
    int n_samples = 0;
    std::vector<double> samples;

    double at(int k, StateId s) const { return samples[static_cast<std::size_t>(k) * grid.n_states() + s]; }
};

/// Random ensemble whose per-cell sample mean equals `mean` (up to rounding):
/// uniform perturbations of half-width `spread`, re-centred per cell.
inline ScalarEnsemble make_scalar_ensemble(const ScalarMeanField& mean, int n_samples, std::uint64_t seed,
                                           double spread = 1.0) {
    require(n_samples >= 1, "make_scalar_ensemble: need at least one sample");
    const std::size_t ng = mean.grid.n_states();
    ScalarEnsemble ens{mean.grid, n_samples, std::vector<double>(ng * n_samples)};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<double> delta(n_samples);
    for (std::size_t s = 0; s < ng; ++s) {
        double avg = 0.0;
        for (int k = 0; k < n_samples; ++k) {
            delta[k] = n_samples == 1 ? 0.0 : u(rng);
            avg += delta[k];
        }
        avg /= n_samples;
        for (int k = 0; k < n_samples; ++k) ens.samples[static_cast<std::size_t>(k) * ng + s] = mean.values[s] + (delta[k] - avg);
    }
    return ens;
}

/**
 * Net-energy expected reward by brute force over the joint empirical
 * distribution of successors (from the dense counts) and scalar samples:
 * mean over (s', k) of [-c_f F^2 + c_r (g_k(s) + g_k(s')) / 2] dt, plus r_term
 * for the target; sink outcomes carry r_outbound (0 from the target itself).
 */
inline double mc_net_energy_reward(const ScalarEnsemble& ens, const DenseModel& d, const Problem& prob, int t, int a,
                                   std::size_t s) {
    const GridSpec& g = d.grid;
    const std::size_t nc = g.n_cells();
    const Cell src = g.cell_at(s);
    const RewardConfig& rc = prob.reward;
    const double speed = prob.actions[a].speed;
    const StateId here = g.state(src, t);
    const double out_reward = src == prob.target ? 0.0 : rc.r_outbound;

    double total = 0.0;
    for (std::size_t c = 0; c <= nc; ++c) {
        const std::uint32_t n = d.count(t, a, s, c);
        if (n == 0) continue;
        const double p = static_cast<double>(n) / d.n_realizations;
        if (c == nc) {
            total += p * out_reward;
            continue;
        }
        const Cell dst = g.cell_at(c);
        const StateId there = g.state(dst, t + 1);
        double inner = 0.0;
        for (int k = 0; k < ens.n_samples; ++k)
            inner += (-rc.c_f * speed * speed + 0.5 * rc.c_r * (ens.at(k, here) + ens.at(k, there))) * g.dt;
        inner /= ens.n_samples;
        if (dst == prob.target) inner += rc.r_term;
        total += p * inner;
    }
    return total;
}

/// Bounds for random_instance.
struct InstanceLimits {
    int max_nx = 8;
    int max_ny = 8;
    int max_cells = 64;
    int max_nt = 10;
    int max_realizations = 64;
    int max_modes = 3;
    double obstacle_fraction = 0.1;
};

struct Instance {
    Environment env;
    Problem problem;
};

/**
 * Seeded random environment for oracle comparisons: uniform mean flow, random
 * modes and coefficients, random scalar field and obstacle cells, random
 * action space (|A| <= 16), objective and target.
 */
inline Instance random_instance(std::uint64_t seed, const InstanceLimits& lim = {}) {
    std::mt19937_64 rng(seed);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    GridSpec g;
    g.nx = uniform_int(2, lim.max_nx);
    g.ny = uniform_int(2, std::max(2, std::min(lim.max_ny, lim.max_cells / g.nx)));
    g.nt = uniform_int(2, lim.max_nt);
    g.dx = uniform(0.5, 2.0);
    g.dt = uniform(0.5, 1.5);
    g.origin = {uniform(-3.0, 3.0), uniform(-3.0, 3.0)};

    Instance inst;
    Environment& env = inst.env;
    env.grid = g;
    const int n_modes = uniform_int(0, lim.max_modes);
    env.velocity = DOVelocityField(g, n_modes, uniform_int(1, lim.max_realizations));
    const double flow_scale = g.dx / g.dt;
    for (double& v : env.velocity.mean) v = uniform(-0.8, 0.8) * flow_scale;
    for (double& v : env.velocity.modes) v = uniform(-0.5, 0.5) * flow_scale;
    for (double& v : env.velocity.coeffs) v = uniform(-1.0, 1.0);
    env.scalar = ScalarMeanField(g);
    for (double& v : env.scalar.values) v = uniform(0.0, 2.0);
    env.mask = ObstacleMask(g);
    for (auto& m : env.mask.cells) m = uniform(0.0, 1.0) < lim.obstacle_fraction ? 1 : 0;

    Problem& prob = inst.problem;
    prob.actions.n_headings = uniform_int(0, 1) == 0 ? 4 : 8;
    prob.actions.n_speeds = uniform_int(1, 2);
    prob.actions.f_max = uniform(0.5, 2.0) * flow_scale;
    prob.reward.objective = static_cast<Objective>(uniform_int(0, 2));
    prob.reward.c_f = uniform(0.5, 2.0);
    prob.reward.c_r = uniform(0.5, 2.0);
    prob.reward.r_term = uniform(5.0, 50.0);
    prob.reward.r_outbound = -uniform(50.0, 500.0);
    prob.target = {uniform_int(0, g.nx - 1), uniform_int(0, g.ny - 1)};
    return inst;
}

} // namespace flowplan::oracle
