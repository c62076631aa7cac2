#pragma once

#include "flowplan/errors.hpp"
#include "flowplan/model_builder.hpp"
#include "flowplan/oracle.hpp"
#include "flowplan/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace flowplan {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
    void add(std::string name, bool ok, std::string detail = {}) {
        checks.push_back({std::move(name), ok, std::move(detail)});
    }
    void print(std::ostream& os) const {
        for (const auto& c : checks) {
            os << (c.passed ? "PASS " : "FAIL ") << c.name;
            if (!c.detail.empty()) os << "  (" << c.detail << ')';
            os << '\n';
        }
    }
};

/**
 * Structural invariants of a model: block rows inside layer t, columns in
 * layer t+1 or the sink, canonical order, probabilities in (0, 1], every
 * grid state present once per block with mass 1 within `tol`, finite rewards.
 * Returns one entry per invariant.
 */
inline std::vector<CheckResult> check_model_invariants(const SparseModel& model, double tol) {
    const GridSpec& g = model.grid;
    const std::size_t nc = g.n_cells();
    CheckResult layer{"model.rows_in_layer", true, {}}, cols{"model.cols_next_layer", true, {}},
        order{"model.canonical_order", true, {}}, range{"model.values_in_unit_interval", true, {}},
        norm{"model.row_normalization", true, {}}, cover{"model.row_coverage", true, {}},
        finite{"model.finite_rewards", true, {}};
    auto fail = [](CheckResult& c, const std::string& what) {
        if (c.passed) c.detail = what;
        c.passed = false;
    };
    if (model.blocks.size() != static_cast<std::size_t>(model.n_actions) * g.nt)
        fail(cover, "block count differs from n_actions * nt");
    if (model.rewards.size() != static_cast<std::size_t>(model.n_actions) * g.n_states())
        fail(finite, "reward vector has the wrong length");
    double worst = 0.0;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const CooBlock& blk = model.blocks[b];
        const int a = static_cast<int>(b / g.nt);
        const int t = static_cast<int>(b % g.nt);
        const std::size_t base = static_cast<std::size_t>(t) * nc;
        const std::string where = " at a=" + std::to_string(a) + " t=" + std::to_string(t);
        std::vector<double> mass(nc, 0.0);
        std::vector<char> seen(nc, 0);
        for (std::size_t k = 0; k < blk.nnz(); ++k) {
            const std::uint32_t row = blk.rows[k], col = blk.cols[k];
            if (row < base || row >= base + nc) {
                fail(layer, "row " + std::to_string(row) + where);
                continue;
            }
            const bool next_layer = col >= base + nc && col < base + 2 * nc && t + 1 < g.nt;
            if (!next_layer && col != model.sink()) fail(cols, "col " + std::to_string(col) + where);
            if (k > 0 && (blk.rows[k - 1] > row || (blk.rows[k - 1] == row && blk.cols[k - 1] >= col)))
                fail(order, "entry " + std::to_string(k) + where);
            const double v = blk.vals[k];
            if (!(v > 0.0 && v <= 1.0)) fail(range, "value " + std::to_string(v) + where);
            mass[row - base] += v;
            seen[row - base] = 1;
        }
        for (std::size_t c = 0; c < nc; ++c) {
            if (!seen[c]) {
                fail(cover, "state " + std::to_string(base + c) + " has no row" + where);
                continue;
            }
            worst = std::max(worst, std::abs(mass[c] - 1.0));
        }
    }
    if (worst > tol) {
        std::ostringstream os;
        os << "max |row sum - 1| = " << worst << " > " << tol;
        fail(norm, os.str());
    }
    for (double r : model.rewards)
        if (!std::isfinite(r)) {
            fail(finite, "non-finite reward");
            break;
        }
    return {layer, cols, order, range, norm, cover, finite};
}

/// Slot counts of one sweep sum to N_{r,v} for every source.
inline bool counts_conserved(const SubGridAccumulator& acc, int n_realizations) {
    const std::size_t stride = acc.spec.stride();
    for (std::size_t s = 0; s < acc.n_cells; ++s) {
        std::uint64_t total = 0;
        for (std::size_t k = 0; k < stride; ++k) total += acc.s2_count[s * stride + k];
        if (total != static_cast<std::uint64_t>(n_realizations)) return false;
    }
    return true;
}

struct OracleComparison {
    bool counts_equal = true;
    double max_reward_error = 0.0;
    double max_value_error = 0.0;
    bool policy_optimal = true;
    bool dag_converged = true;
    std::string detail;
};

/// Compare the fast pipeline against the dense oracles on one instance.
inline OracleComparison compare_with_oracle(const oracle::Instance& inst, unsigned threads = 0) {
    const Environment& env = inst.env;
    const Problem& prob = inst.problem;
    const GridSpec& g = env.grid;
    OracleComparison out;

    const SubGridSpec sg = compute_subgrid(env.velocity, prob.actions, g, 1, threads);
    const SparseModel model = build_model(env, prob, sg, threads);
    const oracle::DenseModel dense = oracle::dense_build(env, prob);

    const std::size_t nc = g.n_cells();
    for (int t = 0; t < g.nt && out.counts_equal; ++t)
        for (int a = 0; a < model.n_actions && out.counts_equal; ++a) {
            const std::vector<double> p = oracle::densify(model.block(a, t), g, t);
            for (std::size_t s = 0; s < nc && out.counts_equal; ++s)
                for (std::size_t c = 0; c <= nc; ++c)
                    if (p[s * (nc + 1) + c] != dense.probability(t, a, s, c)) {
                        out.counts_equal = false;
                        out.detail = "count mismatch at t=" + std::to_string(t) + " a=" + std::to_string(a) +
                                     " s=" + std::to_string(s);
                        break;
                    }
            for (std::size_t s = 0; s < nc; ++s)
                out.max_reward_error = std::max(
                    out.max_reward_error,
                    std::abs(model.reward(a, static_cast<StateId>(t * nc + s)) - dense.reward(t, a, s)));
        }

    const PolicyValue pv = solve(model, SolverConfig{}, threads);
    out.dag_converged = pv.converged && pv.residual == 0.0 && pv.iterations_run <= g.nt + 1;
    const std::vector<double> v = oracle::naive_vi(dense, g.nt);
    for (std::size_t s = 0; s < v.size(); ++s)
        out.max_value_error = std::max(out.max_value_error, std::abs(v[s] - pv.values[s]));

    const std::vector<double> q = oracle::q_values(dense, v);
    const int n_a = model.n_actions;
    for (std::size_t s = 0; s < g.n_states(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n_a; ++a) best = std::max(best, q[s * n_a + a]);
        if (q[s * n_a + pv.actions[s]] < best - 1e-9) {
            out.policy_optimal = false;
            if (out.detail.empty()) out.detail = "non-maximizing action at s=" + std::to_string(s);
            break;
        }
    }
    return out;
}

/// Largest |mc_net_energy_reward - R(s, a)| over every (t, a, s) of a
/// net-energy instance against an n_samples scalar ensemble.
inline double net_energy_theorem_error(std::uint64_t seed, int n_samples, unsigned threads = 0) {
    oracle::Instance inst = oracle::random_instance(seed);
    inst.problem.reward.objective = Objective::net_energy;
    const Environment& env = inst.env;
    const GridSpec& g = env.grid;
    const SubGridSpec sg = compute_subgrid(env.velocity, inst.problem.actions, g, 1, threads);
    const SparseModel model = build_model(env, inst.problem, sg, threads);
    const oracle::DenseModel dense = oracle::dense_build(env, inst.problem);
    const oracle::ScalarEnsemble ens = oracle::make_scalar_ensemble(env.scalar, n_samples, seed ^ 0x9e3779b97f4a7c15ULL);
    double worst = 0.0;
    for (int t = 0; t < g.nt; ++t)
        for (int a = 0; a < model.n_actions; ++a)
            for (std::size_t s = 0; s < g.n_cells(); ++s) {
                const double mc = oracle::mc_net_energy_reward(ens, dense, inst.problem, t, a, s);
                const double r = model.reward(a, static_cast<StateId>(t * g.n_cells() + s));
                worst = std::max(worst, std::abs(mc - r));
            }
    return worst;
}

struct OracleSuiteOptions {
    int instances = 20;
    int scalar_ensembles = 10;
    std::uint64_t seed = 7;
    unsigned threads = 0;
};

/// Oracle equivalence, solver agreement, DAG convergence, normalization and
/// the mean-field theorem over seeded random instances.
inline VerificationReport run_oracle_suite(const OracleSuiteOptions& opt) {
    VerificationReport report;
    bool counts = true, dag = true, policy = true, structure = true, conserved = true;
    double reward_err = 0.0, value_err = 0.0;
    std::string first_detail;
    for (int k = 0; k < opt.instances; ++k) {
        const oracle::Instance inst = oracle::random_instance(opt.seed + static_cast<std::uint64_t>(k));
        const OracleComparison cmp = compare_with_oracle(inst, opt.threads);
        counts = counts && cmp.counts_equal;
        dag = dag && cmp.dag_converged;
        policy = policy && cmp.policy_optimal;
        reward_err = std::max(reward_err, cmp.max_reward_error);
        value_err = std::max(value_err, cmp.max_value_error);
        if (first_detail.empty() && !cmp.detail.empty()) first_detail = "instance " + std::to_string(k) + ": " + cmp.detail;

        const GridSpec& g = inst.env.grid;
        const SubGridSpec sg = compute_subgrid(inst.env.velocity, inst.problem.actions, g, 1, opt.threads);
        for (int t = 0; t < g.nt; ++t) {
            const LayerFlow layer = reconstruct_layer(inst.env.velocity, t, opt.threads);
            SubGridAccumulator acc(sg, g.n_cells());
            for (int a = 0; a < inst.problem.actions.size(); ++a) {
                transition_sweep(inst.env, inst.problem, t, a, sg, acc, layer, opt.threads);
                conserved = conserved && counts_conserved(acc, inst.env.velocity.n_realizations);
            }
        }
        const SparseModel model = build_model(inst.env, inst.problem, sg, opt.threads);
        for (const auto& c : check_model_invariants(model, 1e-9)) structure = structure && c.passed;
    }
    const std::string n = std::to_string(opt.instances) + " instances";
    report.add("oracle.transition_counts_exact", counts, counts ? n : first_detail);
    std::ostringstream re, ve;
    re << "max error " << reward_err;
    ve << "max error " << value_err;
    report.add("oracle.rewards_within_1e-12", reward_err <= 1e-12, re.str());
    report.add("oracle.values_within_1e-9", value_err <= 1e-9, ve.str());
    report.add("oracle.policy_maximizes", policy, policy ? n : first_detail);
    report.add("solver.dag_convergence", dag, "residual 0 within nt+1 iterations");
    report.add("model.count_conservation", conserved, n);
    report.add("model.structure_and_normalization", structure, n);

    double theorem = 0.0;
    static constexpr int sizes[] = {2, 16, 64};
    for (int k = 0; k < opt.scalar_ensembles; ++k)
        theorem = std::max(theorem, net_energy_theorem_error(opt.seed + 1000 + static_cast<std::uint64_t>(k),
                                                             sizes[k % 3], opt.threads));
    std::ostringstream te;
    te << opt.scalar_ensembles << " ensembles, max error " << theorem;
    report.add("theorem.mean_scalar_field_sufficiency", theorem <= 1e-9, te.str());
    return report;
}

} // namespace flowplan
