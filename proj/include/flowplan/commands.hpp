#pragma once

// Pipeline subcommands. Each takes a parsed RunConfig plus optional overrides
// and throws ConfigError / IoError / ContractViolation / VerificationFailure.

#include "flowplan/config.hpp"
#include "flowplan/environment_io.hpp"
#include "flowplan/model_builder.hpp"
#include "flowplan/model_io.hpp"
#include "flowplan/rollout.hpp"
#include "flowplan/rollout_io.hpp"
#include "flowplan/solver.hpp"
#include "flowplan/verify.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>

namespace flowplan::commands {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConfigError = 2,
    kIoError = 3,
    kContractViolation = 4,
    kVerificationFailure = 5,
};

struct Options {
    std::optional<unsigned> threads;
    std::optional<std::filesystem::path> out;
};

inline unsigned threads_of(const RunConfig& c, const Options& o) { return o.threads.value_or(c.threads); }

inline std::filesystem::path out_or(const Options& o, const std::filesystem::path& fallback) {
    return o.out.value_or(fallback);
}

inline void ensure_parent(const std::filesystem::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create '" + p.parent_path().string() + "': " + ec.message());
    }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Synthesize the environment container; also writes the raw ensemble when
/// paths.ensemble is set.
inline int generate_env(const RunConfig& c, const Options& o, std::ostream& log) {
    const Environment env = synthesize_environment(c);
    const auto dir = out_or(o, c.paths.environment);
    write_environment(dir, env);
    log << "environment written to " << dir.string() << " (" << c.grid.nx << 'x' << c.grid.ny << 'x' << c.grid.nt
        << ", " << env.velocity.n_modes << " modes, " << env.velocity.n_realizations << " realizations)\n";
    if (!c.paths.ensemble.empty()) {
        ensure_parent(c.paths.ensemble);
        write_ensemble(c.paths.ensemble, sample_ensemble(env.velocity));
        log << "raw ensemble written to " << c.paths.ensemble.string() << '\n';
    }
    return kOk;
}

/// Reduce the raw ensemble at paths.ensemble to DO form and write a container
/// with the configured radiation and obstacle fields.
inline int reduce(const RunConfig& c, const Options& o, std::ostream& log) {
    if (c.paths.ensemble.empty()) throw ConfigError("reduce: paths.ensemble is not set");
    const VelocityEnsemble ens = read_ensemble(c.paths.ensemble, c.grid, c.double_gyre.n_realizations);
    const int n_modes = c.reduce_modes >= 0 ? c.reduce_modes : c.double_gyre.n_modes;
    std::vector<std::vector<double>> sv;
    Environment env;
    env.grid = c.grid;
    env.velocity = reduce_order(ens, n_modes, threads_of(c, o), &sv);
    env.scalar = generate_radiation(c.radiation);
    env.mask = generate_obstacles(c.obstacles);
    const auto dir = out_or(o, c.paths.environment);
    write_environment(dir, env);

    double kept = 0.0, total = 0.0;
    for (const auto& layer : sv)
        for (std::size_t k = 0; k < layer.size(); ++k) {
            total += layer[k] * layer[k];
            if (static_cast<int>(k) < n_modes) kept += layer[k] * layer[k];
        }
    log << "reduced to " << n_modes << " modes; retained variance fraction "
        << (total > 0.0 ? kept / total : 1.0) << "; written to " << dir.string() << '\n';
    return kOk;
}

inline int build(const RunConfig& c, const Options& o, std::ostream& log) {
    const Environment env = read_environment(c.paths.environment);
    const Problem prob = c.problem();
    const unsigned threads = threads_of(c, o);
    const auto t0 = std::chrono::steady_clock::now();
    const SubGridSpec sg = compute_subgrid(env.velocity, prob.actions, env.grid, c.subgrid_buffer, threads);
    const SparseModel model = build_model(env, prob, sg, threads);
    const double elapsed = seconds_since(t0);
    const auto path = out_or(o, c.paths.model);
    ensure_parent(path);
    write_model(path, model);
    log << "model: " << model.n_states() << " states, " << model.n_actions << " actions, nnz " << model.nnz()
        << ", sub-grid " << sg.width() << 'x' << sg.height() << ", built in " << std::fixed << std::setprecision(3)
        << elapsed << " s; written to " << path.string() << '\n';
    return kOk;
}

inline int solve(const RunConfig& c, const Options& o, std::ostream& log) {
    const SparseModel model = read_model(c.paths.model);
    const PolicyValue pv = flowplan::solve(model, c.solver, threads_of(c, o));
    const auto path = out_or(o, c.paths.policy);
    ensure_parent(path);
    write_policy(path, pv);
    log << "value iteration: " << pv.iterations_run << " iterations, residual " << pv.residual << "; policy written to "
        << path.string() << '\n';
    if (!pv.converged)
        throw VerificationFailure("value iteration did not converge within the iteration budget (residual " +
                                  std::to_string(pv.residual) + ")");
    return kOk;
}

inline int rollout(const RunConfig& c, const Options& o, std::ostream& log) {
    const Environment env = read_environment(c.paths.environment);
    const PolicyValue pv = read_policy(c.paths.policy);
    if (pv.actions.size() != env.grid.n_states()) throw IoError("policy does not match the environment grid");
    const Problem prob = c.problem();
    for (auto a : pv.actions)
        if (a >= prob.actions.size()) throw IoError("policy holds an action outside the configured action space");
    const TrajectoryEnsemble ens = ensemble_rollout(env, prob, pv.actions, c.start, threads_of(c, o));

    const auto csv = out_or(o, c.paths.trajectories);
    ensure_parent(csv);
    write_trajectories_csv(csv, ens, env.grid);
    nlohmann::json summary = summary_to_json(ens.summary);
    summary["objective"] = std::string(to_string(c.reward.objective));
    summary["policy_value_start"] = pv.values[env.grid.state(c.start, 0)];
    const auto summary_path = o.out ? std::filesystem::path(csv).replace_extension(".json") : c.paths.summary;
    ensure_parent(summary_path);
    write_summary(summary_path, summary);
    log << "rollout: " << ens.summary.n << " trajectories, mean cumulative reward " << ens.summary.mean_reward
        << " (SE " << ens.summary.standard_error << "), reached " << ens.summary.reached << ", outbound "
        << ens.summary.outbound << ", horizon " << ens.summary.horizon << "; policy value at start "
        << summary["policy_value_start"].get<double>() << '\n';
    return kOk;
}

/// Oracle suite on seeded random instances, then file-level invariants of any
/// model and policy present at the configured paths.
inline int verify(const RunConfig& c, const Options& o, std::ostream& log) {
    OracleSuiteOptions opt;
    opt.instances = c.verify.instances;
    opt.scalar_ensembles = c.verify.scalar_ensembles;
    opt.seed = c.verify.seed;
    opt.threads = threads_of(c, o);
    VerificationReport report = run_oracle_suite(opt);

    std::optional<SparseModel> model;
    if (std::filesystem::exists(c.paths.model)) {
        try {
            std::optional<GridSpec> grid;
            if (std::filesystem::exists(c.paths.environment / "manifest.json"))
                grid = read_environment(c.paths.environment).grid;
            model = read_model(c.paths.model, grid);
            report.add("model.readable", true, c.paths.model.string());
        } catch (const IoError& e) {
            report.add("model.readable", false, e.what());
        }
        // Probabilities are stored as float32, so row sums carry rounding.
        if (model)
            for (auto& chk : check_model_invariants(*model, 1e-5)) report.checks.push_back(std::move(chk));
    }
    if (model && std::filesystem::exists(c.paths.policy)) {
        try {
            const PolicyValue pv = read_policy(c.paths.policy);
            const bool sized = pv.values.size() == model->n_states();
            report.add("policy.matches_model", sized);
            if (sized) {
                bool valid = pv.values.back() == 0.0;
                for (auto a : pv.actions) valid = valid && a < model->n_actions;
                report.add("policy.valid_actions_and_sink", valid);
                const std::vector<double> v = policy_value(*model, pv.actions, opt.threads);
                double worst = 0.0;
                for (std::size_t s = 0; s < v.size(); ++s)
                    worst = std::max(worst, std::abs(v[s] - pv.values[s]) / (1.0 + std::abs(v[s])));
                std::ostringstream d;
                d << "max relative difference " << worst;
                report.add("policy.values_consistent", worst <= 1e-4, d.str());
            }
        } catch (const IoError& e) {
            report.add("policy.readable", false, e.what());
        }
    }
    report.print(log);
    if (!report.passed()) {
        for (const auto& chk : report.checks)
            if (!chk.passed) throw VerificationFailure("verification failed: " + chk.name);
    }
    log << "all checks passed\n";
    return kOk;
}

/// Build time for every (size, thread count) pair as CSV.
inline int bench(const RunConfig& c, const Options& o, std::ostream& log) {
    std::vector<std::array<int, 3>> sizes = c.bench.sizes;
    if (sizes.empty()) sizes.push_back({c.grid.nx, c.grid.ny, c.grid.nt});
    std::vector<unsigned> threads = c.bench.threads;
    if (threads.empty()) threads = {1u, default_thread_count()};

    const auto path = out_or(o, c.paths.bench);
    ensure_parent(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "nx,ny,nt,n_states,n_realizations,threads,build_seconds,nnz\n";
    for (const auto& [nx, ny, nt] : sizes) {
        RunConfig sized = c;
        sized.grid.nx = nx;
        sized.grid.ny = ny;
        sized.grid.nt = nt;
        sized.double_gyre.grid = sized.radiation.grid = sized.obstacles.grid = sized.grid;
        sized.double_gyre.n_realizations = c.bench.n_realizations;
        sized.target = {std::min(c.target.i, nx - 1), std::min(c.target.j, ny - 1)};
        const Environment env = synthesize_environment(sized);
        const Problem prob = sized.problem();
        for (unsigned th : threads) {
            const auto t0 = std::chrono::steady_clock::now();
            const SubGridSpec sg = compute_subgrid(env.velocity, prob.actions, env.grid, c.subgrid_buffer, th);
            const SparseModel model = build_model(env, prob, sg, th);
            const double secs = seconds_since(t0);
            out << nx << ',' << ny << ',' << nt << ',' << env.grid.n_states() << ',' << c.bench.n_realizations << ','
                << th << ',' << secs << ',' << model.nnz() << '\n';
            log << nx << 'x' << ny << 'x' << nt << " threads=" << th << " build " << secs << " s\n";
        }
    }
    log << "timings written to " << path.string() << '\n';
    return kOk;
}

} // namespace flowplan::commands
