#include "flowplan/oracle.hpp"
#include "flowplan/verify.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace flowplan;
using testing_support::uniform_flow_env;

namespace {

Problem east_only(Cell target, double speed = 1.0) {
    Problem p;
    p.actions = ActionSpace{1, 1, speed};
    p.target = target;
    p.reward.r_term = 10.0;
    p.reward.r_outbound = -100.0;
    return p;
}

} // namespace

TEST(DenseBuild, HandComputedTwoByTwo) {
    const GridSpec g{2, 2, 2, 1.0, 1.0, {}};
    const Environment env = uniform_flow_env(g, {0.0, 0.0}, 3);
    const oracle::DenseModel d = oracle::dense_build(env, east_only({1, 1}));
    const std::size_t out = 4;
    // (0,0) -> (1,0); (1,0) leaves; (0,1) -> target; target absorbs.
    EXPECT_EQ(d.count(0, 0, 0, 1), 3u);
    EXPECT_EQ(d.count(0, 0, 1, out), 3u);
    EXPECT_EQ(d.count(0, 0, 2, 3), 3u);
    EXPECT_EQ(d.count(0, 0, 3, out), 3u);
    EXPECT_DOUBLE_EQ(d.reward(0, 0, 0), -1.0);
    EXPECT_DOUBLE_EQ(d.reward(0, 0, 1), -100.0);
    EXPECT_DOUBLE_EQ(d.reward(0, 0, 2), 9.0);
    EXPECT_DOUBLE_EQ(d.reward(0, 0, 3), 0.0);
    // last layer: horizon everywhere except the target
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_EQ(d.count(1, 0, s, out), 3u);
        EXPECT_DOUBLE_EQ(d.reward(1, 0, s), -100.0);
    }
    EXPECT_DOUBLE_EQ(d.probability(0, 0, 0, 1), 1.0);
}

TEST(DenseBuild, RowsAreCountDistributions) {
    const oracle::Instance inst = oracle::random_instance(123);
    const oracle::DenseModel d = oracle::dense_build(inst.env, inst.problem);
    const std::size_t nc = inst.env.grid.n_cells();
    for (int t = 0; t < inst.env.grid.nt; ++t)
        for (int a = 0; a < d.n_actions; ++a)
            for (std::size_t s = 0; s < nc; ++s) {
                std::uint64_t total = 0;
                for (std::size_t c = 0; c <= nc; ++c) total += d.count(t, a, s, c);
                EXPECT_EQ(total, static_cast<std::uint64_t>(d.n_realizations));
            }
}

TEST(DenseBuild, TinySpeedInStillWaterStaysPut) {
    const GridSpec g{4, 3, 3, 1.0, 1.0, {}};
    const Environment env = uniform_flow_env(g, {0.0, 0.0}, 2);
    const oracle::DenseModel d = oracle::dense_build(env, east_only({3, 2}, 0.01));
    for (std::size_t s = 0; s < g.n_cells(); ++s) {
        if (g.cell_at(s) == Cell{3, 2}) continue;
        EXPECT_EQ(d.count(0, 0, s, s), 2u);
        EXPECT_EQ(d.count(1, 0, s, s), 2u);
        EXPECT_EQ(d.count(2, 0, s, g.n_cells()), 2u);
    }
}

TEST(DenseBuild, UniformShiftIsAPermutation) {
    const GridSpec g{5, 5, 2, 1.0, 1.0, {}};
    const Environment env = uniform_flow_env(g, {0.0, 1.0});
    const oracle::DenseModel d = oracle::dense_build(env, east_only({4, 4}));
    for (std::size_t s = 0; s < g.n_cells(); ++s) {
        const Cell c = g.cell_at(s);
        if (c == Cell{4, 4}) continue;
        const Cell dst{c.i + 1, c.j + 1};
        const std::size_t col = g.contains(dst) ? g.cell_index(dst) : g.n_cells();
        EXPECT_EQ(d.count(0, 0, s, col), 1u) << "s=" << s;
    }
}

TEST(DenseBuild, RefusesLargeGrids) {
    const GridSpec g{13, 5, 2, 1.0, 1.0, {}};
    const Environment env = uniform_flow_env(g, {0.0, 0.0});
    EXPECT_THROW(oracle::dense_build(env, east_only({1, 1})), ContractViolation);
    EXPECT_NO_THROW(oracle::dense_build(env, east_only({1, 1}), 65));
}

TEST(Densify, RoundTripsABuiltBlock) {
    CooBlock b;
    const GridSpec g{2, 1, 3, 1.0, 1.0, {}};
    b.rows = {2, 2, 3};
    b.cols = {4, g.sink(), 5};
    b.vals = {0.25, 0.75, 1.0};
    const std::vector<double> p = oracle::densify(b, g, 1);
    EXPECT_EQ(p, (std::vector<double>{0.25, 0.0, 0.75, 0.0, 1.0, 0.0}));
    b.cols[0] = 1;
    EXPECT_THROW(oracle::densify(b, g, 1), ContractViolation);
}

TEST(NaiveVi, ChainAndAllSink) {
    const GridSpec g{3, 1, 4, 1.0, 1.0, {}};
    const Environment env = uniform_flow_env(g, {0.0, 0.0});
    const oracle::DenseModel d = oracle::dense_build(env, east_only({2, 0}));
    const std::vector<double> v = oracle::naive_vi(d, 4);
    EXPECT_DOUBLE_EQ(v[0], 8.0);
    EXPECT_DOUBLE_EQ(v[1], 9.0);
    EXPECT_DOUBLE_EQ(v[2], 0.0);
    EXPECT_DOUBLE_EQ(v[3 * 3 + 0], -100.0);  // horizon layer
    EXPECT_EQ(v.back(), 0.0);
    EXPECT_THROW(oracle::naive_vi(d, 3), ContractViolation);

    const GridSpec h{2, 1, 2, 1.0, 1.0, {}};
    const Environment fast = uniform_flow_env(h, {5.0, 0.0});
    const std::vector<double> w = oracle::naive_vi(oracle::dense_build(fast, east_only({1, 0})), 2);
    EXPECT_DOUBLE_EQ(w[0], -100.0);
    EXPECT_DOUBLE_EQ(w[2], -100.0);
}

TEST(QValues, MaximumEqualsBackwardInductionValue) {
    const oracle::Instance inst = oracle::random_instance(55);
    const oracle::DenseModel d = oracle::dense_build(inst.env, inst.problem);
    const std::vector<double> v = oracle::naive_vi(d, inst.env.grid.nt);
    const std::vector<double> q = oracle::q_values(d, v);
    for (std::size_t s = 0; s < inst.env.grid.n_states(); ++s) {
        double best = -1e300;
        for (int a = 0; a < d.n_actions; ++a) best = std::max(best, q[s * d.n_actions + a]);
        EXPECT_EQ(best, v[s]);
    }
}

TEST(ScalarEnsemble, SampleMeanMatchesMeanField) {
    const oracle::Instance inst = oracle::random_instance(8);
    for (int n : {1, 2, 16, 64}) {
        const oracle::ScalarEnsemble e = oracle::make_scalar_ensemble(inst.env.scalar, n, 99);
        for (std::size_t s = 0; s < inst.env.grid.n_states(); ++s) {
            double m = 0.0;
            for (int k = 0; k < n; ++k) m += e.at(k, static_cast<StateId>(s));
            EXPECT_NEAR(m / n, inst.env.scalar.values[s], 1e-12);
        }
    }
}

TEST(ScalarEnsemble, PairedSamplesAreSymmetric) {
    const GridSpec g{3, 2, 2, 1.0, 1.0, {}};
    ScalarMeanField mean(g);
    for (std::size_t s = 0; s < g.n_states(); ++s) mean.values[s] = 0.1 * static_cast<double>(s);
    const oracle::ScalarEnsemble e = oracle::make_scalar_ensemble(mean, 2, 4, 0.5);
    for (StateId s = 0; s < g.n_states(); ++s) {
        EXPECT_NEAR(e.at(0, s) - mean.values[s], mean.values[s] - e.at(1, s), 1e-15);
        EXPECT_NE(e.at(0, s), mean.values[s]);
    }
}

TEST(ScalarEnsemble, SeedDeterminesSamples) {
    const GridSpec g{3, 3, 2, 1.0, 1.0, {}};
    const ScalarMeanField mean(g);
    EXPECT_EQ(oracle::make_scalar_ensemble(mean, 8, 1).samples, oracle::make_scalar_ensemble(mean, 8, 1).samples);
    EXPECT_NE(oracle::make_scalar_ensemble(mean, 8, 1).samples, oracle::make_scalar_ensemble(mean, 8, 2).samples);
    EXPECT_THROW(oracle::make_scalar_ensemble(mean, 0, 1), ContractViolation);
}

TEST(MonteCarloReward, SingleSampleIsTheMeanFieldReward) {
    oracle::Instance inst = oracle::random_instance(31);
    inst.problem.reward.objective = Objective::net_energy;
    const oracle::DenseModel d = oracle::dense_build(inst.env, inst.problem);
    const oracle::ScalarEnsemble e = oracle::make_scalar_ensemble(inst.env.scalar, 1, 3);
    const GridSpec& g = inst.env.grid;
    for (int t = 0; t < g.nt; ++t)
        for (int a = 0; a < d.n_actions; ++a)
            for (std::size_t s = 0; s < g.n_cells(); ++s)
                EXPECT_NEAR(oracle::mc_net_energy_reward(e, d, inst.problem, t, a, s), d.reward(t, a, s), 1e-12);
}

TEST(MonteCarloReward, HandComputedNetEnergy) {
    const GridSpec g{2, 1, 2, 1.0, 0.5, {}};
    Environment env = uniform_flow_env(g, {0.0, 0.0});
    env.scalar.at({0, 0}, 0) = 2.0;
    env.scalar.at({1, 0}, 1) = 4.0;
    Problem p = east_only({1, 0}, 2.0);
    p.reward.objective = Objective::net_energy;
    p.reward.c_f = 0.5;
    p.reward.c_r = 1.0;
    const oracle::DenseModel d = oracle::dense_build(env, p);
    const oracle::ScalarEnsemble e = oracle::make_scalar_ensemble(env.scalar, 4, 17);
    // (-0.5 * 4 + 0.5 * (2 + 4)) * 0.5 + 10
    EXPECT_NEAR(oracle::mc_net_energy_reward(e, d, p, 0, 0, 0), 10.5, 1e-12);
    EXPECT_NEAR(d.reward(0, 0, 0), 10.5, 1e-12);
}

TEST(RandomInstance, RespectsLimitsAndIsDeterministic) {
    oracle::InstanceLimits lim;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const oracle::Instance inst = oracle::random_instance(seed, lim);
        const GridSpec& g = inst.env.grid;
        EXPECT_LE(g.n_cells(), static_cast<std::size_t>(lim.max_cells));
        EXPECT_LE(g.nt, lim.max_nt);
        EXPECT_LE(inst.env.velocity.n_realizations, lim.max_realizations);
        EXPECT_NO_THROW(inst.env.validate());
        EXPECT_NO_THROW(inst.problem.validate(g));
    }
    const oracle::Instance a = oracle::random_instance(4), b = oracle::random_instance(4);
    EXPECT_EQ(a.env.velocity.coeffs, b.env.velocity.coeffs);
    EXPECT_EQ(a.env.mask.cells, b.env.mask.cells);
}

TEST(CompareWithOracle, FastPipelineAgrees) {
    for (std::uint64_t seed = 500; seed < 505; ++seed) {
        const OracleComparison c = compare_with_oracle(oracle::random_instance(seed), 2);
        EXPECT_TRUE(c.counts_equal) << c.detail;
        EXPECT_LE(c.max_reward_error, 1e-12);
        EXPECT_LE(c.max_value_error, 1e-9);
        EXPECT_TRUE(c.policy_optimal) << c.detail;
        EXPECT_TRUE(c.dag_converged);
    }
}

TEST(OracleSuite, AllChecksPass) {
    const VerificationReport r = run_oracle_suite({4, 3, 91, 2});
    for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
    EXPECT_EQ(r.checks.size(), 8u);
}

TEST(ModelInvariants, DetectCorruption) {
    const oracle::Instance inst = oracle::random_instance(12);
    const SparseModel good = build_model(inst.env, inst.problem,
                                         compute_subgrid(inst.env.velocity, inst.problem.actions, inst.env.grid, 1));
    auto failed = [](const SparseModel& m) {
        std::vector<std::string> names;
        for (const auto& c : check_model_invariants(m, 1e-9))
            if (!c.passed) names.push_back(c.name);
        return names;
    };
    EXPECT_TRUE(failed(good).empty());

    SparseModel m = good;
    m.blocks[0].vals[0] *= 0.5;
    EXPECT_NE(std::find(failed(m).begin(), failed(m).end(), "model.row_normalization"), failed(m).end());
    m = good;
    m.blocks[0].rows.erase(m.blocks[0].rows.begin());
    m.blocks[0].cols.erase(m.blocks[0].cols.begin());
    m.blocks[0].vals.erase(m.blocks[0].vals.begin());
    const auto names = failed(m);
    EXPECT_FALSE(names.empty());
    m = good;
    m.rewards[1] = std::nan("");
    EXPECT_EQ(failed(m), std::vector<std::string>{"model.finite_rewards"});
}
