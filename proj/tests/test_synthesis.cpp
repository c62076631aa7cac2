#include "flowplan/synthesis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace flowplan;

namespace {

DoubleGyreConfig gyre(int n_modes = 4, int n_r = 200, double eps = 0.2) {
    DoubleGyreConfig c;
    c.grid = GridSpec{12, 10, 4, 1.0, 1.0, {}};
    c.n_modes = n_modes;
    c.n_realizations = n_r;
    c.eps = eps;
    c.rng_seed = 42;
    return c;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST(DoubleGyre, ZeroPerturbationGivesTheMeanInEveryRealization) {
    const DOVelocityField f = generate_double_gyre(gyre(3, 10, 0.0));
    for (double c : f.coeffs) EXPECT_EQ(c, 0.0);
    for (StateId s = 0; s < f.grid.sink(); ++s)
        for (int r = 0; r < f.n_realizations; ++r) {
            const Vec2 v = reconstruct_velocity(f, s, r);
            EXPECT_EQ(v.x, f.mean[2 * s]);
            EXPECT_EQ(v.y, f.mean[2 * s + 1]);
        }
}

TEST(DoubleGyre, ModesAreOrthonormalPerLayer) {
    const DOVelocityField f = generate_double_gyre(gyre(6));
    const GridSpec& g = f.grid;
    for (int t = 0; t < g.nt; ++t)
        for (int a = 0; a < f.n_modes; ++a)
            for (int b = 0; b < f.n_modes; ++b) {
                double dot = 0.0;
                for (std::size_t c = 0; c < g.n_cells(); ++c) {
                    const StateId s = g.state(g.cell_at(c), t);
                    dot += f.modes[f.mode_offset(a, s)] * f.modes[f.mode_offset(b, s)] +
                           f.modes[f.mode_offset(a, s) + 1] * f.modes[f.mode_offset(b, s) + 1];
                }
                EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-6) << "t=" << t << " modes " << a << "," << b;
            }
}

TEST(DoubleGyre, ModesFallBackToUnitVectorsOnTinyGrids) {
    DoubleGyreConfig c = gyre(8, 5);
    c.grid = GridSpec{2, 2, 2, 1.0, 1.0, {}};
    const DOVelocityField f = generate_double_gyre(c);
    for (int t = 0; t < 2; ++t)
        for (int a = 0; a < 8; ++a) {
            double nrm = 0.0;
            for (std::size_t cell = 0; cell < 4; ++cell) {
                const StateId s = c.grid.state(c.grid.cell_at(cell), t);
                nrm += std::pow(f.modes[f.mode_offset(a, s)], 2) + std::pow(f.modes[f.mode_offset(a, s) + 1], 2);
            }
            EXPECT_NEAR(nrm, 1.0, 1e-9);
        }
}

TEST(DoubleGyre, CoefficientMeansVanishStatistically) {
    const DOVelocityField f = generate_double_gyre(gyre(4, 4000));
    for (int t = 0; t < f.grid.nt; ++t)
        for (int m = 0; m < f.n_modes; ++m) {
            double sum = 0.0, sq = 0.0;
            for (int r = 0; r < f.n_realizations; ++r) {
                sum += f.coeff(t, r, m);
                sq += f.coeff(t, r, m) * f.coeff(t, r, m);
            }
            const double n = f.n_realizations;
            const double mean = sum / n;
            const double sd = std::sqrt(sq / n - mean * mean);
            EXPECT_LE(std::abs(mean), 3.0 * sd / std::sqrt(n)) << "t=" << t << " m=" << m;
        }
}

TEST(DoubleGyre, CoefficientsAreSkewed) {
    const DOVelocityField f = generate_double_gyre(gyre(1, 20000));
    double m2 = 0.0, m3 = 0.0;
    for (int r = 0; r < f.n_realizations; ++r) {
        const double x = f.coeff(0, r, 0);
        m2 += x * x;
        m3 += x * x * x;
    }
    m2 /= f.n_realizations;
    m3 /= f.n_realizations;
    EXPECT_GT(m3 / std::pow(m2, 1.5), 0.25);
}

TEST(DoubleGyre, TimeCorrelationLinksConsecutiveLayers) {
    DoubleGyreConfig c = gyre(1, 5000);
    c.time_correlation = 0.8;
    const DOVelocityField f = generate_double_gyre(c);
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (int r = 0; r < f.n_realizations; ++r) {
        const double a = f.coeff(1, r, 0), b = f.coeff(2, r, 0);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    EXPECT_NEAR(xy / std::sqrt(xx * yy), 0.8, 0.05);
}

TEST(DoubleGyre, PureFunctionOfConfigAndSeed) {
    const DOVelocityField a = generate_double_gyre(gyre());
    const DOVelocityField b = generate_double_gyre(gyre());
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.modes, b.modes);
    EXPECT_EQ(a.coeffs, b.coeffs);
    DoubleGyreConfig other = gyre();
    other.rng_seed = 43;
    EXPECT_NE(generate_double_gyre(other).coeffs, a.coeffs);
}

TEST(DoubleGyre, FiniteForVariedConfigs) {
    for (int n_modes : {0, 1, 5, 12})
        for (double eps : {0.0, 0.1, 2.0}) {
            DoubleGyreConfig c = gyre(n_modes, 7, eps);
            c.grid = GridSpec{5, 9, 3, 0.4, 0.3, {1.0, 1.0}};
            EXPECT_NO_THROW(generate_double_gyre(c).validate());
        }
}

TEST(DoubleGyre, MeanIsTwoCounterRotatingGyres) {
    DoubleGyreConfig c = gyre(0, 1, 0.0);
    c.grid = GridSpec{20, 20, 1, 1.0, 1.0, {}};
    c.modulation = 0.0;
    const DOVelocityField f = generate_double_gyre(c);
    // Zonal jet along the middle row is eastward at mid-domain.
    const StateId mid = c.grid.state({10, 10}, 0);
    EXPECT_GT(f.mean[2 * mid], 0.0);
    // Southern gyre rotates opposite to the northern one at its western edge.
    const StateId sw = c.grid.state({1, 5}, 0), nw = c.grid.state({1, 14}, 0);
    EXPECT_LT(f.mean[2 * sw + 1] * f.mean[2 * nw + 1], 0.0);
}

TEST(DoubleGyre, InvalidConfigRejected) {
    DoubleGyreConfig c = gyre();
    c.amplitude = 0.0;
    EXPECT_THROW(generate_double_gyre(c), ContractViolation);
    c = gyre();
    c.eps = -1.0;
    EXPECT_THROW(generate_double_gyre(c), ContractViolation);
}

TEST(Radiation, StationaryCloudGivesIdenticalSnapshots) {
    RadiationConfig c;
    c.grid = GridSpec{10, 4, 5, 1.0, 1.0, {}};
    c.cloud_speed = 0.0;
    const ScalarMeanField f = generate_radiation(c);
    for (int t = 1; t < 5; ++t)
        for (std::size_t k = 0; k < c.grid.n_cells(); ++k)
            EXPECT_EQ(f.values[t * c.grid.n_cells() + k], f.values[k]);
}

TEST(Radiation, NonNegative) {
    RadiationConfig c;
    c.grid = GridSpec{30, 5, 40, 1.0, 1.0, {}};
    c.cloud_depth = 1.0;
    const ScalarMeanField f = generate_radiation(c);
    for (double v : f.values) EXPECT_GE(v, 0.0);
}

TEST(Radiation, TranslatesWestward) {
    for (double speed : {1.0, 2.0, 0.5}) {
        RadiationConfig c;
        c.grid = GridSpec{40, 3, 10, 1.0, 1.0, {}};
        c.cloud_speed = speed;
        c.cloud_width = 4.0;
        const ScalarMeanField f = generate_radiation(c);
        for (int t = 0; t + 1 < c.grid.nt; ++t)
            for (int i = 0; i + 3 < c.grid.nx; ++i) {
                const double next = f.at({i, 1}, t + 1);
                // g(x, t+1) = g(x + speed dx, t), linearly interpolated between cells.
                const double shift = i + speed;
                const int i0 = static_cast<int>(std::floor(shift));
                const double w = shift - i0;
                const double shifted = (1.0 - w) * f.at({i0, 1}, t) + w * f.at({i0 + 1, 1}, t);
                const double tol = w == 0.0 ? 1e-12 : 0.02 * c.base;
                EXPECT_NEAR(next, shifted, tol) << "speed " << speed << " t " << t << " i " << i;
            }
    }
}

TEST(Obstacles, UnitSquareAdvancesOneColumnPerStep) {
    ObstacleConfig c;
    c.grid = GridSpec{8, 3, 6, 1.0, 1.0, {}};
    c.side = 1;
    c.speed = 1.0;
    c.initial_positions = {{0.0, 1.0}};
    const ObstacleMask m = generate_obstacles(c);
    for (int t = 0; t < 6; ++t) {
        EXPECT_EQ(m.count(t), 1u);
        EXPECT_TRUE(m.blocked({t, 1}, t));
    }
}

TEST(Obstacles, NothingBeforeEntryTime) {
    ObstacleConfig c;
    c.grid = GridSpec{10, 10, 8, 1.0, 1.0, {}};
    c.side = 3;
    c.entry_time = 4;
    c.initial_positions = {{2.0, 2.0}};
    const ObstacleMask m = generate_obstacles(c);
    for (int t = 0; t < 4; ++t) EXPECT_EQ(m.count(t), 0u);
    EXPECT_EQ(m.count(4), 9u);
    EXPECT_TRUE(m.blocked({2, 2}, 4));
    EXPECT_TRUE(m.blocked({3, 2}, 5));
}

TEST(Obstacles, SquaresAreClippedAtTheBoundary) {
    ObstacleConfig c;
    c.grid = GridSpec{10, 10, 12, 1.0, 1.0, {}};
    c.side = 4;
    c.speed = 1.0;
    c.initial_positions = {{-2.0, 3.0}};
    const ObstacleMask m = generate_obstacles(c);
    EXPECT_EQ(m.count(0), 8u);
    EXPECT_EQ(m.count(2), 16u);
    EXPECT_EQ(m.count(8), 16u);
    EXPECT_EQ(m.count(10), 8u);
    EXPECT_EQ(m.count(11), 4u);
}

TEST(Obstacles, RealSpeedsRoundToNearestCell) {
    ObstacleConfig c;
    c.grid = GridSpec{10, 3, 5, 1.0, 1.0, {}};
    c.side = 1;
    c.speed = 0.4;
    c.initial_positions = {{1.0, 0.0}};
    const ObstacleMask m = generate_obstacles(c);
    const int expected[] = {1, 1, 2, 2, 3};
    for (int t = 0; t < 5; ++t) EXPECT_TRUE(m.blocked({expected[t], 0}, t)) << t;
}

namespace {

VelocityEnsemble ensemble_from(const GridSpec& g, int n_r, const std::function<Vec2(int, StateId)>& f) {
    VelocityEnsemble e{g, n_r, std::vector<double>(2 * g.n_states() * n_r)};
    for (int r = 0; r < n_r; ++r)
        for (StateId s = 0; s < g.sink(); ++s) {
            const Vec2 v = f(r, s);
            e.data[e.offset(r, s)] = v.x;
            e.data[e.offset(r, s) + 1] = v.y;
        }
    return e;
}

double max_reconstruction_error(const VelocityEnsemble& e, const DOVelocityField& f) {
    double worst = 0.0, scale = 0.0;
    for (int r = 0; r < e.n_realizations; ++r)
        for (StateId s = 0; s < e.grid.sink(); ++s) {
            const Vec2 v = reconstruct_velocity(f, s, r);
            worst = std::max({worst, std::abs(v.x - e.data[e.offset(r, s)]), std::abs(v.y - e.data[e.offset(r, s) + 1])});
            scale = std::max({scale, std::abs(e.data[e.offset(r, s)]), std::abs(e.data[e.offset(r, s) + 1])});
        }
    return worst / std::max(scale, 1e-300);
}

} // namespace

TEST(ReduceOrder, IdenticalMembersGiveZeroCoefficients) {
    const GridSpec g{5, 4, 3, 1.0, 1.0, {}};
    const auto e = ensemble_from(g, 6, [](int, StateId s) { return Vec2{std::sin(s * 0.3), std::cos(s * 0.7)}; });
    const DOVelocityField f = reduce_order(e, 2);
    for (StateId s = 0; s < g.sink(); ++s) {
        EXPECT_NEAR(f.mean[2 * s], std::sin(s * 0.3), 1e-12);
        EXPECT_NEAR(f.mean[2 * s + 1], std::cos(s * 0.7), 1e-12);
    }
    EXPECT_LE(max_abs(f.coeffs), 1e-12);
}

TEST(ReduceOrder, RankOneEnsembleIsExact) {
    const GridSpec g{6, 5, 2, 1.0, 1.0, {}};
    const auto e = ensemble_from(g, 9, [](int r, StateId s) {
        const double k = 0.5 * r - 1.7;
        return Vec2{1.0 + k * std::sin(0.2 * s), -0.5 + k * std::cos(0.9 * s)};
    });
    EXPECT_LE(max_reconstruction_error(e, reduce_order(e, 1)), 1e-6);
}

TEST(ReduceOrder, RandomRankFiveEnsembleIsExactWithFiveModes) {
    const GridSpec g{7, 6, 3, 1.0, 1.0, {}};
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n01;
    std::vector<double> basis(5 * 2 * g.n_states()), weights(5 * 40 * g.nt), mean(2 * g.n_states());
    for (double& x : basis) x = n01(rng);
    for (double& x : weights) x = n01(rng);
    for (double& x : mean) x = n01(rng);
    const auto e = ensemble_from(g, 40, [&](int r, StateId s) {
        const int t = static_cast<int>(s / g.n_cells());
        Vec2 v{mean[2 * s], mean[2 * s + 1]};
        for (int k = 0; k < 5; ++k) {
            const double w = weights[(static_cast<std::size_t>(t) * 40 + r) * 5 + k];
            v.x += w * basis[(k * g.n_states() + s) * 2];
            v.y += w * basis[(k * g.n_states() + s) * 2 + 1];
        }
        return v;
    });
    EXPECT_LE(max_reconstruction_error(e, reduce_order(e, 5, 2)), 1e-5);
}

TEST(ReduceOrder, TruncationErrorIsTheDiscardedEnergy) {
    DoubleGyreConfig c = gyre(6, 30);
    c.eps = 0.5;
    const VelocityEnsemble e = sample_ensemble(generate_double_gyre(c));
    std::vector<std::vector<double>> sv;
    const DOVelocityField f = reduce_order(e, 3, 0, &sv);
    const GridSpec& g = e.grid;
    for (int t = 0; t < g.nt; ++t) {
        double residual = 0.0;
        for (int r = 0; r < e.n_realizations; ++r)
            for (std::size_t c2 = 0; c2 < g.n_cells(); ++c2) {
                const StateId s = g.state(g.cell_at(c2), t);
                const Vec2 v = reconstruct_velocity(f, s, r);
                residual += std::pow(v.x - e.data[e.offset(r, s)], 2) + std::pow(v.y - e.data[e.offset(r, s) + 1], 2);
            }
        double tail = 0.0;
        for (std::size_t k = 3; k < sv[t].size(); ++k) tail += sv[t][k] * sv[t][k];
        EXPECT_NEAR(residual, tail, 1e-8 * (1.0 + tail));
    }
}

TEST(ReduceOrder, RecoversTheGeneratingFieldStatistics) {
    const DOVelocityField src = generate_double_gyre(gyre(3, 50));
    const DOVelocityField f = reduce_order(sample_ensemble(src), 3);
    const VelocityEnsemble e = sample_ensemble(src);
    EXPECT_LE(max_reconstruction_error(e, f), 1e-9);
}

TEST(ReduceOrder, TooManyModesIsAContractViolation) {
    const GridSpec g{2, 2, 1, 1.0, 1.0, {}};
    const auto e = ensemble_from(g, 3, [](int r, StateId s) { return Vec2{1.0 * r, 1.0 * s}; });
    EXPECT_THROW(reduce_order(e, 4), ContractViolation);
    EXPECT_NO_THROW(reduce_order(e, 3));
}
