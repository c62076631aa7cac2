#pragma once

#include "flowplan/environment.hpp"
#include "flowplan/errors.hpp"
#include "flowplan/grid.hpp"
#include "flowplan/parallel.hpp"
#include "flowplan/velocity_field.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace flowplan {

/**
 * Analytic stochastic double gyre in reduced-order form.
 *
 * Mean: psi = A(t) sin(pi X / Lx) sin(2 pi Y / Ly), two counter-rotating gyres
 * stacked in y with a zonal jet between them, A(t) = A (1 + modulation
 * sin(2 pi t dt / period)). Modes: low-wavenumber streamfunction fields with a
 * slowly drifting phase, orthonormalised per time layer. Coefficients:
 * zero-mean, unit-variance skewed two-component Gaussian mixture (75% at
 * -0.4, 25% at +1.2, component sd sqrt(0.52)), scaled by eps sqrt(2 N_c) / m
 * so that mode m contributes roughly eps / m velocity rms per cell, with
 * optional AR(1) correlation across time layers.
 */
struct DoubleGyreConfig {
    GridSpec grid;
    double amplitude = 4.0;
    double eps = 0.1;
    int n_modes = 4;
    int n_realizations = 100;
    std::uint64_t rng_seed = 1;
    double modulation = 0.25;
    double period = 40.0;
    double time_correlation = 0.0;

    void validate() const {
        grid.validate();
        if (!(amplitude > 0.0)) throw ContractViolation("double gyre: amplitude must be positive");
        if (!(eps >= 0.0)) throw ContractViolation("double gyre: eps must be >= 0");
        if (n_modes < 0) throw ContractViolation("double gyre: n_modes must be >= 0");
        if (static_cast<std::size_t>(n_modes) > 2 * grid.n_cells())
            throw ContractViolation("double gyre: n_modes exceeds 2 * N_c");
        if (n_realizations < 1) throw ContractViolation("double gyre: n_realizations must be >= 1");
        if (!(period > 0.0)) throw ContractViolation("double gyre: period must be positive");
        if (!(time_correlation >= 0.0 && time_correlation < 1.0))
            throw ContractViolation("double gyre: time_correlation must be in [0, 1)");
    }
};

namespace detail {

// Draw from the zero-mean, unit-variance skewed mixture.
inline double skewed_sample(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.52));
    const double centre = pick(rng) < 0.75 ? -0.4 : 1.2;
    return centre + normal(rng);
}

// Candidate mode wavenumbers, lowest first.
inline std::pair<int, int> mode_wavenumbers(int m) {
    static constexpr std::pair<int, int> table[] = {{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 1}, {1, 3},
                                                    {3, 2}, {2, 3}, {3, 3}, {4, 1}, {1, 4}, {4, 2}};
    constexpr int n = static_cast<int>(std::size(table));
    if (m < n) return table[m];
    return {1 + m % 5, 1 + (m / 5) % 5 + m / 25};
}

// Modified Gram-Schmidt (two passes) of `v` against `basis`; returns the
// remaining norm before normalisation.
inline double orthonormalise(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) dot += v[k] * b[k];
            for (std::size_t k = 0; k < v.size(); ++k) v[k] -= dot * b[k];
        }
    }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
        for (double& x : v) x /= nrm;
    return nrm;
}

} // namespace detail

inline DOVelocityField generate_double_gyre(const DoubleGyreConfig& cfg) {
    cfg.validate();
    const GridSpec& g = cfg.grid;
    const double pi = std::numbers::pi;
    const double lx = g.nx * g.dx;
    const double ly = g.ny * g.dx;
    const std::size_t nc = g.n_cells();
    DOVelocityField field(g, cfg.n_modes, cfg.n_realizations);

    for (int t = 0; t < g.nt; ++t) {
        const double phase = 2.0 * pi * t * g.dt / cfg.period;
        const double amp = cfg.amplitude * (1.0 + cfg.modulation * std::sin(phase));
        for (std::size_t c = 0; c < nc; ++c) {
            const Cell cell = g.cell_at(c);
            const Vec2 p = g.center(cell) - g.origin;
            const double sx = std::sin(pi * p.x / lx), cx = std::cos(pi * p.x / lx);
            const double sy = std::sin(2.0 * pi * p.y / ly), cy = std::cos(2.0 * pi * p.y / ly);
            const std::size_t o = field.mean_offset(g.state(cell, t));
            field.mean[o] = -amp * (2.0 * pi / ly) * sx * cy;
            field.mean[o + 1] = amp * (pi / lx) * cx * sy;
        }

        // Orthonormal modes for this layer: analytic candidates first, unit
        // vectors as a fallback on grids too coarse to resolve them.
        std::vector<std::vector<double>> basis;
        int candidate = 0;
        std::size_t unit = 0;
        while (static_cast<int>(basis.size()) < cfg.n_modes) {
            std::vector<double> v(2 * nc, 0.0);
            if (candidate < 4 * cfg.n_modes + 8) {
                auto [k, l] = detail::mode_wavenumbers(candidate);
                const double drift = 0.5 * std::sin(phase + candidate);
                for (std::size_t c = 0; c < nc; ++c) {
                    const Vec2 p = g.center(g.cell_at(c)) - g.origin;
                    const double ax = k * pi * p.x / lx + drift;
                    const double ay = l * pi * p.y / ly;
                    v[2 * c] = -(l * pi / ly) * std::sin(ax) * std::cos(ay);
                    v[2 * c + 1] = (k * pi / lx) * std::cos(ax) * std::sin(ay);
                }
                ++candidate;
            } else {
                require(unit < 2 * nc, "double gyre: cannot build enough orthonormal modes");
                v[unit++] = 1.0;
            }
            if (detail::orthonormalise(v, basis) > 1e-8) basis.push_back(std::move(v));
        }
        for (int m = 0; m < cfg.n_modes; ++m)
            for (std::size_t c = 0; c < nc; ++c) {
                const std::size_t o = field.mode_offset(m, g.state(g.cell_at(c), t));
                field.modes[o] = basis[m][2 * c];
                field.modes[o + 1] = basis[m][2 * c + 1];
            }
    }

    if (cfg.eps > 0.0 && cfg.n_modes > 0) {
        std::mt19937_64 rng(cfg.rng_seed);
        const double rho = cfg.time_correlation;
        const double innovation = std::sqrt(1.0 - rho * rho);
        for (int r = 0; r < cfg.n_realizations; ++r)
            for (int m = 0; m < cfg.n_modes; ++m) {
                const double scale = cfg.eps * std::sqrt(2.0 * static_cast<double>(nc)) / (m + 1);
                double xi = detail::skewed_sample(rng);
                for (int t = 0; t < g.nt; ++t) {
                    if (t > 0) xi = rho * xi + innovation * detail::skewed_sample(rng);
                    field.coeff(t, r, m) = scale * xi;
                }
            }
    }
    return field;
}

/**
 * Mean solar-radiation field under a cloud front drifting west:
 * g = base (1 - depth * logistic((X - front(t)) / width)), front(t) =
 * start - speed * dx * t. West of the front is sunny; the sunny region
 * shrinks as the front advances.
 */
struct RadiationConfig {
    GridSpec grid;
    double base = 1.0;
    double cloud_speed = 0.5;  // cells per step, westward
    double cloud_width = 3.0;  // cells
    double cloud_depth = 0.9;
    double cloud_start = -1.0;  // front position in cells; < 0 picks 0.75 * nx

    void validate() const {
        grid.validate();
        if (!(base >= 0.0)) throw ContractViolation("radiation: base must be >= 0");
        if (!(cloud_width > 0.0)) throw ContractViolation("radiation: cloud_width must be positive");
        if (!(cloud_depth >= 0.0 && cloud_depth <= 1.0))
            throw ContractViolation("radiation: cloud_depth must be in [0, 1]");
    }
};

inline ScalarMeanField generate_radiation(const RadiationConfig& cfg) {
    cfg.validate();
    const GridSpec& g = cfg.grid;
    ScalarMeanField field(g);
    const double start = (cfg.cloud_start < 0.0 ? 0.75 * g.nx : cfg.cloud_start) * g.dx;
    const double width = cfg.cloud_width * g.dx;
    for (int t = 0; t < g.nt; ++t) {
        const double front = start - cfg.cloud_speed * g.dx * t;
        for (std::size_t c = 0; c < g.n_cells(); ++c) {
            const Cell cell = g.cell_at(c);
            const double x = g.center(cell).x - g.origin.x;
            const double cover = 1.0 / (1.0 + std::exp(-(x - front) / width));
            field.at(cell, t) = cfg.base * (1.0 - cfg.cloud_depth * cover);
        }
    }
    return field;
}

/// Square restricted regions drifting east. Positions are lower-left corners
/// in cell units at the entry time; rasterised by rounding to the nearest cell
/// and clipped to the domain.
struct ObstacleConfig {
    GridSpec grid;
    int side = 5;
    double entry_time = 0.0;  // time index
    double speed = 1.0;       // cells per step, eastward
    std::vector<Vec2> initial_positions;

    void validate() const {
        grid.validate();
        if (side < 1) throw ContractViolation("obstacles: side must be >= 1");
    }
};

inline ObstacleMask generate_obstacles(const ObstacleConfig& cfg) {
    cfg.validate();
    const GridSpec& g = cfg.grid;
    ObstacleMask mask(g);
    for (int t = 0; t < g.nt; ++t) {
        if (t < cfg.entry_time) continue;
        for (const Vec2& p0 : cfg.initial_positions) {
            const int i0 = static_cast<int>(std::lround(p0.x + cfg.speed * (t - cfg.entry_time)));
            const int j0 = static_cast<int>(std::lround(p0.y));
            for (int j = std::max(j0, 0); j < std::min(j0 + cfg.side, g.ny); ++j)
                for (int i = std::max(i0, 0); i < std::min(i0 + cfg.side, g.nx); ++i) mask.set({i, j}, t);
        }
    }
    return mask;
}

/// Full velocity ensemble, [r][t][y][x][component].
struct VelocityEnsemble {
    GridSpec grid;
    int n_realizations = 0;
    std::vector<double> data;

    std::size_t offset(int r, StateId s) const {
        return (static_cast<std::size_t>(r) * grid.n_states() + s) * 2;
    }
};

/// Expand a reduced-order field into every realization.
inline VelocityEnsemble sample_ensemble(const DOVelocityField& field) {
    VelocityEnsemble ens{field.grid, field.n_realizations,
                         std::vector<double>(2 * field.grid.n_states() * field.n_realizations)};
    for (int r = 0; r < field.n_realizations; ++r)
        for (StateId s = 0; s < field.grid.sink(); ++s) {
            const Vec2 v = reconstruct_velocity(field, s, r);
            ens.data[ens.offset(r, s)] = v.x;
            ens.data[ens.offset(r, s) + 1] = v.y;
        }
    return ens;
}

/**
 * Per time layer: subtract the ensemble mean, take the thin SVD of the
 * (realization x 2 N_c) anomaly matrix, keep the leading right singular
 * vectors as modes and the projections U * Sigma as coefficients. The
 * singular values of every layer are written to `singular_values` when given.
 */
inline DOVelocityField reduce_order(const VelocityEnsemble& ens, int n_modes, unsigned threads = 0,
                                    std::vector<std::vector<double>>* singular_values = nullptr) {
    const GridSpec& g = ens.grid;
    g.validate();
    require(ens.n_realizations >= 1, "reduce_order: empty ensemble");
    require(ens.data.size() == 2 * g.n_states() * ens.n_realizations, "reduce_order: ensemble size mismatch");
    const std::size_t width = 2 * g.n_cells();
    require(n_modes >= 0 && static_cast<std::size_t>(n_modes) <= std::min<std::size_t>(ens.n_realizations, width),
            "reduce_order: n_modes must be <= min(N_r, 2 N_c)");

    DOVelocityField field(g, n_modes, ens.n_realizations);
    if (singular_values) singular_values->assign(g.nt, {});

    parallel_for(static_cast<std::size_t>(g.nt), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t tt = begin; tt < end; ++tt) {
            const int t = static_cast<int>(tt);
            const std::size_t layer = static_cast<std::size_t>(t) * g.n_cells() * 2;
            Eigen::MatrixXd x(ens.n_realizations, static_cast<Eigen::Index>(width));
            for (int r = 0; r < ens.n_realizations; ++r)
                for (std::size_t k = 0; k < width; ++k)
                    x(r, static_cast<Eigen::Index>(k)) =
                        ens.data[static_cast<std::size_t>(r) * g.n_states() * 2 + layer + k];
            const Eigen::RowVectorXd mean = x.colwise().mean();
            x.rowwise() -= mean;
            for (std::size_t k = 0; k < width; ++k) field.mean[layer + k] = mean(static_cast<Eigen::Index>(k));
            if (n_modes == 0) continue;

            Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Eigen::MatrixXd& v = svd.matrixV();
            const Eigen::MatrixXd proj = x * v.leftCols(n_modes);
            for (int m = 0; m < n_modes; ++m)
                for (std::size_t k = 0; k < width; ++k)
                    field.modes[static_cast<std::size_t>(m) * g.n_states() * 2 + layer + k] =
                        v(static_cast<Eigen::Index>(k), m);
            for (int r = 0; r < ens.n_realizations; ++r)
                for (int m = 0; m < n_modes; ++m) field.coeff(t, r, m) = proj(r, m);
            if (singular_values) {
                const auto& sv = svd.singularValues();
                (*singular_values)[tt].assign(sv.data(), sv.data() + sv.size());
            }
        }
    });
    return field;
}

} // namespace flowplan
