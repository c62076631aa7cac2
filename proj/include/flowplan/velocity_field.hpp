#pragma once

#include "flowplan/errors.hpp"
#include "flowplan/grid.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace flowplan {

/**
 * Reduced-order stochastic velocity field
 *
 *     v(x, t; r) = mean(x, t) + sum_m coeffs(t, r, m) * mode_m(x, t)
 *
 * Storage orders (row-major, last index fastest):
 *   mean   [t][y][x][component]
 *   modes  [m][t][y][x][component]
 *   coeffs [t][r][m]
 */
struct DOVelocityField {
    GridSpec grid;
    int n_modes = 0;
    int n_realizations = 1;
    std::vector<double> mean;
    std::vector<double> modes;
    std::vector<double> coeffs;

    DOVelocityField() = default;
    DOVelocityField(const GridSpec& g, int modes_count, int realizations)
        : grid(g), n_modes(modes_count), n_realizations(realizations) {
        g.validate();
        require(modes_count >= 0, "velocity field: n_modes must be >= 0");
        require(realizations >= 1, "velocity field: n_realizations must be >= 1");
        mean.assign(2 * g.n_states(), 0.0);
        modes.assign(static_cast<std::size_t>(modes_count) * 2 * g.n_states(), 0.0);
        coeffs.assign(static_cast<std::size_t>(g.nt) * realizations * modes_count, 0.0);
    }

    std::size_t mean_offset(StateId s) const { return 2 * static_cast<std::size_t>(s); }
    std::size_t mode_offset(int m, StateId s) const {
        return (static_cast<std::size_t>(m) * grid.n_states() + s) * 2;
    }
    std::size_t coeff_offset(int t, int r) const {
        return (static_cast<std::size_t>(t) * n_realizations + r) * n_modes;
    }

    double& coeff(int t, int r, int m) { return coeffs[coeff_offset(t, r) + m]; }
    double coeff(int t, int r, int m) const { return coeffs[coeff_offset(t, r) + m]; }

    void validate() const {
        grid.validate();
        require(mean.size() == 2 * grid.n_states(), "velocity field: mean size mismatch");
        require(modes.size() == static_cast<std::size_t>(n_modes) * 2 * grid.n_states(),
                "velocity field: modes size mismatch");
        require(coeffs.size() == static_cast<std::size_t>(grid.nt) * n_realizations * n_modes,
                "velocity field: coeffs size mismatch");
        for (const auto* arr : {&mean, &modes, &coeffs})
            for (double v : *arr)
                require(std::isfinite(v), "velocity field: non-finite entry");
    }
};

/// v(s; r) = mean(s) + sum_m coeffs[t][r][m] * mode_m(s).
inline Vec2 reconstruct_velocity(const DOVelocityField& field, StateId s, int r) {
    require(s < field.grid.sink(), "reconstruct_velocity: state out of range");
    require(r >= 0 && r < field.n_realizations, "reconstruct_velocity: realization out of range");
    const int t = static_cast<int>(s / field.grid.n_cells());
    const std::size_t mo = field.mean_offset(s);
    double vx = field.mean[mo];
    double vy = field.mean[mo + 1];
    const double* mu = field.coeffs.data() + field.coeff_offset(t, r);
    for (int m = 0; m < field.n_modes; ++m) {
        const std::size_t o = field.mode_offset(m, s);
        vx += mu[m] * field.modes[o];
        vy += mu[m] * field.modes[o + 1];
    }
    return {vx, vy};
}

/// Dimensions that determine the footprint of a reduced-order field.
struct FieldDims {
    std::uint64_t n_states = 0;        // N_g
    std::uint64_t n_times = 0;         // N_t
    std::uint64_t n_modes = 0;         // N_m
    std::uint64_t n_realizations = 0;  // N_{r,v}
};

struct StorageFootprint {
    std::uint64_t reduced_scalars = 0;
    std::uint64_t full_scalars = 0;
};

/// reduced = 2(1+N_m)N_g + N_m N_r N_t (two velocity components for mean and
/// modes, plus coefficients); full = 2 N_g N_r (every realization stored).
inline StorageFootprint storage_footprint(const FieldDims& d) {
    return {2 * (1 + d.n_modes) * d.n_states + d.n_modes * d.n_realizations * d.n_times,
            2 * d.n_states * d.n_realizations};
}

inline StorageFootprint storage_footprint(const DOVelocityField& field) {
    return storage_footprint(FieldDims{field.grid.n_states(), static_cast<std::uint64_t>(field.grid.nt),
                                       static_cast<std::uint64_t>(field.n_modes),
                                       static_cast<std::uint64_t>(field.n_realizations)});
}

} // namespace flowplan
