#pragma once

#include "flowplan/errors.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace flowplan {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Flat index into the time-expanded state space: s = t*N_c + j*nx + i.
/// The value N_g is reserved for the absorbing sink.
using StateId = std::uint32_t;

/// A spatial cell (i along x, j along y).
struct Cell {
    int i = 0;
    int j = 0;
    friend bool operator==(Cell, Cell) = default;
};

/// Cell plus time layer.
struct CellTime {
    int i = 0;
    int j = 0;
    int t = 0;
    Cell cell() const { return {i, j}; }
    friend bool operator==(CellTime, CellTime) = default;
};

/**
 * Uniform spatio-temporal grid. Cell (i, j) covers the half-open square
 * [origin + i*dx, origin + (i+1)*dx) x [origin + j*dx, origin + (j+1)*dx);
 * time layer k sits at k*dt.
 */
struct GridSpec {
    int nx = 1;
    int ny = 1;
    int nt = 1;
    double dx = 1.0;
    double dt = 1.0;
    Vec2 origin{};

    void validate() const {
        if (nx < 1 || ny < 1 || nt < 1)
            throw ContractViolation("grid: nx, ny, nt must be >= 1");
        if (!(dx > 0.0) || !(dt > 0.0))
            throw ContractViolation("grid: dx and dt must be positive");
        if (static_cast<double>(nx) * ny * nt >= 4294967295.0)
            throw ContractViolation("grid: N_g must be below 2^32 - 1");
    }

    std::size_t n_cells() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t n_states() const { return n_cells() * static_cast<std::size_t>(nt); }
    StateId sink() const { return static_cast<StateId>(n_states()); }

    bool contains(Cell c) const { return c.i >= 0 && c.i < nx && c.j >= 0 && c.j < ny; }

    std::size_t cell_index(Cell c) const {
        return static_cast<std::size_t>(c.j) * nx + static_cast<std::size_t>(c.i);
    }
    Cell cell_at(std::size_t local) const {
        return {static_cast<int>(local % nx), static_cast<int>(local / nx)};
    }

    StateId state(CellTime c) const {
        require(contains(c.cell()) && c.t >= 0 && c.t < nt, "grid: cell/time out of range");
        return static_cast<StateId>(static_cast<std::size_t>(c.t) * n_cells() + cell_index(c.cell()));
    }
    StateId state(Cell c, int t) const { return state(CellTime{c.i, c.j, t}); }
    /// state() without range checks, for cells already known to be valid.
    StateId flat(Cell c, int t) const noexcept {
        return static_cast<StateId>(static_cast<std::size_t>(t) * n_cells() + cell_index(c));
    }

    CellTime decode(StateId s) const {
        require(s < sink(), "grid: state index out of range (or sink)");
        const std::size_t local = s % n_cells();
        return {static_cast<int>(local % nx), static_cast<int>(local / nx),
                static_cast<int>(s / n_cells())};
    }

    Vec2 center(Cell c) const {
        return {origin.x + (c.i + 0.5) * dx, origin.y + (c.j + 0.5) * dx};
    }
    Vec2 center_of(StateId s) const { return center(decode(s).cell()); }

    /// Spatial cell containing `pos`, ignoring time. Outside the domain -> nullopt.
    std::optional<Cell> locate(Vec2 pos) const {
        const double fi = std::floor((pos.x - origin.x) / dx);
        const double fj = std::floor((pos.y - origin.y) / dx);
        if (!(fi >= 0.0 && fi < nx && fj >= 0.0 && fj < ny)) return std::nullopt;
        return Cell{static_cast<int>(fi), static_cast<int>(fj)};
    }
};

/// Maps a position and time index to its state; nullopt is the Outside marker.
inline std::optional<StateId> cell_of(const GridSpec& grid, Vec2 pos, int t_idx) {
    if (t_idx < 0 || t_idx >= grid.nt) return std::nullopt;
    auto c = grid.locate(pos);
    if (!c) return std::nullopt;
    return grid.state(*c, t_idx);
}

inline Vec2 center_of(const GridSpec& grid, StateId s) { return grid.center_of(s); }

} // namespace flowplan
