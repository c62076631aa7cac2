#pragma once

#include "flowplan/errors.hpp"
#include "flowplan/grid.hpp"
#include "flowplan/velocity_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace flowplan {

/// Mean of the stochastic scalar (energy-rate) field, [t][y][x].
struct ScalarMeanField {
    GridSpec grid;
    std::vector<double> values;

    ScalarMeanField() = default;
    explicit ScalarMeanField(const GridSpec& g) : grid(g), values(g.n_states(), 0.0) {}

    double at(StateId s) const { return values[s]; }
    double& at(Cell c, int t) { return values[grid.state(c, t)]; }
    double at(Cell c, int t) const { return values[grid.state(c, t)]; }

    void validate() const {
        require(values.size() == grid.n_states(), "scalar field: size mismatch");
        for (double v : values) require(std::isfinite(v), "scalar field: non-finite entry");
    }
};

/// Restricted cells, [t][y][x]; true = obstacle.
struct ObstacleMask {
    GridSpec grid;
    std::vector<std::uint8_t> cells;

    ObstacleMask() = default;
    explicit ObstacleMask(const GridSpec& g) : grid(g), cells(g.n_states(), 0) {}

    bool blocked(StateId s) const { return cells[s] != 0; }
    bool blocked(Cell c, int t) const { return cells[grid.state(c, t)] != 0; }
    void set(Cell c, int t, bool value = true) { cells[grid.state(c, t)] = value ? 1 : 0; }

    std::size_t count(int t) const {
        std::size_t n = 0;
        const std::size_t base = static_cast<std::size_t>(t) * grid.n_cells();
        for (std::size_t k = 0; k < grid.n_cells(); ++k) n += cells[base + k] != 0;
        return n;
    }

    void validate() const { require(cells.size() == grid.n_states(), "obstacle mask: size mismatch"); }
};

/**
 * True iff any sample point of the closed segment [p0, p1] lies in a masked
 * cell at layer t_idx. Samples are evenly spaced at most dx/2 apart and
 * include both endpoints; samples outside the domain are ignored.
 */
inline bool segment_blocked(const ObstacleMask& mask, const GridSpec& grid, Vec2 p0, Vec2 p1, int t_idx) {
    const Vec2 d = p1 - p0;
    const double len = norm(d);
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / (0.5 * grid.dx))));
    for (int k = 0; k <= pieces; ++k) {
        const double f = static_cast<double>(k) / pieces;
        const Vec2 p{p0.x + f * d.x, p0.y + f * d.y};
        if (auto c = grid.locate(p); c && mask.blocked(*c, t_idx)) return true;
    }
    return false;
}

/**
 * Per-layer bounding rectangle of the masked cells, in world coordinates.
 * A segment whose bounding box misses the rectangle cannot have a sample
 * inside a masked cell, which lets callers skip segment_blocked.
 */
class MaskBounds {
public:
    MaskBounds() = default;
    explicit MaskBounds(const ObstacleMask& mask) {
        const GridSpec& g = mask.grid;
        boxes_.resize(static_cast<std::size_t>(g.nt));
        for (int t = 0; t < g.nt; ++t) {
            Box& b = boxes_[t];
            int i0 = g.nx, i1 = -1, j0 = g.ny, j1 = -1;
            for (std::size_t c = 0; c < g.n_cells(); ++c) {
                if (!mask.cells[static_cast<std::size_t>(t) * g.n_cells() + c]) continue;
                const Cell cell = g.cell_at(c);
                i0 = std::min(i0, cell.i);
                i1 = std::max(i1, cell.i);
                j0 = std::min(j0, cell.j);
                j1 = std::max(j1, cell.j);
            }
            b.empty = i1 < 0;
            b.x0 = g.origin.x + i0 * g.dx;
            b.x1 = g.origin.x + (i1 + 1) * g.dx;
            b.y0 = g.origin.y + j0 * g.dx;
            b.y1 = g.origin.y + (j1 + 1) * g.dx;
        }
    }

    /// False only when no point of segment [p0, p1] can lie in a masked cell at t.
    bool may_touch(int t, Vec2 p0, Vec2 p1) const {
        const Box& b = boxes_[t];
        if (b.empty) return false;
        return std::max(p0.x, p1.x) >= b.x0 && std::min(p0.x, p1.x) <= b.x1 && std::max(p0.y, p1.y) >= b.y0 &&
               std::min(p0.y, p1.y) <= b.y1;
    }

    bool covers(const GridSpec& g) const { return boxes_.size() == static_cast<std::size_t>(g.nt); }

private:
    struct Box {
        bool empty = true;
        double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    };
    std::vector<Box> boxes_;
};

struct Action {
    int heading = 0;
    int speed_index = 0;
    double speed = 0.0;
    Vec2 velocity{};
};

/**
 * N_h headings evenly spaced over [0, 2*pi) times N_F nonzero speeds
 * F_max*(k+1)/N_F. Action index a = heading * N_F + speed_index.
 */
struct ActionSpace {
    int n_headings = 8;
    int n_speeds = 2;
    double f_max = 1.0;

    void validate() const {
        if (n_headings < 1 || n_speeds < 1) throw ContractViolation("action space: counts must be >= 1");
        if (!(f_max > 0.0)) throw ContractViolation("action space: f_max must be positive");
        if (size() > 65535) throw ContractViolation("action space: at most 65535 actions");
    }

    int size() const { return n_headings * n_speeds; }

    Action operator[](int a) const {
        require(a >= 0 && a < size(), "action index out of range");
        Action act;
        act.heading = a / n_speeds;
        act.speed_index = a % n_speeds;
        act.speed = f_max * (act.speed_index + 1) / n_speeds;
        const double theta = 2.0 * std::numbers::pi * act.heading / n_headings;
        act.velocity = {act.speed * std::cos(theta), act.speed * std::sin(theta)};
        return act;
    }
};

/// Everything the planner reads about the world. Immutable once built.
struct Environment {
    GridSpec grid;
    DOVelocityField velocity;
    ScalarMeanField scalar;
    ObstacleMask mask;

    void validate() const {
        grid.validate();
        velocity.validate();
        scalar.validate();
        mask.validate();
        auto same = [&](const GridSpec& g) {
            return g.nx == grid.nx && g.ny == grid.ny && g.nt == grid.nt && g.dx == grid.dx &&
                   g.dt == grid.dt && g.origin == grid.origin;
        };
        require(same(velocity.grid) && same(scalar.grid) && same(mask.grid),
                "environment: component grids disagree");
    }
};

} // namespace flowplan
