/// @file grid.hpp
/// @brief Uniform 1D staggered grid and the fluid state living on it.
///
/// Densities sit at cell centers, velocities at cell faces (nodes)
/// including both boundary faces, which are pinned to zero (no slip).

#pragma once

#include <cmath>
#include <vector>

#include "hsns/errors.hpp"

namespace hsns {

struct Grid {
    int n;     ///< cell count, >= 4
    double L;  ///< domain length, > 0
    double h;  ///< cell width L / n

    Grid(int n_cells, double length) : n(n_cells), L(length), h(length / n_cells) {
        if (n_cells < 4)
            throw std::domain_error(detail::msg("grid: need at least 4 cells, got ", n_cells));
        if (!(length > 0.0))
            throw std::domain_error(detail::msg("grid: length must be > 0, got ", length));
    }

    double x_center(int i) const { return (i + 0.5) * h; }
    double x_node(int j) const { return j * h; }

    bool operator==(const Grid&) const = default;
};

/// Density per cell, velocity per node, and the current time.
struct FluidState {
    std::vector<double> rho;  ///< size n
    std::vector<double> u;    ///< size n+1, u[0] = u[n] = 0
    double t = 0.0;

    static FluidState zeros(const Grid& g) {
        FluidState s;
        s.rho.assign(static_cast<std::size_t>(g.n), 0.0);
        s.u.assign(static_cast<std::size_t>(g.n) + 1, 0.0);
        return s;
    }
};

/// Uniform density at rest.
inline FluidState rest_state(const Grid& g, double rho0) {
    FluidState s = FluidState::zeros(g);
    for (auto& r : s.rho) r = rho0;
    return s;
}

/// Density and velocity perturbed by amp * sin(mode pi x / L); boundary
/// nodes stay at zero.
inline FluidState perturbed_state(const Grid& g, double rho0, double amp, int mode) {
    FluidState s = FluidState::zeros(g);
    for (int i = 0; i < g.n; ++i)
        s.rho[static_cast<std::size_t>(i)] = rho0 + amp * std::sin(mode * M_PI * g.x_center(i) / g.L);
    for (int j = 1; j < g.n; ++j)
        s.u[static_cast<std::size_t>(j)] = amp * std::sin(mode * M_PI * g.x_node(j) / g.L);
    return s;
}

/// Total mass sum rho_i h; conserved exactly by the flux-form update.
inline double total_mass(const FluidState& s, const Grid& g) {
    double m = 0.0;
    for (double r : s.rho) m += r;
    return m * g.h;
}

/// Flags whether the mean density respects the strict mass-fraction
/// condition M/|Q| <= rho_bar - delta.
inline bool mass_fraction_ok(const FluidState& s, const Grid& g, double rho_bar, double delta) {
    return total_mass(s, g) / g.L <= rho_bar - delta;
}

}  // namespace hsns
