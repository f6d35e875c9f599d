/// @file solver.hpp
/// @brief Time integration of the 1D stochastic compressible system:
///        upwind flux-form continuity, explicit upwind convection and
///        pressure gradient, implicit viscosity, Euler--Maruyama noise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "hsns/eos.hpp"
#include "hsns/errors.hpp"
#include "hsns/forcing.hpp"
#include "hsns/grid.hpp"
#include "hsns/rng.hpp"
#include "hsns/trajectory.hpp"

namespace hsns {

/// Raised when a step cannot be accepted after 40 halvings near the
/// density barrier. Carries the last accepted state.
struct StiffnessFailure : std::runtime_error {
    FluidState last_state;
    StiffnessFailure(const std::string& m, FluidState s)
        : std::runtime_error(m), last_state(std::move(s)) {}
};

enum class StepOutcome { Accepted, GuardReject };

/// Scratch buffers reused across steps of one trajectory.
struct SolverWorkspace {
    std::vector<double> flux;          // n+1, also reused for momentum fluxes
    std::vector<double> mom;           // n+1
    std::vector<double> rho_node_old;  // n+1
    std::vector<double> rho_node_new;  // n+1
    std::vector<double> cell_p;        // n
    std::vector<double> tri_c;         // n+1
    std::vector<double> tri_d;         // n+1
    std::vector<double> mode_table;    // K x (n+1): f_k sin(k pi x_j / L)
    std::vector<double> mode_table_sq; // n+1: sum_k f_k^2 sin^2
    int table_n = -1;
    int table_k = -1;
    double table_l = 0.0, table_f0 = 0.0, table_q = 0.0;

    void ensure(const Grid& g, const NoiseSpec& noise) {
        const auto nn = static_cast<std::size_t>(g.n) + 1;
        if (flux.size() != nn) {
            flux.assign(nn, 0.0);
            mom.assign(nn, 0.0);
            rho_node_old.assign(nn, 0.0);
            rho_node_new.assign(nn, 0.0);
            cell_p.assign(nn - 1, 0.0);
            tri_c.assign(nn, 0.0);
            tri_d.assign(nn, 0.0);
        }
        if (table_n != g.n || table_k != noise.K || table_l != noise.L ||
            table_f0 != noise.f0 || table_q != noise.q) {
            mode_table.assign(static_cast<std::size_t>(noise.K) * nn, 0.0);
            mode_table_sq.assign(nn, 0.0);
            for (int k = 1; k <= noise.K; ++k) {
                const double fk = noise.coefficient(k);
                for (int j = 1; j < g.n; ++j) {
                    const double v = fk * noise.mode_shape(k, g.x_node(j));
                    mode_table[static_cast<std::size_t>(k - 1) * nn + j] = v;
                    mode_table_sq[static_cast<std::size_t>(j)] += v * v;
                }
            }
            table_n = g.n;
            table_k = noise.K;
            table_l = noise.L;
            table_f0 = noise.f0;
            table_q = noise.q;
        }
    }
};

namespace detail {

inline void check_finite(std::span<const double> v, const char* term) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw NumericError(term, static_cast<int>(i),
                               msg("non-finite value in term '", term, "' at index ", i));
}

}  // namespace detail

/// CFL-limited step: cfl * min_i h / (|u| + sqrt(p'(rho_i))), intersected
/// with the explicit-part viscous limit h^2 / (4 nu_eff) and the hard cap.
inline double stable_dt(const FluidState& s, const Grid& g, const StepParams& sp,
                        const EosParams& eos) {
    double dt = sp.dt_max;
    const double nu = sp.nu_eff();
    if (nu > 0.0) dt = std::min(dt, g.h * g.h / (4.0 * nu));
    for (int i = 0; i < g.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double amax = std::max(std::abs(s.u[ii]), std::abs(s.u[ii + 1]));
        const double c = std::sqrt(pressure_derivative(s.rho[ii], eos));
        const double denom = amax + c;
        if (denom > 0.0) dt = std::min(dt, sp.cfl * g.h / denom);
    }
    return dt;
}

/// One operator-split update into `out`. Returns GuardReject when the
/// continuity update would put any cell inside the guard band; throws
/// NumericError on non-finite values, tagged by the responsible term.
inline StepOutcome step_into(const FluidState& in, double dt, std::span<const double> dw,
                             const Grid& g, const StepParams& sp, const EosParams& eos,
                             const NoiseSpec& noise, const ForceSpec& force,
                             SolverWorkspace& ws, FluidState& out,
                             IntervalStats* stats = nullptr) {
    const int n = g.n;
    const auto nn = static_cast<std::size_t>(n) + 1;
    const double h = g.h;
    const double lam = dt / h;
    ws.ensure(g, noise);

    out.rho.resize(nn - 1);
    out.u.resize(nn);

    // Node densities of the incoming state.
    for (int j = 1; j < n; ++j)
        ws.rho_node_old[static_cast<std::size_t>(j)] =
            0.5 * (in.rho[static_cast<std::size_t>(j - 1)] + in.rho[static_cast<std::size_t>(j)]);

    // (i) continuity: donor-cell upwind fluxes, exact flux form.
    ws.flux[0] = 0.0;
    ws.flux[static_cast<std::size_t>(n)] = 0.0;
    for (int j = 1; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double uj = in.u[jj];
        ws.flux[jj] = lam * uj * (uj > 0.0 ? in.rho[jj - 1] : in.rho[jj]);
    }
    bool reject = false;
    for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double r = (in.rho[ii] - ws.flux[ii + 1]) + ws.flux[ii];
        out.rho[ii] = r;
        if (!(r > 0.0) || r >= eos.rho_bar - sp.guard) reject = true;
    }
    detail::check_finite(out.rho, "continuity");
    if (reject) return StepOutcome::GuardReject;

    // (ii) momentum, explicit part: upwind convection of node momentum.
    ws.mom[0] = 0.0;
    ws.mom[static_cast<std::size_t>(n)] = 0.0;
    for (int j = 1; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        ws.mom[jj] = ws.rho_node_old[jj] * in.u[jj];
    }
    for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double ubar = 0.5 * (in.u[ii] + in.u[ii + 1]);
        ws.flux[ii] = ubar * (ubar > 0.0 ? ws.mom[ii] : ws.mom[ii + 1]);
    }
    for (int j = n - 1; j >= 1; --j) {
        const auto jj = static_cast<std::size_t>(j);
        ws.mom[jj] -= lam * (ws.flux[jj] - ws.flux[jj - 1]);
    }
    detail::check_finite({ws.mom.data(), nn}, "convection");

    // Explicit pressure gradient from the updated density.
    for (int i = 0; i < n; ++i)
        ws.cell_p[static_cast<std::size_t>(i)] = pressure(out.rho[static_cast<std::size_t>(i)], eos);
    for (int j = 1; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        ws.mom[jj] -= lam * (ws.cell_p[jj] - ws.cell_p[jj - 1]);
    }
    detail::check_finite({ws.mom.data(), nn}, "pressure");

    // Euler--Maruyama noise and deterministic force, at the pre-step state.
    double ito = 0.0, qv = 0.0, work = 0.0;
    for (int j = 1; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double uj = in.u[jj];
        const double rn = ws.rho_node_old[jj];
        const double env = velocity_envelope(uj, noise.alpha);
        double mode_sum = 0.0;
        for (int k = 0; k < noise.K; ++k)
            mode_sum += ws.mode_table[static_cast<std::size_t>(k) * nn + jj] *
                        dw[static_cast<std::size_t>(k)];
        const double gj = deterministic_force(g.x_node(j), rn, uj, force);
        ws.mom[jj] += rn * env * mode_sum + dt * rn * gj;
        if (stats) {
            ito += rn * env * mode_sum * uj * h;
            qv += 0.5 * dt * rn * env * env * ws.mode_table_sq[jj] * h;
            work += dt * rn * gj * uj * h;
        }
    }
    detail::check_finite({ws.mom.data(), nn}, "noise");

    // (iii) implicit viscous solve with no-slip boundary rows.
    const double nu = sp.nu_eff();
    const double off = -nu * dt / (h * h);
    for (int j = 1; j < n; ++j)
        ws.rho_node_new[static_cast<std::size_t>(j)] =
            0.5 * (out.rho[static_cast<std::size_t>(j - 1)] + out.rho[static_cast<std::size_t>(j)]);
    // Thomas sweep over interior nodes j = 1..n-1.
    {
        double beta = ws.rho_node_new[1] - 2.0 * off;
        ws.tri_c[1] = off / beta;
        ws.tri_d[1] = ws.mom[1] / beta;
        for (int j = 2; j < n; ++j) {
            const auto jj = static_cast<std::size_t>(j);
            beta = (ws.rho_node_new[jj] - 2.0 * off) - off * ws.tri_c[jj - 1];
            ws.tri_c[jj] = off / beta;
            ws.tri_d[jj] = (ws.mom[jj] - off * ws.tri_d[jj - 1]) / beta;
        }
        out.u[static_cast<std::size_t>(n) - 1] = ws.tri_d[static_cast<std::size_t>(n) - 1];
        for (int j = n - 2; j >= 1; --j) {
            const auto jj = static_cast<std::size_t>(j);
            out.u[jj] = ws.tri_d[jj] - ws.tri_c[jj] * out.u[jj + 1];
        }
    }
    out.u[0] = 0.0;
    out.u[static_cast<std::size_t>(n)] = 0.0;
    detail::check_finite(out.u, "viscous");

    if (stats) {
        double diss = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double du = (out.u[ii + 1] - out.u[ii]) / h;
            diss += du * du;
        }
        stats->dissipation += nu * diss * h * dt;
        stats->ito += ito;
        stats->noise_energy += qv;
        stats->force_work += work;
        stats->steps += 1;
    }

    out.t = in.t + dt;
    return StepOutcome::Accepted;
}

/// Value-returning convenience wrapper over step_into.
inline FluidState step(const FluidState& in, double dt, std::span<const double> dw,
                       const Grid& g, const StepParams& sp, const EosParams& eos,
                       const NoiseSpec& noise, const ForceSpec& force) {
    SolverWorkspace ws;
    FluidState out;
    if (step_into(in, dt, dw, g, sp, eos, noise, force, ws, out) == StepOutcome::GuardReject)
        throw NumericError("guard", -1,
                           "step: density entered the guard band; caller should halve dt");
    return out;
}

namespace detail {

inline void draw_increments(double dt, int K, SplitMix64& rng, std::vector<double>& dw) {
    dw.resize(static_cast<std::size_t>(K));
    const double sd = std::sqrt(dt);
    for (auto& w : dw) w = sd * rng.next_gaussian();
}

}  // namespace detail

/// Integrate from `initial` over `horizon` time units, recording snapshots
/// every `stride`. Snapshot times are hit exactly by clipping the step
/// size; guard rejections retry with halved dt, at most 40 times.
/// `rng_state` and `w_start` override the generator state and the absolute
/// Wiener coordinates (checkpoint resumption); by default the generator
/// starts at noise.seed and W at zero.
inline Trajectory simulate(const FluidState& initial, double horizon, double stride,
                           const Grid& grid, const EosParams& eos, const NoiseSpec& noise,
                           const ForceSpec& force, const StepParams& sp,
                           std::uint64_t config_hash = 0,
                           const std::uint64_t* rng_state = nullptr,
                           const std::vector<double>* w_start = nullptr) {
    if (!(horizon > 0.0))
        throw std::domain_error(detail::msg("simulate: horizon must be > 0, got ", horizon));
    if (!(stride > 0.0))
        throw std::domain_error(detail::msg("simulate: stride must be > 0, got ", stride));
    const auto n_strides = static_cast<std::size_t>(std::floor(horizon / stride + 1e-9));
    if (n_strides < 1)
        throw std::domain_error(detail::msg("simulate: horizon ", horizon,
                                            " shorter than one stride ", stride));

    Trajectory traj(grid, eos, noise, force, sp, stride);
    traj.t0 = initial.t;
    traj.seed = noise.seed;
    traj.config_hash = config_hash;
    traj.states.reserve(n_strides + 1);
    traj.states.push_back(initial);
    traj.w_increments.reserve(n_strides);
    traj.intervals.reserve(n_strides);

    SplitMix64 rng(rng_state ? *rng_state : noise.seed);
    SolverWorkspace ws;
    FluidState cur = initial;
    FluidState next = FluidState::zeros(grid);
    std::vector<double> dw;
    std::vector<double> w_cum =
        w_start ? *w_start : std::vector<double>(static_cast<std::size_t>(noise.K), 0.0);

    // When the start time sits on the stride grid, schedule snapshot
    // targets by absolute grid index; a resumed run then reproduces the
    // uninterrupted run's targets bit for bit.
    const auto n0 = static_cast<long long>(std::llround(initial.t / stride));
    const bool on_grid = static_cast<double>(n0) * stride == initial.t;

    for (std::size_t s = 1; s <= n_strides; ++s) {
        const double t_target =
            on_grid ? static_cast<double>(n0 + static_cast<long long>(s)) * stride
                    : traj.t0 + static_cast<double>(s) * stride;
        IntervalStats acc;
        std::vector<double> w_acc(static_cast<std::size_t>(noise.K), 0.0);
        while (cur.t < t_target) {
            const double t_before = cur.t;
            const double dt_stable = stable_dt(cur, grid, sp, eos);
            bool clipped = (t_target - cur.t) <= dt_stable;
            double dt = clipped ? (t_target - cur.t) : dt_stable;
            int halvings = 0;
            for (;;) {
                detail::draw_increments(dt, noise.K, rng, dw);
                if (step_into(cur, dt, dw, grid, sp, eos, noise, force, ws, next, &acc) ==
                    StepOutcome::Accepted)
                    break;
                if (++halvings > 40)
                    throw StiffnessFailure(
                        detail::msg("simulate: 40 dt halvings exhausted at t = ", cur.t), cur);
                dt *= 0.5;
                clipped = false;
            }
            std::swap(cur, next);
            if (clipped)
                cur.t = t_target;
            else if (!(cur.t > t_before))
                throw StiffnessFailure(
                    detail::msg("simulate: step size underflow at t = ", t_before), cur);
            for (std::size_t k = 0; k < dw.size(); ++k) {
                w_acc[k] += dw[k];
                w_cum[k] += dw[k];
            }
        }
        traj.states.push_back(cur);
        traj.w_increments.push_back(std::move(w_acc));
        traj.intervals.push_back(acc);
    }
    traj.final_rng_state = rng.state();
    traj.final_w = std::move(w_cum);
    return traj;
}

}  // namespace hsns
