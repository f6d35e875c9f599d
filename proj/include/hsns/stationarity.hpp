/// @file stationarity.hpp
/// @brief Trajectory time shifts, Krylov--Bogoliubov time averages of
///        bounded observables, shift-invariance gaps and ergodic
///        dispersion across ensembles.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsns/analysis.hpp"
#include "hsns/errors.hpp"
#include "hsns/trajectory.hpp"

namespace hsns {

/// Bounded functional on a finite trajectory window. Values are squashed
/// through tanh(scale * .), so |value| < 1 always.
struct Observable {
    enum class Kind { MomentumPairing, Energy, DensityPairing };

    Kind kind = Kind::Energy;
    std::vector<double> xi;  ///< test field at cell centers (pairings only)
    int window = 1;          ///< window length in strides, >= 1
    double scale = 1.0;      ///< squash scale s > 0
    std::string id;

    void validate(const Grid& g) const {
        if (window < 1)
            throw std::domain_error(detail::msg("observable ", id, ": window must be >= 1"));
        if (!(scale > 0.0))
            throw std::domain_error(detail::msg("observable ", id, ": scale must be > 0"));
        if (kind != Kind::Energy && static_cast<int>(xi.size()) != g.n)
            throw std::domain_error(detail::msg("observable ", id, ": test field size ",
                                                xi.size(), " does not match cell count ", g.n));
    }

    /// Evaluate at snapshot index `start` of a trajectory. Pairings
    /// average the spatial pairing over `window` consecutive snapshots
    /// (left rule); the energy kind reads one snapshot.
    double eval(const Trajectory& traj, std::size_t start) const {
        const Grid& g = traj.grid;
        if (kind == Kind::Energy) {
            return std::tanh(scale * total_energy(traj.states[start], g, traj.eos));
        }
        double acc = 0.0;
        for (int w = 0; w < window; ++w) {
            const FluidState& s = traj.states[start + static_cast<std::size_t>(w)];
            double pairing = 0.0;
            for (int i = 0; i < g.n; ++i) {
                const auto ii = static_cast<std::size_t>(i);
                const double q = kind == Kind::DensityPairing
                                     ? s.rho[ii]
                                     : s.rho[ii] * 0.5 * (s.u[ii] + s.u[ii + 1]);
                pairing += q * xi[ii] * g.h;
            }
            acc += pairing;
        }
        return std::tanh(scale * acc / window);
    }

    /// Last snapshot index this observable touches when evaluated at start.
    std::size_t last_index(std::size_t start) const {
        return start + static_cast<std::size_t>(kind == Kind::Energy ? 0 : window - 1);
    }
};

/// sin(k pi x / L) sampled at cell centers.
inline std::vector<double> sine_test_field(const Grid& g, int k) {
    std::vector<double> xi(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i)
        xi[static_cast<std::size_t>(i)] = std::sin(k * M_PI * g.x_center(i) / g.L);
    return xi;
}

/// Default observable dictionary: density pairings against the first four
/// sine modes, momentum pairings against the first three, and the bounded
/// energy.
inline std::vector<Observable> default_dictionary(const Grid& g) {
    std::vector<Observable> dict;
    for (int k = 1; k <= 4; ++k) {
        Observable o;
        o.kind = Observable::Kind::DensityPairing;
        o.xi = sine_test_field(g, k);
        o.id = "density_sin" + std::to_string(k);
        dict.push_back(std::move(o));
    }
    for (int k = 1; k <= 3; ++k) {
        Observable o;
        o.kind = Observable::Kind::MomentumPairing;
        o.xi = sine_test_field(g, k);
        o.id = "momentum_sin" + std::to_string(k);
        dict.push_back(std::move(o));
    }
    Observable e;
    e.kind = Observable::Kind::Energy;
    e.id = "energy";
    dict.push_back(std::move(e));
    return dict;
}

namespace detail {

inline std::size_t shift_index(const Trajectory& traj, double tau, const char* who) {
    const double rel = tau / traj.stride;
    const auto j = static_cast<long>(std::llround(rel));
    if (j < 0 || std::abs(rel - static_cast<double>(j)) > 1e-9)
        throw std::domain_error(
            msg(who, ": shift ", tau, " is not a nonnegative snapshot-grid multiple"));
    return static_cast<std::size_t>(j);
}

}  // namespace detail

/// Time shift S_tau: states shifted, Wiener path rebased to start at zero,
/// times relabeled to start at the original origin. tau must be a
/// snapshot-grid multiple and leave a nonempty window.
inline Trajectory shift(const Trajectory& traj, double tau) {
    const std::size_t j0 = detail::shift_index(traj, tau, "shift");
    if (j0 >= traj.size()) throw std::domain_error("shift: shifted window is empty");
    Trajectory out(traj.grid, traj.eos, traj.noise, traj.force, traj.params, traj.stride);
    out.t0 = traj.t0;
    out.seed = traj.seed;
    out.config_hash = traj.config_hash;
    out.states.assign(traj.states.begin() + static_cast<std::ptrdiff_t>(j0), traj.states.end());
    for (std::size_t s = 0; s < out.states.size(); ++s)
        out.states[s].t = out.t0 + static_cast<double>(s) * out.stride;
    out.w_increments.assign(traj.w_increments.begin() + static_cast<std::ptrdiff_t>(j0),
                            traj.w_increments.end());
    out.intervals.assign(traj.intervals.begin() + static_cast<std::ptrdiff_t>(j0),
                         traj.intervals.end());
    return out;
}

namespace detail {

/// Mean of obs over start indices offset..offset+count-1.
inline double kb_mean(const Trajectory& traj, const Observable& obs, std::size_t offset,
                      std::size_t count, const char* who) {
    if (count < 1) throw std::domain_error(msg(who, ": averaging horizon shorter than one stride"));
    const std::size_t need = obs.last_index(offset + count - 1);
    if (traj.size() == 0 || need > traj.size() - 1)
        throw std::domain_error(msg(who, ": insufficient horizon: need snapshot index ", need,
                                    ", trajectory has ", traj.size() - 1));
    // Kahan-compensated Riemann sum; these runs get long.
    double acc = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        const double y = obs.eval(traj, offset + j) - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc / static_cast<double>(count);
}

}  // namespace detail

/// Krylov--Bogoliubov time average: the Riemann sum
/// (1/J) sum_{j<J} obs(S_{t_j}[traj]) over the stride grid covering [0, S].
inline double kb_average(const Trajectory& traj, const Observable& obs, double S) {
    if (!(S > 0.0)) throw std::domain_error("kb_average: horizon must be > 0");
    const auto J = static_cast<std::size_t>(std::floor(S / traj.stride + 1e-9));
    return detail::kb_mean(traj, obs, 0, J, "kb_average");
}

/// |kb_average(shift(traj, tau), obs, S) - kb_average(traj, obs, S)|.
/// Bounded by 2 tau/S sup|obs| exactly (interior Riemann terms cancel).
inline double stationarity_gap(const Trajectory& traj, const Observable& obs, double tau,
                               double S) {
    if (!(S > 0.0)) throw std::domain_error("stationarity_gap: horizon must be > 0");
    const std::size_t j0 = detail::shift_index(traj, tau, "stationarity_gap");
    const auto J = static_cast<std::size_t>(std::floor(S / traj.stride + 1e-9));
    const double base = detail::kb_mean(traj, obs, 0, J, "stationarity_gap");
    const double shifted = detail::kb_mean(traj, obs, j0, J, "stationarity_gap");
    return std::abs(shifted - base);
}

/// Cauchy differences |nu_{S_{i+1}}(F) - nu_{S_i}(F)| along a horizon list.
inline std::vector<double> kb_convergence(const Trajectory& traj, const Observable& obs,
                                          std::span<const double> s_list) {
    if (s_list.size() < 2)
        throw std::domain_error("kb_convergence: need at least two horizons");
    std::vector<double> values;
    values.reserve(s_list.size());
    for (double S : s_list) values.push_back(kb_average(traj, obs, S));
    std::vector<double> diffs;
    diffs.reserve(values.size() - 1);
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        diffs.push_back(std::abs(values[i + 1] - values[i]));
    return diffs;
}

/// Unbiased sample variance of per-trajectory KB averages. Reported, not
/// asserted against a threshold.
inline double ergodic_dispersion(std::span<const Trajectory> ensemble, const Observable& obs,
                                 double S) {
    if (ensemble.size() < 2)
        throw std::domain_error("ergodic_dispersion: ensemble size must be >= 2");
    std::vector<double> v;
    v.reserve(ensemble.size());
    for (const auto& t : ensemble) v.push_back(kb_average(t, obs, S));
    double mu = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mu) * (x - mu);
    return var / (static_cast<double>(v.size()) - 1.0);
}

}  // namespace hsns
