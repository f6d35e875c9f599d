/// @file analysis.hpp
/// @brief Energy accounting, Bogovskii functional, pathwise inequality
///        residuals, Gronwall utilities, moment estimators and decay
///        envelopes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hsns/eos.hpp"
#include "hsns/errors.hpp"
#include "hsns/forcing.hpp"
#include "hsns/grid.hpp"
#include "hsns/math.hpp"
#include "hsns/trajectory.hpp"

namespace hsns {

struct EnergyReport {
    double t = 0.0;
    double kinetic = 0.0;      ///< sum 1/2 rho ubar^2 h (face-to-cell averaging)
    double potential = 0.0;    ///< sum P(rho) h
    double total = 0.0;        ///< kinetic + potential
    double dissipation = 0.0;  ///< instantaneous rate nu_eff sum (du)^2 h
    double mass = 0.0;
    double rho_min = 0.0;
    double rho_max = 0.0;
};

/// Convex-extension energy density E(rho, m): 0 at (0,0), infinite for
/// momentum on vacuum, 1/2 m^2/rho + P(rho) otherwise.
inline double energy_density(double rho, double m, const EosParams& eos) {
    if (rho == 0.0) return m == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return 0.5 * m * m / rho + pressure_potential(rho, eos);
}

inline EnergyReport energy(const FluidState& s, const Grid& g, const EosParams& eos,
                           const StepParams& sp) {
    EnergyReport r;
    r.t = s.t;
    r.rho_min = std::numeric_limits<double>::infinity();
    r.rho_max = -std::numeric_limits<double>::infinity();
    const double nu = sp.nu_eff();
    for (int i = 0; i < g.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double rho = s.rho[ii];
        const double ubar = 0.5 * (s.u[ii] + s.u[ii + 1]);
        if (!std::isfinite(rho) || !std::isfinite(ubar))
            throw NumericError("energy", i, detail::msg("non-finite state in cell ", i));
        r.kinetic += 0.5 * rho * ubar * ubar * g.h;
        r.potential += pressure_potential(rho, eos) * g.h;
        const double du = (s.u[ii + 1] - s.u[ii]) / g.h;
        r.dissipation += nu * du * du * g.h;
        r.mass += rho * g.h;
        r.rho_min = std::min(r.rho_min, rho);
        r.rho_max = std::max(r.rho_max, rho);
    }
    r.total = r.kinetic + r.potential;
    return r;
}

/// Total energy only (kinetic + potential); the common observable.
inline double total_energy(const FluidState& s, const Grid& g, const EosParams& eos) {
    double e = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double ubar = 0.5 * (s.u[ii] + s.u[ii + 1]);
        e += (0.5 * s.rho[ii] * ubar * ubar + pressure_potential(s.rho[ii], eos)) * g.h;
    }
    return e;
}

/// Exact 1D Bogovskii operator: B[f](x) = integral_0^x f, realized as
/// prefix sums of cell values. Requires f to have zero mean; the discrete
/// derivative of the result reproduces f and both boundary values vanish
/// (the right one up to the zero-mean tolerance).
inline std::vector<double> bogovskii_1d(std::span<const double> f, const Grid& g) {
    if (static_cast<int>(f.size()) != g.n)
        throw std::domain_error(detail::msg("bogovskii_1d: field size ", f.size(),
                                            " does not match cell count ", g.n));
    double mean = 0.0, norm1 = 0.0;
    for (double v : f) {
        mean += v * g.h;
        norm1 += std::abs(v) * g.h;
    }
    if (std::abs(mean) > 1e-10 * norm1)
        throw std::domain_error(
            detail::msg("bogovskii_1d: field must have zero mean, got ", mean));
    std::vector<double> b(static_cast<std::size_t>(g.n) + 1, 0.0);
    for (int j = 0; j < g.n; ++j)
        b[static_cast<std::size_t>(j) + 1] = b[static_cast<std::size_t>(j)] + g.h * f[static_cast<std::size_t>(j)];
    return b;
}

/// Dissipation functional D = E - eps * sum rho ubar Bbar h with
/// B = B[rho - M/|Q|]. For (numerically) uniform density the correction
/// vanishes identically.
inline double dissipation_functional(const FluidState& s, const Grid& g, const EosParams& eos,
                                     double eps, double M) {
    if (!(eps >= 0.0))
        throw std::domain_error(detail::msg("dissipation_functional: eps must be >= 0, got ", eps));
    const double e = total_energy(s, g, eos);
    if (eps == 0.0) return e;
    const double mean = M / g.L;
    std::vector<double> f(static_cast<std::size_t>(g.n));
    double norm1 = 0.0;
    for (int i = 0; i < g.n; ++i) {
        f[static_cast<std::size_t>(i)] = s.rho[static_cast<std::size_t>(i)] - mean;
        norm1 += std::abs(f[static_cast<std::size_t>(i)]) * g.h;
    }
    if (norm1 <= 1e-14 * M) return e;
    const std::vector<double> b = bogovskii_1d(f, g);
    double corr = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double ubar = 0.5 * (s.u[ii] + s.u[ii + 1]);
        const double bbar = 0.5 * (b[ii] + b[ii + 1]);
        corr += s.rho[ii] * ubar * bbar * g.h;
    }
    return e - eps * corr;
}

namespace detail {

inline double node_density(const FluidState& s, int j) {
    return 0.5 * (s.rho[static_cast<std::size_t>(j - 1)] + s.rho[static_cast<std::size_t>(j)]);
}

/// 1/2 integral rho sum_k F_k^2 dx at one snapshot.
inline double noise_energy_rate(const FluidState& s, const Grid& g, const NoiseSpec& noise) {
    double r = 0.0;
    for (int j = 1; j < g.n; ++j) {
        const double env = velocity_envelope(s.u[static_cast<std::size_t>(j)], noise.alpha);
        double sq = 0.0;
        for (int k = 1; k <= noise.K; ++k) {
            const double fk = noise.coefficient(k) * noise.mode_shape(k, g.x_node(j));
            sq += fk * fk;
        }
        r += 0.5 * node_density(s, j) * env * env * sq * g.h;
    }
    return r;
}

inline double force_work_rate(const FluidState& s, const Grid& g, const ForceSpec& force) {
    double r = 0.0;
    for (int j = 1; j < g.n; ++j) {
        const double uj = s.u[static_cast<std::size_t>(j)];
        r += node_density(s, j) * deterministic_force(g.x_node(j), node_density(s, j), uj, force) *
             uj * g.h;
    }
    return r;
}

/// integral rho F_k u dx at one snapshot, for every retained mode.
inline std::vector<double> ito_integrands(const FluidState& s, const Grid& g,
                                          const NoiseSpec& noise) {
    std::vector<double> v(static_cast<std::size_t>(noise.K), 0.0);
    for (int j = 1; j < g.n; ++j) {
        const double uj = s.u[static_cast<std::size_t>(j)];
        const double env = velocity_envelope(uj, noise.alpha);
        const double w = node_density(s, j) * env * uj * g.h;
        for (int k = 1; k <= noise.K; ++k)
            v[static_cast<std::size_t>(k - 1)] +=
                w * noise.coefficient(k) * noise.mode_shape(k, g.x_node(j));
    }
    return v;
}

inline double dissipation_rate(const FluidState& s, const Grid& g, double nu) {
    double d = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const double du = (s.u[ii + 1] - s.u[ii]) / g.h;
        d += nu * du * du * g.h;
    }
    return d;
}

}  // namespace detail

/// The terms of the pathwise energy inequality over a snapshot window.
/// The inequality asserts residual() <= 0.
struct EnergyInequalityTerms {
    double energy_change = 0.0;    ///< E(tau2) - E(tau1)
    double dissipation = 0.0;      ///< integral of S(du):du
    double force_work = 0.0;       ///< integral rho g . u
    double ito_correction = 0.0;   ///< 1/2 integral rho sum |F_k|^2
    double martingale = 0.0;       ///< sum_k int (int rho F_k u dx) dW_k

    double residual() const {
        return energy_change + dissipation - force_work - ito_correction - martingale;
    }
};

/// Computes the energy inequality terms on [tau1, tau2]. Deterministic
/// time integrals use the trapezoid rule on snapshots; the Ito sum uses
/// left-point integrands against the recorded snapshot increments.
inline EnergyInequalityTerms energy_inequality_terms(const Trajectory& traj, double tau1,
                                                     double tau2) {
    const std::size_t s1 = traj.index_of(tau1, "energy_inequality_residual");
    const std::size_t s2 = traj.index_of(tau2, "energy_inequality_residual");
    if (s2 < s1)
        throw std::domain_error("energy_inequality_residual: window endpoints out of order");
    EnergyInequalityTerms out;
    out.energy_change = total_energy(traj.states[s2], traj.grid, traj.eos) -
                        total_energy(traj.states[s1], traj.grid, traj.eos);
    if (s2 == s1) return out;
    const std::size_t m = s2 - s1 + 1;
    std::vector<double> diss(m), work(m), qv(m);
    for (std::size_t s = 0; s < m; ++s) {
        const FluidState& st = traj.states[s1 + s];
        diss[s] = detail::dissipation_rate(st, traj.grid, traj.params.nu_eff());
        work[s] = detail::force_work_rate(st, traj.grid, traj.force);
        qv[s] = detail::noise_energy_rate(st, traj.grid, traj.noise);
    }
    out.dissipation = trapezoid(diss, traj.stride);
    out.force_work = trapezoid(work, traj.stride);
    out.ito_correction = trapezoid(qv, traj.stride);
    for (std::size_t s = s1; s < s2; ++s) {
        const std::vector<double> gk = detail::ito_integrands(traj.states[s], traj.grid, traj.noise);
        for (std::size_t k = 0; k < gk.size(); ++k) out.martingale += gk[k] * traj.w_increments[s][k];
    }
    return out;
}

inline double energy_inequality_residual(const Trajectory& traj, double tau1, double tau2) {
    return energy_inequality_terms(traj, tau1, tau2).residual();
}

/// Renormalization functions b for the continuity residual.
struct RenormFunction {
    enum class Kind { Id, XLogX, Const };
    Kind kind = Kind::Id;
    double c = 0.0;  ///< value when kind == Const

    double value(double r) const {
        switch (kind) {
            case Kind::Id: return r;
            case Kind::XLogX: return r > 0.0 ? r * std::log(r) : 0.0;
            case Kind::Const: return c;
        }
        throw ConfigError("renorm_residual: unknown b kind");
    }

    /// b'(r) r - b(r).
    double defect(double r) const {
        switch (kind) {
            case Kind::Id: return 0.0;
            case Kind::XLogX: return r;
            case Kind::Const: return -c;
        }
        throw ConfigError("renorm_residual: unknown b kind");
    }
};

/// Discrete residual of the renormalized continuity identity against a
/// cell-sampled test function psi, O(h + dt) for smooth fields.
inline double renorm_residual(const Trajectory& traj, const RenormFunction& b,
                              std::span<const double> psi, double tau1, double tau2) {
    const Grid& g = traj.grid;
    if (static_cast<int>(psi.size()) != g.n)
        throw std::domain_error(detail::msg("renorm_residual: psi size ", psi.size(),
                                            " does not match cell count ", g.n));
    const std::size_t s1 = traj.index_of(tau1, "renorm_residual");
    const std::size_t s2 = traj.index_of(tau2, "renorm_residual");
    if (s2 < s1) throw std::domain_error("renorm_residual: window endpoints out of order");

    std::vector<double> grad_psi(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (i == 0)
            grad_psi[ii] = (psi[1] - psi[0]) / g.h;
        else if (i == g.n - 1)
            grad_psi[ii] = (psi[ii] - psi[ii - 1]) / g.h;
        else
            grad_psi[ii] = (psi[ii + 1] - psi[ii - 1]) / (2.0 * g.h);
    }

    auto boundary_term = [&](const FluidState& s) {
        double v = 0.0;
        for (int i = 0; i < g.n; ++i)
            v += b.value(s.rho[static_cast<std::size_t>(i)]) * psi[static_cast<std::size_t>(i)] * g.h;
        return v;
    };
    auto transport_rate = [&](const FluidState& s) {
        double v = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double ubar = 0.5 * (s.u[ii] + s.u[ii + 1]);
            v += b.value(s.rho[ii]) * ubar * grad_psi[ii] * g.h;
        }
        return v;
    };
    auto defect_rate = [&](const FluidState& s) {
        double v = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            const double divu = (s.u[ii + 1] - s.u[ii]) / g.h;
            v += b.defect(s.rho[ii]) * divu * psi[ii] * g.h;
        }
        return v;
    };

    const std::size_t m = s2 - s1 + 1;
    std::vector<double> tr(m), df(m);
    for (std::size_t s = 0; s < m; ++s) {
        tr[s] = transport_rate(traj.states[s1 + s]);
        df[s] = defect_rate(traj.states[s1 + s]);
    }
    return boundary_term(traj.states[s2]) - boundary_term(traj.states[s1]) -
           trapezoid(tr, traj.stride) + trapezoid(df, traj.stride);
}

/// Exact Gronwall envelope exp(-D t)(F0 - C/D) + C/D.
inline double gronwall_bound(double F0, double C, double D, double t) {
    if (!(D > 0.0)) throw std::domain_error(detail::msg("gronwall_bound: D must be > 0, got ", D));
    if (!(t >= 0.0)) throw std::domain_error(detail::msg("gronwall_bound: t must be >= 0, got ", t));
    return std::exp(-D * t) * (F0 - C / D) + C / D;
}

/// Closed-form supersolution of D' + theta D^r <= 0.
inline double defect_decay_envelope(double D0, double theta, double r, double t) {
    if (!(r > 1.0))
        throw std::domain_error(detail::msg("defect_decay_envelope: r must be > 1, got ", r));
    if (!(theta > 0.0))
        throw std::domain_error(detail::msg("defect_decay_envelope: theta must be > 0, got ", theta));
    if (!(D0 >= 0.0))
        throw std::domain_error(detail::msg("defect_decay_envelope: D0 must be >= 0, got ", D0));
    if (!(t >= 0.0))
        throw std::domain_error(detail::msg("defect_decay_envelope: t must be >= 0, got ", t));
    if (D0 == 0.0) return 0.0;
    return std::pow(std::pow(D0, 1.0 - r) + theta * (r - 1.0) * t, -1.0 / (r - 1.0));
}

/// Ensemble estimate of E[energy^m](t) with standard errors.
struct MomentSeries {
    int m = 1;
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_;
    int ensemble_size = 0;
};

/// Builds a MomentSeries from per-trajectory total-energy series sampled
/// on a common time grid.
inline MomentSeries build_moment_series(const std::vector<std::vector<double>>& energies,
                                        std::span<const double> times, int m) {
    if (energies.empty()) throw std::domain_error("build_moment_series: empty ensemble");
    if (m < 1) throw std::domain_error(detail::msg("build_moment_series: order must be >= 1, got ", m));
    MomentSeries out;
    out.m = m;
    out.ensemble_size = static_cast<int>(energies.size());
    out.times.assign(times.begin(), times.end());
    const std::size_t nt = times.size();
    for (const auto& e : energies)
        if (e.size() != nt)
            throw std::domain_error("build_moment_series: trajectory series length mismatch");
    out.mean.resize(nt);
    out.stderr_.resize(nt);
    const auto n = static_cast<double>(energies.size());
    for (std::size_t t = 0; t < nt; ++t) {
        double mu = 0.0;
        for (const auto& e : energies) mu += pow_real(e[t], static_cast<double>(m));
        mu /= n;
        double var = 0.0;
        if (energies.size() >= 2) {
            for (const auto& e : energies) {
                const double d = pow_real(e[t], static_cast<double>(m)) - mu;
                var += d * d;
            }
            var /= (n - 1.0);
        }
        out.mean[t] = mu;
        out.stderr_[t] = std::sqrt(var / n);
    }
    return out;
}

struct EnvelopeCheck {
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    double worst_time = 0.0;
};

/// Verifies mean(t) <= exp(-D_m t)(mean(0) + c1) + c2 + 2 stderr(t) at
/// every grid time; reports the worst signed margin and where it occurs.
inline EnvelopeCheck envelope_check(const MomentSeries& series, double D_m, double c1, double c2) {
    if (series.times.empty()) throw std::domain_error("envelope_check: empty series");
    if (!(D_m > 0.0))
        throw std::domain_error(detail::msg("envelope_check: D_m must be > 0, got ", D_m));
    EnvelopeCheck out;
    const double m0 = series.mean.front();
    const double t0 = series.times.front();
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double env = std::exp(-D_m * (series.times[i] - t0)) * (m0 + c1) + c2;
        const double margin = env + 2.0 * series.stderr_[i] - series.mean[i];
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_time = series.times[i];
        }
    }
    out.pass = out.worst_margin >= 0.0;
    return out;
}

/// Fitted envelope constants (calibration-run protocol: fit, freeze,
/// validate on fresh seeds).
struct EnvelopeFit {
    double D = 1.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Fits conservative envelope constants on a calibration series: c2 covers
/// the late-time plateau with margin, c1 equals c2, and D is 0.8 times the
/// steepest decay rate compatible with the calibration data.
inline EnvelopeFit fit_envelope(const MomentSeries& series) {
    if (series.times.size() < 4) throw std::domain_error("fit_envelope: series too short");
    EnvelopeFit fit;
    const std::size_t n = series.times.size();
    double plateau = 0.0;
    for (std::size_t i = n / 2; i < n; ++i)
        plateau = std::max(plateau, series.mean[i] + 2.0 * series.stderr_[i]);
    fit.c2 = 1.25 * plateau;
    fit.c1 = fit.c2;
    const double m0 = series.mean.front();
    const double t0 = series.times.front();
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
        const double excess = series.mean[i] - 2.0 * series.stderr_[i] - fit.c2;
        const double dt = series.times[i] - t0;
        if (excess > 0.0 && dt > 0.0)
            d = std::min(d, std::log((m0 + fit.c1) / excess) / dt);
    }
    const double t_end = series.times.back() - t0;
    fit.D = std::isfinite(d) ? 0.8 * d : 3.5 / t_end;
    return fit;
}

/// Time-space integral of p(rho)(rho_bar - rho)^(-omega) over a snapshot
/// window; finite thanks to the solver guard band.
inline double pressure_weight_integral(const Trajectory& traj, double omega, double tau1,
                                       double tau2) {
    const double omega_max = 0.5 * (traj.eos.beta - 3.0);
    if (!(omega > 0.0) || !(omega <= omega_max))
        throw std::domain_error(detail::msg("pressure_weight_integral: omega ", omega,
                                            " outside (0, ", omega_max, "]"));
    const std::size_t s1 = traj.index_of(tau1, "pressure_weight_integral");
    const std::size_t s2 = traj.index_of(tau2, "pressure_weight_integral");
    if (s2 < s1)
        throw std::domain_error("pressure_weight_integral: window endpoints out of order");
    const Grid& g = traj.grid;
    const std::size_t m = s2 - s1 + 1;
    std::vector<double> rate(m);
    for (std::size_t s = 0; s < m; ++s) {
        const FluidState& st = traj.states[s1 + s];
        double v = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double rho = st.rho[static_cast<std::size_t>(i)];
            v += pressure(rho, traj.eos) * std::pow(traj.eos.rho_bar - rho, -omega) * g.h;
        }
        rate[s] = v;
    }
    return trapezoid(rate, traj.stride);
}

}  // namespace hsns
