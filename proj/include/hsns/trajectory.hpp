/// @file trajectory.hpp
/// @brief Time-sampled trajectory of one simulated sample path.
///
/// Wiener coordinates and the running balance integrals are stored as
/// per-interval increments; cumulative values are prefix sums. This makes
/// the time shift an index offset and keeps shift composition bit-exact.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hsns/eos.hpp"
#include "hsns/errors.hpp"
#include "hsns/forcing.hpp"
#include "hsns/grid.hpp"

namespace hsns {

/// Viscosity and step-control parameters.
struct StepParams {
    double mu;             ///< shear viscosity, > 0
    double lambda;         ///< bulk viscosity, >= 0
    double cfl = 0.5;      ///< Courant factor, in (0, 1]
    double guard;          ///< absolute density guard band near rho_bar
    double dt_max = 1e-2;  ///< hard step cap

    StepParams(double mu_, double lambda_, double cfl_, double guard_, double dt_max_ = 1e-2)
        : mu(mu_), lambda(lambda_), cfl(cfl_), guard(guard_), dt_max(dt_max_) {
        if (!(mu > 0.0)) throw std::domain_error(detail::msg("step: mu must be > 0, got ", mu));
        if (!(lambda >= 0.0))
            throw std::domain_error(detail::msg("step: lambda must be >= 0, got ", lambda));
        if (!(cfl > 0.0 && cfl <= 1.0))
            throw std::domain_error(detail::msg("step: cfl must be in (0,1], got ", cfl));
        if (!(guard > 0.0))
            throw std::domain_error(detail::msg("step: guard must be > 0, got ", guard));
        if (!(dt_max > 0.0))
            throw std::domain_error(detail::msg("step: dt_max must be > 0, got ", dt_max));
    }

    /// Effective 1D viscosity in S(du) = nu_eff du. The deviatoric part of
    /// the stress vanishes in 1D; mu + lambda keeps a strictly positive
    /// viscosity controlled by mu. Recorded in run metadata.
    double nu_eff() const { return mu + lambda; }

    static double default_guard(const EosParams& eos) { return 1e-6 * eos.rho_bar; }
};

/// Balance integrals accumulated over one snapshot interval at inner-step
/// resolution, plus the number of accepted steps in the interval.
struct IntervalStats {
    double dissipation = 0.0;   ///< integral of nu_eff (du)^2 dx dt
    double ito = 0.0;           ///< sum_k integral (int rho F_k u dx) dW_k
    double noise_energy = 0.0;  ///< 1/2 integral rho sum_k F_k^2 dx dt
    double force_work = 0.0;    ///< integral rho g u dx dt
    std::uint64_t steps = 0;

    IntervalStats& operator+=(const IntervalStats& o) {
        dissipation += o.dissipation;
        ito += o.ito;
        noise_energy += o.noise_energy;
        force_work += o.force_work;
        steps += o.steps;
        return *this;
    }
};

struct Trajectory {
    Grid grid;
    EosParams eos;
    NoiseSpec noise;
    ForceSpec force;
    StepParams params;
    double stride;
    double t0 = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t final_rng_state = 0;   ///< generator state after the last step
    std::vector<double> final_w;         ///< absolute Wiener coordinates at the end,
                                         ///< accumulated step by step (checkpointing)

    std::vector<FluidState> states;
    std::vector<std::vector<double>> w_increments;  ///< per interval, K entries
    std::vector<IntervalStats> intervals;           ///< per interval

    Trajectory(const Grid& g, const EosParams& e, const NoiseSpec& n, const ForceSpec& f,
               const StepParams& p, double stride_)
        : grid(g), eos(e), noise(n), force(f), params(p), stride(stride_) {}

    std::size_t size() const { return states.size(); }
    double time(std::size_t s) const {
        return s < states.size() ? states[s].t : t0 + static_cast<double>(s) * stride;
    }

    /// Wiener coordinate W_k at snapshot index s (prefix sum; W at index 0
    /// is exactly 0).
    double wiener(int k, std::size_t s) const {
        double w = 0.0;
        for (std::size_t i = 0; i < s; ++i) w += w_increments[i][static_cast<std::size_t>(k - 1)];
        return w;
    }

    /// Accumulated dissipation integral up to snapshot index s.
    double cumulative_dissipation(std::size_t s) const {
        double d = 0.0;
        for (std::size_t i = 0; i < s; ++i) d += intervals[i].dissipation;
        return d;
    }

    /// Snapshot index of an on-grid time, or a domain error naming it.
    std::size_t index_of(double t, const char* who = "trajectory") const {
        const double rel = (t - t0) / stride;
        const auto s = static_cast<long>(std::llround(rel));
        if (s < 0 || std::abs(rel - static_cast<double>(s)) > 1e-9 ||
            static_cast<std::size_t>(s) >= size())
            throw std::domain_error(
                detail::msg(who, ": time ", t, " is not on the snapshot grid"));
        return static_cast<std::size_t>(s);
    }
};

}  // namespace hsns
