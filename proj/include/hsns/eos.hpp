/// @file eos.hpp
/// @brief Hard-sphere pressure law, pressure potential and the capped
///        regularized pressure, as pure functions of density.
///
/// The pressure family is p(r) = a r^gamma (rho_bar - r)^(-beta): it
/// vanishes at zero density, is strictly increasing, and blows up at the
/// limit density rho_bar with (rho_bar - r)^beta p(r) -> p_bar.

#pragma once

#include <cmath>

#include "hsns/errors.hpp"
#include "hsns/math.hpp"

namespace hsns {

struct EosParams {
    double a;        ///< pressure scale, > 0
    double gamma;    ///< low-density exponent, > 1
    double beta;     ///< singularity exponent, > 3
    double rho_bar;  ///< limit density, > 0
    double p_bar;    ///< singular-limit constant a * rho_bar^gamma (derived)

    EosParams(double a_, double gamma_, double beta_, double rho_bar_)
        : a(a_), gamma(gamma_), beta(beta_), rho_bar(rho_bar_),
          p_bar(a_ * pow_real(rho_bar_, gamma_)) {
        if (!(a > 0.0))
            throw std::domain_error(detail::msg("eos: a must be > 0, got ", a));
        if (!(gamma > 1.0))
            throw std::domain_error(detail::msg("eos: gamma must be > 1, got ", gamma));
        if (!(beta > 3.0))
            throw std::domain_error(detail::msg("eos: beta must be > 3, got ", beta));
        if (!(rho_bar > 0.0))
            throw std::domain_error(detail::msg("eos: rho_bar must be > 0, got ", rho_bar));
    }
};

namespace detail {

inline void check_density(double rho, const EosParams& eos, const char* who) {
    if (!(rho >= 0.0) || !(rho < eos.rho_bar))
        throw std::domain_error(
            msg(who, ": density ", rho, " outside [0, ", eos.rho_bar, ")"));
}

}  // namespace detail

/// p(rho) = a rho^gamma (rho_bar - rho)^(-beta) on [0, rho_bar).
inline double pressure(double rho, const EosParams& eos) {
    detail::check_density(rho, eos, "pressure");
    if (rho == 0.0) return 0.0;
    return eos.a * pow_real(rho, eos.gamma) * pow_real(eos.rho_bar - rho, -eos.beta);
}

/// dp/drho, analytic. Positive for rho > 0.
inline double pressure_derivative(double rho, const EosParams& eos) {
    detail::check_density(rho, eos, "pressure_derivative");
    if (rho == 0.0) return 0.0;  // gamma > 1
    const double gap = eos.rho_bar - rho;
    return eos.a * pow_real(rho, eos.gamma - 1.0) * pow_real(gap, -eos.beta - 1.0) *
           (eos.gamma * gap + eos.beta * rho);
}

namespace detail {

/// I(rho) = integral_0^rho p(s)/s^2 ds, so that P(rho) = rho * I(rho).
/// Closed form for gamma == 2; adaptive Gauss--Kronrod otherwise, with the
/// substitutions w = s^(gamma-1) at the lower end and t = rho_bar - s,
/// tau = t^(1-beta) toward the singular end.
inline double potential_integral(double rho, const EosParams& eos) {
    const double rb = eos.rho_bar;
    if (eos.gamma == 2.0) {
        return eos.a * (pow_real(rb - rho, 1.0 - eos.beta) - pow_real(rb, 1.0 - eos.beta)) /
               (eos.beta - 1.0);
    }
    const double gm1 = eos.gamma - 1.0;
    const double split = std::min(rho, 0.5 * rb);
    const double tol = 0.5e-12 / std::max(rho, 1.0);
    auto f_low = [&](double w) {
        return pow_real(rb - std::pow(w, 1.0 / gm1), -eos.beta);
    };
    double I = eos.a / gm1 * integrate_adaptive(f_low, 0.0, std::pow(split, gm1), tol);
    if (rho > split) {
        const double bm1 = eos.beta - 1.0;
        const double tau_lo = std::pow(0.5 * rb, -bm1);
        const double tau_hi = std::pow(rb - rho, -bm1);
        auto f_up = [&](double tau) {
            return pow_real(rb - std::pow(tau, -1.0 / bm1), eos.gamma - 2.0);
        };
        I += eos.a / bm1 * integrate_adaptive(f_up, tau_lo, tau_hi, tol);
    }
    return I;
}

}  // namespace detail

/// Pressure potential P with P'(rho) rho - P(rho) = p(rho) and P(0) = 0,
/// i.e. P(rho) = rho * integral_0^rho p(s)/s^2 ds. Convex on [0, rho_bar).
inline double pressure_potential(double rho, const EosParams& eos) {
    detail::check_density(rho, eos, "pressure_potential");
    if (rho == 0.0) return 0.0;
    return rho * detail::potential_integral(rho, eos);
}

/// Capped regularization of the hard-sphere pressure: coincides with
/// pressure() up to rho_bar - alpha_cap, then freezes and ramps back up as
/// ([rho - rho_bar - 1]^+)^gamma_app. Defined for all rho >= 0.
inline double approx_pressure(double rho, double alpha_cap, double gamma_app,
                              const EosParams& eos) {
    if (!(rho >= 0.0))
        throw std::domain_error(detail::msg("approx_pressure: density ", rho, " negative"));
    if (!(alpha_cap > 0.0) || !(alpha_cap < eos.rho_bar))
        throw std::domain_error(detail::msg("approx_pressure: alpha_cap ", alpha_cap,
                                            " outside (0, ", eos.rho_bar, ")"));
    if (!(gamma_app > 3.0))
        throw std::domain_error(
            detail::msg("approx_pressure: exponent ", gamma_app, " must be > 3"));
    const double knee = eos.rho_bar - alpha_cap;
    if (rho <= knee) return pressure(rho, eos);
    const double excess = rho - eos.rho_bar - 1.0;
    return pressure(knee, eos) + (excess > 0.0 ? pow_real(excess, gamma_app) : 0.0);
}

}  // namespace hsns
