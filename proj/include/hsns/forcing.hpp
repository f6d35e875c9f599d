/// @file forcing.hpp
/// @brief Truncated cylindrical Wiener process, noise diffusion
///        coefficients, deterministic force and the auxiliary-space norm.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsns/errors.hpp"
#include "hsns/math.hpp"
#include "hsns/rng.hpp"

namespace hsns {

/// Truncated noise specification. Modes are phi_k(x) = sin(k pi x / L),
/// coefficients f_k = f0 k^(-q), and the velocity envelope is
/// s_alpha(u) = u (1 + u^2)^((alpha-1)/2).
struct NoiseSpec {
    int K = 16;              ///< retained modes, >= 0 (0 = deterministic dynamics)
    double f0 = 0.1;         ///< coefficient scale, >= 0
    double q = 1.0;          ///< decay exponent, > 1/2
    double alpha = 0.5;      ///< growth exponent, in [0, 1)
    double L = 1.0;          ///< domain length the mode shapes live on
    std::uint64_t seed = 0;  ///< per-trajectory generator seed

    void validate() const {
        if (K < 0) throw std::domain_error(detail::msg("noise: K must be >= 0, got ", K));
        if (!(f0 >= 0.0)) throw std::domain_error(detail::msg("noise: f0 must be >= 0, got ", f0));
        if (!(q > 0.5)) throw std::domain_error(detail::msg("noise: q must be > 1/2, got ", q));
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw std::domain_error(detail::msg("noise: alpha must be in [0,1), got ", alpha));
        if (!(L > 0.0)) throw std::domain_error(detail::msg("noise: L must be > 0, got ", L));
    }

    double coefficient(int k) const { return f0 * std::pow(static_cast<double>(k), -q); }

    double mode_shape(int k, double x) const { return std::sin(k * M_PI * x / L); }

    /// Sum of the retained f_k^2 (finite tail check against f0^2 zeta(2q)).
    double retained_energy() const {
        double s = 0.0;
        for (int k = 1; k <= K; ++k) s += coefficient(k) * coefficient(k);
        return s;
    }

    /// Neglected tail sum_{k > K} f_k^2, reported so users can bound the
    /// truncated noise energy.
    double tail_energy() const { return f0 * f0 * zeta(2.0 * q) - retained_energy(); }
};

/// s_alpha(u) = u (1 + u^2)^((alpha-1)/2): odd, C^1, |s_alpha(u)| <= min(|u|, |u|^alpha).
inline double velocity_envelope(double u, double alpha) {
    const double w = 1.0 + u * u;
    if (alpha == 0.5) return u / std::sqrt(std::sqrt(w));
    if (alpha == 0.0) return u / std::sqrt(w);
    return u * std::pow(w, 0.5 * (alpha - 1.0));
}

/// F_k(x, rho, u) = f_k phi_k(x) s_alpha(u). Satisfies the growth bound
/// |F_k| <= f_k (1 + |u|^alpha).
inline double diffusion_coefficient(int k, double x, double /*rho*/, double u,
                                    const NoiseSpec& spec) {
    if (k < 1 || k > spec.K)
        throw std::domain_error(detail::msg("diffusion_coefficient: mode ", k,
                                            " outside [1, ", spec.K, "]"));
    return spec.coefficient(k) * spec.mode_shape(k, x) * velocity_envelope(u, spec.alpha);
}

/// Deterministic force specification: zero, a constant field, or a drag
/// g = -kappa s_alpha(u).
struct ForceSpec {
    enum class Kind { Zero, Constant, Drag };
    Kind kind = Kind::Zero;
    double value = 0.0;  ///< constant field value, or drag coefficient kappa
    double alpha = 0.5;  ///< envelope exponent used by the drag kind

    void validate() const {
        if (kind == Kind::Drag && !(value >= 0.0))
            throw std::domain_error(detail::msg("force: drag coefficient must be >= 0, got ", value));
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw std::domain_error(detail::msg("force: alpha must be in [0,1), got ", alpha));
    }

    /// The constant C in |g| <= C (1 + |u|^alpha).
    double bound_constant() const {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return std::abs(value);
            case Kind::Drag: return value;
        }
        return 0.0;
    }
};

inline double deterministic_force(double /*x*/, double /*rho*/, double u, const ForceSpec& g) {
    switch (g.kind) {
        case ForceSpec::Kind::Zero: return 0.0;
        case ForceSpec::Kind::Constant: return g.value;
        case ForceSpec::Kind::Drag: return -g.value * velocity_envelope(u, g.alpha);
    }
    throw ConfigError("deterministic_force: unknown force kind");
}

/// K independent N(0, dt) increments drawn from the trajectory generator.
inline std::vector<double> sample_increments(double dt, int K, SplitMix64& rng) {
    if (!(dt > 0.0))
        throw std::domain_error(detail::msg("sample_increments: dt must be > 0, got ", dt));
    std::vector<double> dw(static_cast<std::size_t>(K));
    const double sd = std::sqrt(dt);
    for (auto& w : dw) w = sd * rng.next_gaussian();
    return dw;
}

/// Auxiliary-space norm sqrt(sum_k coeffs[k]^2 / k^2), k starting at 1.
inline double u0_norm(std::span<const double> coeffs) {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        s += coeffs[i] * coeffs[i] / (k * k);
    }
    return std::sqrt(s);
}

/// A sampled truncated Wiener path on a uniform grid. The path is stored
/// as its increments; cumulative coordinates are prefix sums, so
/// reconstruction and shifting are bit-exact.
struct WienerPath {
    double dt = 0.0;
    int K = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> increments;  ///< [step][mode]

    static WienerPath sample(const NoiseSpec& spec, double dt, int n_steps) {
        WienerPath p;
        p.dt = dt;
        p.K = spec.K;
        p.seed = spec.seed;
        SplitMix64 rng(spec.seed);
        p.increments.reserve(static_cast<std::size_t>(n_steps));
        for (int s = 0; s < n_steps; ++s) p.increments.push_back(sample_increments(dt, spec.K, rng));
        return p;
    }

    std::size_t n_steps() const { return increments.size(); }

    /// W_k at grid index j (prefix sum of increments; W(0) = 0).
    double coordinate(int k, std::size_t j) const {
        double w = 0.0;
        for (std::size_t s = 0; s < j; ++s) w += increments[s][static_cast<std::size_t>(k - 1)];
        return w;
    }

    /// The path t -> W(t + tau) - W(tau) for tau = j0 * dt: drop the
    /// leading increments. Exact by construction.
    WienerPath shifted(std::size_t j0) const {
        WienerPath p;
        p.dt = dt;
        p.K = K;
        p.seed = seed;
        p.increments.assign(increments.begin() + static_cast<std::ptrdiff_t>(j0),
                            increments.end());
        return p;
    }
};

}  // namespace hsns
