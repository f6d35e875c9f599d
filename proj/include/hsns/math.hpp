/// @file math.hpp
/// @brief Small numerical utilities: hashing, powers, adaptive quadrature,
///        trapezoid rules and spectral peak location.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "hsns/errors.hpp"

namespace hsns {

/// 64-bit FNV-1a over a byte range.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

inline double pow_uint(double x, unsigned n) {
    double r = 1.0;
    while (n > 0) {
        if (n & 1u) r *= x;
        x *= x;
        n >>= 1u;
    }
    return r;
}

}  // namespace detail

/// x^e with a multiplication fast path when e is a small integer.
inline double pow_real(double x, double e) {
    double ip;
    if (std::modf(e, &ip) == 0.0 && std::abs(ip) <= 64.0) {
        const auto n = static_cast<long>(ip);
        const double p = detail::pow_uint(x, static_cast<unsigned>(n < 0 ? -n : n));
        return n < 0 ? 1.0 / p : p;
    }
    return std::pow(x, e);
}

// 15-point Kronrod rule with embedded 7-point Gauss rule (positive half).
namespace detail {

inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kGk15WK[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGk15WG[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    double resk = kGk15WK[7] * f(c);
    double resg = kGk15WG[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double dx = hw * kGk15Nodes[i];
        const double fsum = f(c - dx) + f(c + dx);
        resk += kGk15WK[i] * fsum;
        if (i % 2 == 1) resg += kGk15WG[i / 2] * fsum;
    }
    kronrod = resk * hw;
    err = std::abs((resk - resg) * hw);
}

}  // namespace detail

/// Adaptive Gauss--Kronrod integration of f over [a, b] to absolute
/// tolerance abs_tol, with a relative floor of a few ulps of the running
/// estimate. Throws NumericError with the residual estimate when the
/// refinement limit is exhausted.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol,
                          int max_intervals = 4096) {
    if (a == b) return 0.0;
    struct Seg {
        double a, b, val, err;
    };
    std::vector<Seg> segs;
    double v, e;
    detail::gk15(f, a, b, v, e);
    segs.push_back({a, b, v, e});
    double total_err = e;
    auto tol = [&] {
        double mag = 0.0;
        for (const auto& s : segs) mag += std::abs(s.val);
        return std::max(abs_tol, 1e-14 * mag);
    };
    while (total_err > tol()) {
        if (static_cast<int>(segs.size()) >= max_intervals) {
            throw NumericError(detail::msg("quadrature did not converge: residual estimate ",
                                           total_err, " exceeds tolerance ", tol()));
        }
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg s = segs[worst];
        const double m = 0.5 * (s.a + s.b);
        Seg l{s.a, m, 0, 0}, r{m, s.b, 0, 0};
        detail::gk15(f, l.a, l.b, l.val, l.err);
        detail::gk15(f, r.a, r.b, r.val, r.err);
        total_err += l.err + r.err - s.err;
        segs[worst] = l;
        segs.push_back(r);
    }
    double sum = 0.0;
    for (const auto& s : segs) sum += s.val;
    return sum;
}

/// Trapezoid rule over uniformly indexed samples y with spacing dt.
inline double trapezoid(std::span<const double> y, double dt) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dt;
}

/// Riemann zeta(s) for s > 1 by direct summation plus an Euler--Maclaurin
/// tail; used to bound noise coefficient tails.
inline double zeta(double s) {
    if (!(s > 1.0)) throw std::domain_error(detail::msg("zeta requires s > 1, got ", s));
    const int k0 = 64;
    double sum = 0.0;
    for (int k = 1; k <= k0; ++k) sum += std::pow(static_cast<double>(k), -s);
    const double K = k0;
    sum += std::pow(K, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(K, -s) +
           s / 12.0 * std::pow(K, -s - 1.0);
    return sum;
}

/// Dominant angular frequency of a uniformly sampled real signal, located
/// by a Hann-windowed discrete-time Fourier transform scan over
/// [omega_lo, omega_hi] followed by parabolic peak refinement.
inline double dominant_frequency(std::span<const double> values, double dt, double omega_lo,
                                 double omega_hi, int n_scan = 2048) {
    const std::size_t n = values.size();
    if (n < 8) throw std::domain_error("dominant_frequency: signal too short");
    std::vector<double> w(n);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann =
            0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n - 1));
        w[i] = (values[i] - mean) * hann;
    }
    auto power = [&](double omega) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = omega * dt * static_cast<double>(i);
            re += w[i] * std::cos(ph);
            im -= w[i] * std::sin(ph);
        }
        return re * re + im * im;
    };
    double best_omega = omega_lo, best_p = -1.0;
    const double step = (omega_hi - omega_lo) / n_scan;
    for (int j = 0; j <= n_scan; ++j) {
        const double om = omega_lo + step * j;
        const double p = power(om);
        if (p > best_p) {
            best_p = p;
            best_omega = om;
        }
    }
    // Parabolic refinement around the scan peak.
    const double pl = power(best_omega - step);
    const double pr = power(best_omega + step);
    const double denom = pl - 2.0 * best_p + pr;
    if (denom < 0.0) {
        const double shift = 0.5 * (pl - pr) / denom;
        if (std::abs(shift) <= 1.0) best_omega += shift * step;
    }
    return best_omega;
}

}  // namespace hsns
