#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "hsns/analysis.hpp"
#include "hsns/solver.hpp"

using namespace hsns;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const EosParams kEos(1.0, 2.0, 4.0, 1.0);

StepParams make_params(double mu = 0.05) {
    return StepParams(mu, 0.0, 0.5, StepParams::default_guard(kEos));
}

Trajectory noisy_trajectory(double f0 = 0.3, std::uint64_t seed = 3, double T = 1.0,
                            int n = 64) {
    const Grid g(n, 1.0);
    NoiseSpec noise;
    noise.K = 8;
    noise.f0 = f0;
    noise.L = g.L;
    noise.seed = seed;
    const ForceSpec force;
    return simulate(perturbed_state(g, 0.5, 0.05, 2), T, 0.01, g, kEos, noise, force,
                    make_params());
}

}  // namespace

TEST_CASE("energy of raw density-momentum pairs") {
    CHECK(energy_density(0.0, 0.0, kEos) == 0.0);
    CHECK(energy_density(0.0, 0.5, kEos) == std::numeric_limits<double>::infinity());
    CHECK_THAT(energy_density(0.5, 0.0, kEos), WithinAbs(7.0 / 6.0, 1e-12));
}

TEST_CASE("energy report fields") {
    const Grid g(64, 1.0);
    const auto sp = make_params();

    const auto rest = rest_state(g, 0.5);
    const auto r = energy(rest, g, kEos, sp);
    CHECK_THAT(r.total, WithinAbs(7.0 / 6.0, 1e-12));
    CHECK(r.kinetic == 0.0);
    CHECK_THAT(r.mass, WithinRel(0.5, 1e-13));
    CHECK(r.rho_min == 0.5);
    CHECK(r.rho_max == 0.5);

    // Doubling u quadruples kinetic energy and leaves potential unchanged.
    auto s1 = perturbed_state(g, 0.5, 0.1, 2);
    auto s2 = s1;
    for (auto& u : s2.u) u *= 2.0;
    const auto r1 = energy(s1, g, kEos, sp);
    const auto r2 = energy(s2, g, kEos, sp);
    CHECK_THAT(r2.kinetic, WithinRel(4.0 * r1.kinetic, 1e-12));
    CHECK(r2.potential == r1.potential);
    CHECK_THAT(r1.total, WithinRel(r1.kinetic + r1.potential, 1e-14));

    auto bad = s1;
    bad.rho[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(energy(bad, g, kEos, sp), NumericError);
}

TEST_CASE("discrete Bogovskii operator") {
    const Grid g(256, 1.0);

    std::vector<double> zero(static_cast<std::size_t>(g.n), 0.0);
    for (double b : bogovskii_1d(zero, g)) CHECK(b == 0.0);

    // Antiderivative oracle: B[sin(2 pi x)] = (1 - cos(2 pi x)) / (2 pi).
    std::vector<double> f(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) f[static_cast<std::size_t>(i)] = std::sin(2.0 * M_PI * g.x_center(i));
    const auto b = bogovskii_1d(f, g);
    double max_err = 0.0;
    for (int j = 0; j <= g.n; ++j) {
        const double exact = (1.0 - std::cos(2.0 * M_PI * g.x_node(j))) / (2.0 * M_PI);
        max_err = std::max(max_err, std::abs(b[static_cast<std::size_t>(j)] - exact));
    }
    CHECK(max_err <= 1e-3);

    // Discrete derivative reproduces the input and boundaries vanish.
    CHECK(b.front() == 0.0);
    CHECK(std::abs(b.back()) <= 1e-10);
    for (int j = 0; j < g.n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        CHECK_THAT((b[jj + 1] - b[jj]) / g.h, WithinAbs(f[jj], 1e-12));
    }

    std::vector<double> ones(static_cast<std::size_t>(g.n), 1.0);
    CHECK_THROWS_AS(bogovskii_1d(ones, g), std::domain_error);
}

TEST_CASE("dissipation functional") {
    const Grid g(64, 1.0);

    // u = 0: the correction vanishes and D = E.
    auto s = perturbed_state(g, 0.5, 0.1, 2);
    for (auto& u : s.u) u = 0.0;
    const double M = total_mass(s, g);
    const double e = total_energy(s, g, kEos);
    CHECK(dissipation_functional(s, g, kEos, 0.01, M) == e);

    // eps = 0: D = E identically.
    auto moving = perturbed_state(g, 0.5, 0.1, 2);
    CHECK(dissipation_functional(moving, g, kEos, 0.0, total_mass(moving, g)) ==
          total_energy(moving, g, kEos));

    // |D - E| <= C sqrt(E) along a noisy trajectory with the frozen C.
    const double kFrozenC = 0.05;
    const auto traj = noisy_trajectory();
    for (const auto& st : traj.states) {
        const double ee = total_energy(st, traj.grid, kEos);
        const double dd =
            dissipation_functional(st, traj.grid, kEos, 0.01, total_mass(st, traj.grid));
        CHECK(std::abs(dd - ee) <= kFrozenC * std::sqrt(ee));
    }
}

TEST_CASE("energy inequality residual") {
    SECTION("empty window") {
        const auto traj = noisy_trajectory(0.2, 5, 0.2);
        CHECK(energy_inequality_residual(traj, 0.1, 0.1) == 0.0);
        CHECK_THROWS_AS(energy_inequality_residual(traj, 0.003, 0.1), std::domain_error);
    }

    SECTION("deterministic audit") {
        const Grid g(128, 1.0);
        NoiseSpec noise;
        noise.K = 0;
        noise.L = g.L;
        const ForceSpec force;
        const auto traj = simulate(perturbed_state(g, 0.5, 1e-3, 2), 1.0, 0.005, g, kEos, noise,
                                   force, make_params());
        double max_e = 0.0;
        for (const auto& st : traj.states) max_e = std::max(max_e, total_energy(st, g, kEos));
        const double r = energy_inequality_residual(traj, 0.0, 1.0);
        CHECK(r <= 1e-8 * 1.0 * max_e);
    }

    SECTION("ito correction enters with the inequality-restoring sign") {
        const auto traj = noisy_trajectory(0.4, 11, 1.0);
        const auto terms = energy_inequality_terms(traj, 0.0, 1.0);
        CHECK(terms.ito_correction > 0.0);
        // Dropping the correction can only push the residual up, against
        // the inequality.
        const double r_omit = terms.residual() + terms.ito_correction;
        CHECK(r_omit > terms.residual());
    }
}

TEST_CASE("renormalized continuity residual") {
    const Grid g(128, 1.0);
    NoiseSpec noise;
    noise.K = 0;
    noise.L = g.L;
    const ForceSpec force;
    const auto traj = simulate(perturbed_state(g, 0.5, 0.1, 2), 0.5, 0.005, g, kEos, noise,
                               force, make_params());

    std::vector<double> psi_one(static_cast<std::size_t>(g.n), 1.0);

    // b = id, psi = 1: reduces to mass conservation.
    RenormFunction id;
    CHECK(std::abs(renorm_residual(traj, id, psi_one, 0.0, 0.5)) <= 1e-12);

    // b = const, psi = 1: the no-slip divergence theorem.
    RenormFunction cst;
    cst.kind = RenormFunction::Kind::Const;
    cst.c = 2.5;
    CHECK(std::abs(renorm_residual(traj, cst, psi_one, 0.0, 0.5)) <= 1e-12);

    RenormFunction bad;
    bad.kind = static_cast<RenormFunction::Kind>(9);
    CHECK_THROWS_AS(renorm_residual(traj, bad, psi_one, 0.0, 0.5), ConfigError);
}

TEST_CASE("renorm residual halves when the grid is refined") {
    NoiseSpec noise;
    noise.K = 0;
    const ForceSpec force;
    RenormFunction xlogx;
    xlogx.kind = RenormFunction::Kind::XLogX;

    auto residual_at = [&](int n) {
        const Grid g(n, 1.0);
        NoiseSpec nz = noise;
        nz.L = g.L;
        // Low viscosity keeps dt acoustic-limited (dt proportional to h) at
        // both resolutions, so the O(h + dt) residual should halve.
        const auto traj = simulate(perturbed_state(g, 0.5, 0.1, 2), 0.25, 0.00125, g, kEos, nz,
                                   force, make_params(0.01));
        std::vector<double> psi(static_cast<std::size_t>(g.n));
        for (int i = 0; i < g.n; ++i)
            psi[static_cast<std::size_t>(i)] = std::cos(M_PI * g.x_center(i) / g.L);
        return std::abs(renorm_residual(traj, xlogx, psi, 0.0, 0.25));
    };

    const double r128 = residual_at(128);
    const double r256 = residual_at(256);
    const double ratio = r128 / r256;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
}

TEST_CASE("gronwall bound") {
    CHECK_THAT(gronwall_bound(4.0, 2.0, 0.5, 3.7), WithinRel(4.0, 1e-14));  // fixed point C/D
    CHECK_THAT(gronwall_bound(10.0, 0.0, 0.5, 2.0), WithinRel(10.0 * std::exp(-1.0), 1e-13));
    CHECK_THAT(gronwall_bound(10.0, 1.0, 0.5, 2.0), WithinAbs(4.943035529371539, 1e-12));
    CHECK_THROWS_AS(gronwall_bound(1.0, 1.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(gronwall_bound(1.0, 1.0, -2.0, 1.0), std::domain_error);

    // Forward-Euler cross-check of F' = -D F + C.
    const double D = 0.5, C = 1.0, T = 2.0, dt = 1e-5;
    double f = 10.0;
    for (double t = 0.0; t < T - 0.5 * dt; t += dt) f += dt * (-D * f + C);
    CHECK_THAT(gronwall_bound(10.0, C, D, T), WithinAbs(f, 1e-4));
}

TEST_CASE("defect decay envelope") {
    CHECK(defect_decay_envelope(0.0, 1.0, 2.0, 5.0) == 0.0);
    CHECK_THAT(defect_decay_envelope(1.0, 1.0, 2.0, 1.0), WithinRel(0.5, 1e-14));
    CHECK_THROWS_AS(defect_decay_envelope(1.0, 1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(defect_decay_envelope(1.0, -1.0, 2.0, 1.0), std::domain_error);

    // Nonincreasing in t, nondecreasing in D0.
    for (double d0 : {0.1, 1.0, 5.0}) {
        double prev = 1e300;
        for (double t : {0.0, 0.5, 1.0, 4.0}) {
            const double v = defect_decay_envelope(d0, 0.7, 2.5, t);
            CHECK(v <= prev);
            prev = v;
        }
    }
    for (double t : {0.0, 1.0, 3.0}) {
        double prev = -1.0;
        for (double d0 : {0.0, 0.1, 1.0, 5.0}) {
            const double v = defect_decay_envelope(d0, 0.7, 2.5, t);
            CHECK(v >= prev);
            prev = v;
        }
    }

    // Forward-Euler cross-check of D' = -theta D^r.
    const double theta = 1.0, r = 2.0, dt = 1e-5;
    double d = 1.0;
    for (double t = 0.0; t < 1.0 - 0.5 * dt; t += dt) d += dt * (-theta * std::pow(d, r));
    CHECK_THAT(defect_decay_envelope(1.0, theta, r, 1.0), WithinAbs(d, 1e-4));
}

TEST_CASE("moment series and Jensen ordering") {
    std::vector<std::vector<double>> energies;
    SplitMix64 rng(17);
    for (int tr = 0; tr < 16; ++tr) {
        std::vector<double> e(20);
        for (auto& v : e) v = 1.0 + rng.next_double();
        energies.push_back(std::move(e));
    }
    std::vector<double> times(20);
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = 0.1 * static_cast<double>(i);

    const auto m1 = build_moment_series(energies, times, 1);
    const auto m2 = build_moment_series(energies, times, 2);
    CHECK(m1.ensemble_size == 16);
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(m2.mean[i] >= m1.mean[i] * m1.mean[i]);  // Jensen
        CHECK(m1.stderr_[i] >= 0.0);
    }
    CHECK_THROWS_AS(build_moment_series({}, times, 1), std::domain_error);
}

TEST_CASE("envelope check") {
    MomentSeries s;
    s.m = 1;
    s.ensemble_size = 8;
    const double D = 0.7, c1 = 0.5, c2 = 1.0, m0 = 5.0;
    for (int i = 0; i <= 50; ++i) {
        const double t = 0.1 * i;
        s.times.push_back(t);
        s.mean.push_back(std::exp(-D * t) * (m0 + c1) + c2 - (i == 0 ? c1 + c2 : 0.0));
        s.stderr_.push_back(0.0);
    }
    // mean(0) = m0; later points exactly on the envelope.
    REQUIRE(s.mean.front() == m0);
    const auto ok = envelope_check(s, D, c1, c2);
    CHECK(ok.pass);
    CHECK_THAT(ok.worst_margin, WithinAbs(0.0, 1e-12));

    // A single violation fails and names the offending time.
    MomentSeries bad = s;
    bad.mean[30] += 10.0 * (bad.stderr_[30] + 0.1);
    const auto fail = envelope_check(bad, D, c1, c2);
    CHECK_FALSE(fail.pass);
    CHECK_THAT(fail.worst_time, WithinAbs(bad.times[30], 1e-12));

    // Enlarging c2 never converts a pass into a fail.
    for (double bump : {0.1, 1.0, 10.0}) {
        const auto again = envelope_check(s, D, c1, c2 + bump);
        CHECK(again.pass);
        CHECK(again.worst_margin >= ok.worst_margin);
    }

    CHECK_THROWS_AS(envelope_check(s, 0.0, c1, c2), std::domain_error);
}

TEST_CASE("fitted envelope covers its calibration series") {
    MomentSeries s;
    s.m = 1;
    s.ensemble_size = 32;
    for (int i = 0; i <= 80; ++i) {
        const double t = 0.1 * i;
        s.times.push_back(t);
        s.mean.push_back(5.0 * std::exp(-2.0 * t) + 1.0);
        s.stderr_.push_back(0.05);
    }
    const auto fit = fit_envelope(s);
    CHECK(fit.D > 0.0);
    CHECK(envelope_check(s, fit.D, fit.c1, fit.c2).pass);
    CHECK(std::exp(-fit.D * s.times.back()) < 0.05);
}

TEST_CASE("pressure weight integral") {
    const Grid g(64, 1.0);
    NoiseSpec noise;
    noise.K = 0;
    noise.L = g.L;
    const ForceSpec force;

    // Rest state: kept at rest by the scheme, so the integral over a
    // window of length 1 is p(0.5) (0.5)^(-omega) * 1 = 4 * 2^omega.
    const auto traj =
        simulate(rest_state(g, 0.5), 1.0, 0.05, g, kEos, noise, force, make_params());
    for (double omega : {0.1, 0.3, 0.5}) {
        CHECK_THAT(pressure_weight_integral(traj, omega, 0.0, 1.0),
                   WithinRel(4.0 * std::pow(2.0, omega), 1e-10));
    }

    // Admissible range (beta = 4 means omega <= 0.5).
    CHECK_THROWS_AS(pressure_weight_integral(traj, 0.6, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(pressure_weight_integral(traj, 0.0, 0.0, 1.0), std::domain_error);

    // Near-linear growth in window length for statistically steady input.
    const auto t2 = noisy_trajectory(0.2, 23, 2.0);
    const double i1 = pressure_weight_integral(t2, 0.5, 0.0, 1.0);
    const double i2 = pressure_weight_integral(t2, 0.5, 0.0, 2.0);
    CHECK(std::isfinite(i1));
    CHECK(i2 / i1 > 1.6);
    CHECK(i2 / i1 < 2.4);
}
