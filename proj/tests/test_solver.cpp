#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hsns/analysis.hpp"
#include "hsns/math.hpp"
#include "hsns/solver.hpp"
#include "hsns/stationarity.hpp"

using namespace hsns;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const EosParams kEos(1.0, 2.0, 4.0, 1.0);

StepParams make_params(double mu = 0.05, double lambda = 0.0, double cfl = 0.5) {
    return StepParams(mu, lambda, cfl, StepParams::default_guard(kEos));
}

NoiseSpec quiet_noise(const Grid& g) {
    NoiseSpec n;
    n.K = 0;
    n.L = g.L;
    return n;
}

}  // namespace

TEST_CASE("stable_dt formula at rest and its monotonicity") {
    const Grid g(128, 1.0);
    const auto sp = make_params(0.05, 0.0, 0.5);
    const auto rest = rest_state(g, 0.5);

    // Acoustic part: cfl h / sqrt(p'(0.5)) = 0.5 (1/128) / sqrt(48).
    const double acoustic = 0.5 * g.h / std::sqrt(48.0);
    const double viscous = g.h * g.h / (4.0 * sp.nu_eff());
    CHECK_THAT(stable_dt(rest, g, sp, kEos), WithinRel(std::min(acoustic, viscous), 1e-12));

    // Doubling N halves the acoustic-limited dt.
    const Grid g2(256, 1.0);
    StepParams thin(1e-4, 0.0, 0.5, StepParams::default_guard(kEos));  // acoustic-limited
    const auto rest2 = rest_state(g2, 0.5);
    CHECK_THAT(stable_dt(rest_state(g, 0.5), g, thin, kEos) / stable_dt(rest2, g2, thin, kEos),
               WithinRel(2.0, 1e-12));

    // dt decreases monotonically as the rest density approaches rho_bar.
    double prev = 1e300;
    for (double rho0 : {0.5, 0.9, 0.99}) {
        const double dt = stable_dt(rest_state(g, rho0), g, thin, kEos);
        CHECK(dt < prev);
        prev = dt;
    }
}

TEST_CASE("constant states are preserved exactly") {
    const Grid g(64, 1.0);
    const auto sp = make_params();
    const auto noise = quiet_noise(g);
    const ForceSpec force;
    const auto s0 = rest_state(g, 0.5);
    const std::vector<double> dw;
    const auto s1 = step(s0, 1e-4, dw, g, sp, kEos, noise, force);
    for (int i = 0; i < g.n; ++i) CHECK(s1.rho[static_cast<std::size_t>(i)] == 0.5);
    for (int j = 0; j <= g.n; ++j) CHECK(s1.u[static_cast<std::size_t>(j)] == 0.0);
}

TEST_CASE("mass is conserved over many noisy steps") {
    const Grid g(128, 1.0);
    const auto sp = make_params();
    NoiseSpec noise;
    noise.K = 8;
    noise.f0 = 0.3;
    noise.L = g.L;
    noise.seed = split_seed(7, 0);
    const ForceSpec force;

    const auto traj = simulate(perturbed_state(g, 0.5, 0.05, 2), 3.5, 0.01, g, kEos, noise,
                               force, sp);
    const double m0 = total_mass(traj.states.front(), g);
    std::uint64_t steps = 0;
    for (const auto& iv : traj.intervals) steps += iv.steps;
    CHECK(steps > 10'000);
    for (const auto& s : traj.states)
        CHECK(std::abs(total_mass(s, g) - m0) <= 1e-12 * m0);
}

TEST_CASE("no-slip and density confinement hold on every snapshot") {
    const Grid g(64, 1.0);
    const auto sp = make_params(0.02);
    NoiseSpec noise;
    noise.K = 8;
    noise.f0 = 0.5;
    noise.L = g.L;
    const ForceSpec force;
    for (std::uint64_t seed_idx = 0; seed_idx < 4; ++seed_idx) {
        NoiseSpec n = noise;
        n.seed = split_seed(11, seed_idx);
        const auto traj =
            simulate(perturbed_state(g, 0.5, 0.1, 2), 1.0, 0.01, g, kEos, n, force, sp);
        for (const auto& s : traj.states) {
            CHECK(s.u.front() == 0.0);
            CHECK(s.u.back() == 0.0);
            for (double r : s.rho) {
                CHECK(r > 0.0);
                CHECK(r < kEos.rho_bar);
            }
        }
    }
}

TEST_CASE("simulate bookkeeping and determinism") {
    const Grid g(32, 1.0);
    const auto sp = make_params();
    NoiseSpec noise;
    noise.K = 4;
    noise.f0 = 0.2;
    noise.L = g.L;
    noise.seed = 5;
    const ForceSpec force;
    const auto init = perturbed_state(g, 0.5, 0.01, 2);

    // Horizon of one stride: exactly two snapshots.
    const auto short_traj = simulate(init, 0.05, 0.05, g, kEos, noise, force, sp);
    CHECK(short_traj.size() == 2);
    CHECK(short_traj.states[0].t == 0.0);
    CHECK(short_traj.states[1].t == 0.05);

    const auto a = simulate(init, 0.5, 0.05, g, kEos, noise, force, sp);
    const auto b = simulate(init, 0.5, 0.05, g, kEos, noise, force, sp);
    REQUIRE(a.size() == b.size());
    for (std::size_t s = 0; s < a.size(); ++s) {
        for (int i = 0; i < g.n; ++i)
            CHECK(a.states[s].rho[static_cast<std::size_t>(i)] ==
                  b.states[s].rho[static_cast<std::size_t>(i)]);
        for (int j = 0; j <= g.n; ++j)
            CHECK(a.states[s].u[static_cast<std::size_t>(j)] ==
                  b.states[s].u[static_cast<std::size_t>(j)]);
    }
    for (std::size_t s = 0; s + 1 < a.size(); ++s)
        for (int k = 0; k < noise.K; ++k)
            CHECK(a.w_increments[s][static_cast<std::size_t>(k)] ==
                  b.w_increments[s][static_cast<std::size_t>(k)]);
}

TEST_CASE("deterministic runs have nonincreasing energy") {
    const Grid g(128, 1.0);
    const auto sp = make_params(0.05);
    const auto noise = quiet_noise(g);
    const auto init = perturbed_state(g, 0.5, 1e-3, 2);

    SECTION("force off") {
        const ForceSpec force;
        const auto traj = simulate(init, 1.0, 0.01, g, kEos, noise, force, sp);
        for (std::size_t s = 0; s + 1 < traj.size(); ++s) {
            const double e0 = total_energy(traj.states[s], g, kEos);
            const double e1 = total_energy(traj.states[s + 1], g, kEos);
            CHECK(e1 <= e0 + 1e-8 * static_cast<double>(traj.intervals[s].steps));
        }
    }
    SECTION("with drag force") {
        ForceSpec drag;
        drag.kind = ForceSpec::Kind::Drag;
        drag.value = 0.2;
        const auto traj = simulate(init, 1.0, 0.01, g, kEos, noise, drag, sp);
        for (std::size_t s = 0; s + 1 < traj.size(); ++s) {
            const double e0 = total_energy(traj.states[s], g, kEos);
            const double e1 = total_energy(traj.states[s + 1], g, kEos);
            CHECK(e1 <= e0 + 1e-8 * static_cast<double>(traj.intervals[s].steps));
        }
    }
}

TEST_CASE("acoustic oscillation frequency matches the sound speed") {
    // Mode-2 standing wave on N=128 (the acceptance suite repeats this at
    // N=256 with the full tolerance chain).
    const Grid g(128, 1.0);
    StepParams sp(0.02, 0.0, 0.5, StepParams::default_guard(kEos));
    const auto noise = quiet_noise(g);
    const ForceSpec force;
    const auto init = perturbed_state(g, 0.5, 1e-4, 2);

    const double stride = 0.005;
    const auto traj = simulate(init, 4.0, stride, g, kEos, noise, force, sp);
    const auto xi = sine_test_field(g, 2);
    std::vector<double> signal;
    signal.reserve(traj.size());
    for (const auto& s : traj.states) {
        double v = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            v += s.rho[ii] * 0.5 * (s.u[ii] + s.u[ii + 1]) * xi[ii] * g.h;
        }
        signal.push_back(v);
    }
    const double c_exact = std::sqrt(48.0);
    const double omega_ref = 2.0 * M_PI * c_exact / g.L;
    const double omega =
        dominant_frequency(signal, stride, 0.5 * omega_ref, 1.5 * omega_ref);
    const double c_measured = omega * g.L / (2.0 * M_PI);
    CHECK_THAT(c_measured, WithinRel(c_exact, 0.02));
}

TEST_CASE("total mass helpers") {
    const Grid g(64, 1.0);
    CHECK_THAT(total_mass(rest_state(g, 0.5), g), WithinRel(0.5, 1e-14));
    CHECK(mass_fraction_ok(rest_state(g, 0.5), g, 1.0, 0.05));
    CHECK_FALSE(mass_fraction_ok(rest_state(g, 0.97), g, 1.0, 0.05));
}

TEST_CASE("step rejects states that reach the guard band") {
    const Grid g(32, 1.0);
    const auto sp = make_params();
    const auto noise = quiet_noise(g);
    const ForceSpec force;

    // A strongly converging velocity field on a near-barrier density.
    FluidState s = rest_state(g, 0.9995);
    for (int j = 1; j < g.n; ++j)
        s.u[static_cast<std::size_t>(j)] = (j < g.n / 2) ? 2.0 : -2.0;

    SolverWorkspace ws;
    FluidState out;
    std::vector<double> dw;
    const double dt = g.h / 4.0;  // deliberately aggressive
    CHECK(step_into(s, dt, dw, g, sp, kEos, noise, force, ws, out) == StepOutcome::GuardReject);
}
