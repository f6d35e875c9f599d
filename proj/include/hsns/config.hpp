/// @file config.hpp
/// @brief Run configuration: a flat, typed key-value format with dotted
///        sections, a canonical serialization and a 64-bit FNV-1a hash.
///
/// Canonical form (the bytes that get hashed): one "key = value\n" line
/// per field, keys sorted lexicographically, doubles rendered with
/// shortest-round-trip formatting. parse(serialize(c)) == c.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hsns/eos.hpp"
#include "hsns/errors.hpp"
#include "hsns/forcing.hpp"
#include "hsns/grid.hpp"
#include "hsns/math.hpp"
#include "hsns/trajectory.hpp"

namespace hsns {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError(msg("config: key '", key, "' expects a number, got '", s, "'"));
    return v;
}

inline long long parse_int(const std::string& s, const std::string& key) {
    long long v = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError(msg("config: key '", key, "' expects an integer, got '", s, "'"));
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ConfigError(msg("config: key '", key, "' expects an unsigned integer, got '", s, "'"));
    return v;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

struct RunConfig {
    // grid.*
    int grid_n = 128;
    double grid_l = 1.0;
    // eos.*
    double eos_a = 1.0;
    double eos_gamma = 2.0;
    double eos_beta = 4.0;
    double eos_rho_bar = 1.0;
    // noise.*
    int noise_k = 16;
    double noise_f0 = 0.1;
    double noise_q = 1.0;
    double noise_alpha = 0.5;
    // force.*
    std::string force_kind = "zero";
    double force_value = 0.0;
    double force_alpha = 0.5;
    // step.*
    double step_mu = 0.05;
    double step_lambda = 0.0;
    double step_cfl = 0.5;
    double step_guard = 1e-6;  ///< resolved to 1e-6 rho_bar when left at default
    double step_dt_max = 1e-2;
    // init.*
    std::string init_kind = "rest";
    double init_rho0 = 0.5;
    double init_amp = 0.0;
    int init_mode = 2;
    std::string init_path;
    // run.*
    double run_t = 1.0;
    double run_stride = 0.01;
    int run_ensemble = 1;
    std::uint64_t master_seed = 0;
    double run_delta = 0.05;
    int run_workers = 1;
    std::string run_out = "out";

    bool operator==(const RunConfig&) const = default;

    Grid grid() const { return Grid(grid_n, grid_l); }
    EosParams eos() const { return EosParams(eos_a, eos_gamma, eos_beta, eos_rho_bar); }

    NoiseSpec noise(std::uint64_t trajectory_seed) const {
        NoiseSpec n;
        n.K = noise_k;
        n.f0 = noise_f0;
        n.q = noise_q;
        n.alpha = noise_alpha;
        n.L = grid_l;
        n.seed = trajectory_seed;
        return n;
    }

    ForceSpec force() const {
        ForceSpec f;
        if (force_kind == "zero")
            f.kind = ForceSpec::Kind::Zero;
        else if (force_kind == "constant")
            f.kind = ForceSpec::Kind::Constant;
        else if (force_kind == "drag")
            f.kind = ForceSpec::Kind::Drag;
        else
            throw ConfigError(detail::msg("config: force.kind must be zero|constant|drag, got '",
                                          force_kind, "'"));
        f.value = force_value;
        f.alpha = force_alpha;
        return f;
    }

    StepParams step_params() const {
        return StepParams(step_mu, step_lambda, step_cfl, step_guard, step_dt_max);
    }

    void validate() const {
        grid();
        const EosParams e = eos();
        noise(0).validate();
        force().validate();
        step_params();
        if (init_kind != "rest" && init_kind != "perturbed" && init_kind != "file")
            throw ConfigError(detail::msg("config: init.kind must be rest|perturbed|file, got '",
                                          init_kind, "'"));
        if (!(run_t > 0.0)) throw ConfigError("config: run.T must be > 0");
        if (!(run_stride > 0.0)) throw ConfigError("config: run.stride must be > 0");
        const double m = run_t / run_stride;
        if (std::abs(m - std::llround(m)) > 1e-9)
            throw ConfigError(detail::msg("config: run.T = ", run_t,
                                          " must be a multiple of run.stride = ", run_stride));
        if (run_ensemble < 1) throw ConfigError("config: run.ensemble must be >= 1");
        if (run_workers < 1) throw ConfigError("config: run.workers must be >= 1");
        if (!(run_delta > 0.0)) throw ConfigError("config: run.delta must be > 0");
        if (init_kind == "rest" || init_kind == "perturbed") {
            const double lo = init_kind == "perturbed" ? init_rho0 - std::abs(init_amp) : init_rho0;
            const double hi = init_kind == "perturbed" ? init_rho0 + std::abs(init_amp) : init_rho0;
            if (!(lo > step_guard) || !(hi < e.rho_bar - step_guard))
                throw ConfigError(detail::msg("config: initial density range [", lo, ", ", hi,
                                              "] leaves (guard, rho_bar - guard)"));
            if (init_rho0 > e.rho_bar - run_delta)
                throw ConfigError(detail::msg("config: mean density ", init_rho0,
                                              " violates M/|Q| <= rho_bar - delta with delta = ",
                                              run_delta));
        }
        if (init_kind == "file" && init_path.empty())
            throw ConfigError("config: init.kind = file requires init.path");
    }

    /// Initial state for the rest/perturbed kinds (file is handled by the
    /// checkpoint reader).
    FluidState initial_state(const Grid& g) const {
        if (init_kind == "rest") return rest_state(g, init_rho0);
        if (init_kind == "perturbed") return perturbed_state(g, init_rho0, init_amp, init_mode);
        throw ConfigError("config: initial_state called for init.kind = file");
    }

    /// Canonical serialized form: sorted "key = value" lines. With
    /// include_executor = false the run.workers and run.out keys are left
    /// out; that reduced form defines the experiment and is what gets
    /// hashed, so outputs cannot depend on worker count or paths.
    std::string serialize(bool include_executor = true) const {
        std::map<std::string, std::string> kv;
        kv["grid.N"] = std::to_string(grid_n);
        kv["grid.L"] = detail::format_double(grid_l);
        kv["eos.a"] = detail::format_double(eos_a);
        kv["eos.gamma"] = detail::format_double(eos_gamma);
        kv["eos.beta"] = detail::format_double(eos_beta);
        kv["eos.rho_bar"] = detail::format_double(eos_rho_bar);
        kv["noise.K"] = std::to_string(noise_k);
        kv["noise.f0"] = detail::format_double(noise_f0);
        kv["noise.q"] = detail::format_double(noise_q);
        kv["noise.alpha"] = detail::format_double(noise_alpha);
        kv["force.kind"] = force_kind;
        kv["force.value"] = detail::format_double(force_value);
        kv["force.alpha"] = detail::format_double(force_alpha);
        kv["step.mu"] = detail::format_double(step_mu);
        kv["step.lambda"] = detail::format_double(step_lambda);
        kv["step.cfl"] = detail::format_double(step_cfl);
        kv["step.guard"] = detail::format_double(step_guard);
        kv["step.dt_max"] = detail::format_double(step_dt_max);
        kv["init.kind"] = init_kind;
        kv["init.rho0"] = detail::format_double(init_rho0);
        kv["init.amp"] = detail::format_double(init_amp);
        kv["init.mode"] = std::to_string(init_mode);
        kv["init.path"] = init_path;
        kv["run.T"] = detail::format_double(run_t);
        kv["run.stride"] = detail::format_double(run_stride);
        kv["run.ensemble"] = std::to_string(run_ensemble);
        kv["run.master_seed"] = std::to_string(master_seed);
        kv["run.delta"] = detail::format_double(run_delta);
        if (include_executor) {
            kv["run.workers"] = std::to_string(run_workers);
            kv["run.out"] = run_out;
        }
        std::string out;
        for (const auto& [k, v] : kv) {
            out += k;
            out += " = ";
            out += v;
            out += '\n';
        }
        return out;
    }

    /// 64-bit FNV-1a over the canonical experiment-defining bytes.
    std::uint64_t hash() const { return fnv1a64(serialize(false)); }
};

/// Parses the key-value text format. Lines are "key = value"; blank lines
/// and lines starting with '#' are ignored. Unknown keys are rejected.
inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    bool saw_master_seed = false;
    std::uint64_t noise_seed_alias = 0;
    bool saw_noise_seed = false;
    bool saw_guard = false;
    bool saw_rho_bar = false;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(detail::msg("config: line ", lineno, " is not 'key = value': ", t));
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));

        if (key == "grid.N") c.grid_n = static_cast<int>(detail::parse_int(val, key));
        else if (key == "grid.L") c.grid_l = detail::parse_double(val, key);
        else if (key == "eos.a") c.eos_a = detail::parse_double(val, key);
        else if (key == "eos.gamma") c.eos_gamma = detail::parse_double(val, key);
        else if (key == "eos.beta") c.eos_beta = detail::parse_double(val, key);
        else if (key == "eos.rho_bar") { c.eos_rho_bar = detail::parse_double(val, key); saw_rho_bar = true; }
        else if (key == "noise.K") c.noise_k = static_cast<int>(detail::parse_int(val, key));
        else if (key == "noise.f0") c.noise_f0 = detail::parse_double(val, key);
        else if (key == "noise.q") c.noise_q = detail::parse_double(val, key);
        else if (key == "noise.alpha") c.noise_alpha = detail::parse_double(val, key);
        else if (key == "noise.seed") { noise_seed_alias = detail::parse_u64(val, key); saw_noise_seed = true; }
        else if (key == "force.kind") c.force_kind = val;
        else if (key == "force.value") c.force_value = detail::parse_double(val, key);
        else if (key == "force.alpha") c.force_alpha = detail::parse_double(val, key);
        else if (key == "step.mu") c.step_mu = detail::parse_double(val, key);
        else if (key == "step.lambda") c.step_lambda = detail::parse_double(val, key);
        else if (key == "step.cfl") c.step_cfl = detail::parse_double(val, key);
        else if (key == "step.guard") { c.step_guard = detail::parse_double(val, key); saw_guard = true; }
        else if (key == "step.dt_max") c.step_dt_max = detail::parse_double(val, key);
        else if (key == "init.kind") c.init_kind = val;
        else if (key == "init.rho0") c.init_rho0 = detail::parse_double(val, key);
        else if (key == "init.amp") c.init_amp = detail::parse_double(val, key);
        else if (key == "init.mode") c.init_mode = static_cast<int>(detail::parse_int(val, key));
        else if (key == "init.path") c.init_path = val;
        else if (key == "run.T") c.run_t = detail::parse_double(val, key);
        else if (key == "run.stride") c.run_stride = detail::parse_double(val, key);
        else if (key == "run.ensemble") c.run_ensemble = static_cast<int>(detail::parse_int(val, key));
        else if (key == "run.master_seed") { c.master_seed = detail::parse_u64(val, key); saw_master_seed = true; }
        else if (key == "run.delta") c.run_delta = detail::parse_double(val, key);
        else if (key == "run.workers") c.run_workers = static_cast<int>(detail::parse_int(val, key));
        else if (key == "run.out") c.run_out = val;
        else throw ConfigError(detail::msg("config: unknown key '", key, "' on line ", lineno));
    }

    // noise.seed is accepted as an alias for run.master_seed.
    if (saw_noise_seed && !saw_master_seed) c.master_seed = noise_seed_alias;
    // step.guard defaults to 1e-6 rho_bar when not given explicitly.
    if (!saw_guard && saw_rho_bar) c.step_guard = 1e-6 * c.eos_rho_bar;
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(detail::msg("config: cannot open '", path, "'"));
    std::ostringstream ss;
    ss << f.rdbuf();
    RunConfig c = parse_config(ss.str());
    c.validate();
    return c;
}

}  // namespace hsns
