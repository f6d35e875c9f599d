/// @file ensemble.hpp
/// @brief Parallel ensemble execution with deterministic seed splitting
///        and worker-count-independent outputs.
///
/// Trajectory i always uses seed split_seed(master_seed, i) and each file's
/// bytes depend only on (config, master_seed), never on scheduling, so
/// output trees are byte-identical for any worker count.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hsns/analysis.hpp"
#include "hsns/checkpoint.hpp"
#include "hsns/config.hpp"
#include "hsns/solver.hpp"
#include "hsns/stationarity.hpp"

namespace hsns {

struct TrajectoryStatus {
    int index = 0;
    std::uint64_t seed = 0;
    std::string status;  ///< "ok" or "stiffness_failure"
    std::string error;
    std::uint64_t steps = 0;
    double final_time = 0.0;
};

struct EnsembleResult {
    std::uint64_t config_hash = 0;
    std::vector<double> times;
    std::vector<Trajectory> trajectories;            ///< successful, in index order
    std::vector<int> traj_indices;                   ///< original index per entry
    std::vector<std::vector<double>> energy_series;  ///< per successful trajectory
    std::vector<TrajectoryStatus> statuses;          ///< all trajectories

    bool all_ok() const {
        for (const auto& s : statuses)
            if (s.status != "ok") return false;
        return true;
    }
};

struct EnsembleOptions {
    int workers = 1;
    std::string out_dir;             ///< empty: no file output
    bool keep_trajectories = true;   ///< keep full trajectories in memory
    /// Override for the initial state (defaults to the config init kinds).
    std::function<FluidState(const Grid&, int)> make_initial;
};

inline void write_energy_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw NumericError(detail::msg("cannot write '", path, "'"));
    f << "t,kinetic,potential,total,dissipation,mass,rho_min,rho_max\n";
    for (std::size_t s = 0; s < traj.size(); ++s) {
        const auto r = energy(traj.states[s], traj.grid, traj.eos, traj.params);
        f << detail::format_double(traj.time(s)) << ',' << detail::format_double(r.kinetic)
          << ',' << detail::format_double(r.potential) << ',' << detail::format_double(r.total)
          << ',' << detail::format_double(r.dissipation) << ',' << detail::format_double(r.mass)
          << ',' << detail::format_double(r.rho_min) << ',' << detail::format_double(r.rho_max)
          << '\n';
    }
}

inline void write_moment_csv(const std::string& path, const MomentSeries& ms) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw NumericError(detail::msg("cannot write '", path, "'"));
    f << "t,mean,stderr,m,ensemble_size\n";
    for (std::size_t i = 0; i < ms.times.size(); ++i) {
        f << detail::format_double(ms.times[i]) << ',' << detail::format_double(ms.mean[i]) << ','
          << detail::format_double(ms.stderr_[i]) << ',' << ms.m << ',' << ms.ensemble_size
          << '\n';
    }
}

inline MomentSeries read_moment_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(detail::msg("cannot open '", path, "'"));
    MomentSeries ms;
    std::string line;
    if (!std::getline(f, line)) throw ConfigError(detail::msg("'", path, "' is empty"));
    while (std::getline(f, line)) {
        if (detail::trim(line).empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5)
            throw ConfigError(detail::msg("'", path, "': expected 5 columns, got ", cells.size()));
        ms.times.push_back(detail::parse_double(cells[0], "t"));
        ms.mean.push_back(detail::parse_double(cells[1], "mean"));
        ms.stderr_.push_back(detail::parse_double(cells[2], "stderr"));
        ms.m = static_cast<int>(detail::parse_int(cells[3], "m"));
        ms.ensemble_size = static_cast<int>(detail::parse_int(cells[4], "ensemble_size"));
    }
    if (ms.times.empty()) throw ConfigError(detail::msg("'", path, "' has no data rows"));
    return ms;
}

namespace detail {

inline std::string traj_dir_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "traj_%04d", index);
    return buf;
}

inline Checkpoint make_final_checkpoint(const Trajectory& traj, std::uint64_t step_offset) {
    Checkpoint c;
    c.config_hash = traj.config_hash;
    c.seed = traj.seed;
    c.rng_state = traj.final_rng_state;
    c.step_count = step_offset;
    for (const auto& iv : traj.intervals) c.step_count += iv.steps;
    const std::size_t last = traj.size() - 1;
    c.t = traj.time(last);
    c.n = static_cast<std::uint32_t>(traj.grid.n);
    c.k = static_cast<std::uint32_t>(traj.noise.K);
    c.L = traj.grid.L;
    c.eos_a = traj.eos.a;
    c.eos_gamma = traj.eos.gamma;
    c.eos_beta = traj.eos.beta;
    c.eos_rho_bar = traj.eos.rho_bar;
    c.noise_f0 = traj.noise.f0;
    c.noise_q = traj.noise.q;
    c.noise_alpha = traj.noise.alpha;
    c.w = traj.final_w;
    c.rho = traj.states[last].rho;
    c.u = traj.states[last].u;
    return c;
}

}  // namespace detail

/// Runs the configured ensemble. Stiffness failures are isolated: the
/// ensemble continues and the failure is recorded in the status list (and
/// the manifest).
inline EnsembleResult run_ensemble(const RunConfig& cfg, const EnsembleOptions& opt = {}) {
    cfg.validate();
    const Grid grid = cfg.grid();
    const EosParams eos = cfg.eos();
    const ForceSpec force = cfg.force();
    const StepParams sp = cfg.step_params();
    const int n_traj = cfg.run_ensemble;

    // Resume bookkeeping for init.kind = file.
    FluidState file_state = FluidState::zeros(grid);
    std::uint64_t resume_rng = 0, resume_steps = 0, resume_seed = 0;
    std::vector<double> resume_w;
    bool resume_stream = false;
    if (cfg.init_kind == "file") {
        const Checkpoint ck = read_checkpoint(cfg.init_path);
        if (static_cast<int>(ck.n) != grid.n)
            throw ConfigError(detail::msg("checkpoint grid (N = ", ck.n,
                                          ") does not match config (N = ", grid.n, ")"));
        file_state = ck.state();
        // A single-trajectory run continues the checkpointed stream
        // bit-exactly; multi-trajectory ensembles restart fresh streams
        // from the stored state.
        if (n_traj == 1) {
            resume_rng = ck.rng_state;
            resume_steps = ck.step_count;
            resume_seed = ck.seed;
            resume_w = ck.w;
            resume_stream = true;
        }
    }

    EnsembleResult res;
    res.config_hash = cfg.hash();
    const auto n_strides = static_cast<std::size_t>(std::llround(cfg.run_t / cfg.run_stride));

    const bool to_files = !opt.out_dir.empty();
    if (to_files) std::filesystem::create_directories(opt.out_dir);

    struct Slot {
        TrajectoryStatus status;
        std::vector<double> energies;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(n_traj));
    std::vector<Trajectory> storage;
    storage.reserve(static_cast<std::size_t>(n_traj));
    for (int i = 0; i < n_traj; ++i)
        storage.emplace_back(grid, eos, cfg.noise(0), force, sp, cfg.run_stride);

    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_traj) return;
            Slot& slot = slots[static_cast<std::size_t>(i)];
            slot.status.index = i;
            const std::uint64_t seed =
                resume_stream ? resume_seed
                              : split_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
            slot.status.seed = seed;
            const NoiseSpec noise = cfg.noise(seed);
            FluidState init = cfg.init_kind == "file"
                                  ? file_state
                                  : opt.make_initial ? opt.make_initial(grid, i)
                                                     : cfg.initial_state(grid);
            try {
                Trajectory traj =
                    resume_stream
                        ? simulate(init, cfg.run_t, cfg.run_stride, grid, eos, noise, force, sp,
                                   res.config_hash, &resume_rng, &resume_w)
                        : simulate(init, cfg.run_t, cfg.run_stride, grid, eos, noise, force, sp,
                                   res.config_hash);
                slot.status.status = "ok";
                slot.status.final_time = traj.time(traj.size() - 1);
                for (const auto& iv : traj.intervals) slot.status.steps += iv.steps;
                slot.energies.reserve(traj.size());
                for (const auto& st : traj.states)
                    slot.energies.push_back(total_energy(st, grid, eos));
                if (to_files) {
                    const auto dir =
                        std::filesystem::path(opt.out_dir) / detail::traj_dir_name(i);
                    std::filesystem::create_directories(dir);
                    write_energy_csv((dir / "energy.csv").string(), traj);
                    const Checkpoint ck = detail::make_final_checkpoint(traj, resume_steps);
                    write_checkpoint((dir / "checkpoint.bin").string(), ck);
                }
                storage[static_cast<std::size_t>(i)] = std::move(traj);
            } catch (const StiffnessFailure& e) {
                slot.status.status = "stiffness_failure";
                slot.status.error = e.what();
                slot.status.final_time = e.last_state.t;
            }
        }
    };

    const int n_workers = std::min(opt.workers, n_traj);
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Aggregate in index order so results are worker-count independent.
    res.times.resize(n_strides + 1);
    for (std::size_t s = 0; s <= n_strides; ++s)
        res.times[s] = file_state.t + static_cast<double>(s) * cfg.run_stride;
    bool have_times = false;
    for (int i = 0; i < n_traj; ++i) {
        Slot& slot = slots[static_cast<std::size_t>(i)];
        res.statuses.push_back(slot.status);
        if (slot.status.status == "ok") {
            if (!have_times) {
                const auto& traj = storage[static_cast<std::size_t>(i)];
                for (std::size_t s = 0; s < traj.size() && s < res.times.size(); ++s)
                    res.times[s] = traj.time(s);
                have_times = true;
            }
            res.traj_indices.push_back(i);
            res.energy_series.push_back(std::move(slot.energies));
            if (opt.keep_trajectories)
                res.trajectories.push_back(std::move(storage[static_cast<std::size_t>(i)]));
        }
    }

    if (to_files) {
        nlohmann::json manifest;
        manifest["code_version"] = kVersion;
        char hash_hex[17];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                      static_cast<unsigned long long>(res.config_hash));
        manifest["config_hash"] = hash_hex;
        manifest["master_seed"] = cfg.master_seed;
        manifest["ensemble"] = n_traj;
        manifest["nu_eff"] = sp.nu_eff();
        nlohmann::json trajs = nlohmann::json::array();
        for (const auto& st : res.statuses) {
            nlohmann::json j;
            j["index"] = st.index;
            j["seed"] = st.seed;
            j["status"] = st.status;
            if (!st.error.empty()) j["error"] = st.error;
            j["steps"] = st.steps;
            j["final_time"] = st.final_time;
            trajs.push_back(j);
        }
        manifest["trajectories"] = trajs;
        std::ofstream mf(std::filesystem::path(opt.out_dir) / "manifest.json",
                         std::ios::binary | std::ios::trunc);
        mf << manifest.dump(2) << '\n';
        std::ofstream cf(std::filesystem::path(opt.out_dir) / "config.cfg",
                         std::ios::binary | std::ios::trunc);
        cf << cfg.serialize(false);
    }
    return res;
}

/// FNV-1a hash of a directory tree: relative paths (sorted) and file
/// contents. Used to compare output trees byte for byte.
inline std::uint64_t hash_tree(const std::string& root) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(std::filesystem::relative(e.path(), root));
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::string_view bytes) {
        for (unsigned char c : bytes) {
            h ^= static_cast<std::uint64_t>(c);
            h *= 0x100000001b3ULL;
        }
    };
    const std::string_view sep("\0", 1);
    for (const auto& p : files) {
        mix(p.string());
        mix(sep);
        std::ifstream f(std::filesystem::path(root) / p, std::ios::binary);
        std::string contents((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        mix(contents);
        mix(sep);
    }
    return h;
}

}  // namespace hsns
