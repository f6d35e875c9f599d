/// @file hsns.cpp
/// @brief Command-line laboratory: simulate trajectories and ensembles of
///        the 1D stochastic hard-sphere compressible system, audit energy
///        balances, and build time-averaged statistics.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsns/analysis.hpp"
#include "hsns/config.hpp"
#include "hsns/ensemble.hpp"
#include "hsns/solver.hpp"
#include "hsns/stationarity.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int workers_override = 0;
};

hsns::RunConfig load(const GlobalArgs& g) {
    if (g.config_path.empty()) throw hsns::ConfigError("missing --config <path>");
    hsns::RunConfig cfg = hsns::load_config(g.config_path);
    if (g.seed_given) cfg.master_seed = g.seed_override;
    if (g.workers_override > 0) cfg.run_workers = g.workers_override;
    if (!g.out_override.empty()) cfg.run_out = g.out_override;
    cfg.validate();
    return cfg;
}

hsns::EnsembleOptions file_options(const hsns::RunConfig& cfg) {
    hsns::EnsembleOptions opt;
    opt.workers = cfg.run_workers;
    opt.out_dir = cfg.run_out;
    return opt;
}

int run_simulate(const GlobalArgs& g) {
    hsns::RunConfig cfg = load(g);
    cfg.run_ensemble = 1;
    auto opt = file_options(cfg);
    const auto res = hsns::run_ensemble(cfg, opt);
    if (!res.all_ok()) {
        std::cerr << "simulate: " << res.statuses.front().error << "\n";
        return 2;
    }
    std::cout << "wrote " << cfg.run_out << "/traj_0000 (seed "
              << res.statuses.front().seed << ", " << res.statuses.front().steps << " steps)\n";
    return 0;
}

int run_ensemble_cmd(const GlobalArgs& g) {
    const hsns::RunConfig cfg = load(g);
    const auto res = hsns::run_ensemble(cfg, file_options(cfg));
    int failed = 0;
    for (const auto& s : res.statuses)
        if (s.status != "ok") ++failed;
    std::cout << "ensemble: " << res.statuses.size() - failed << "/" << res.statuses.size()
              << " trajectories completed, outputs in " << cfg.run_out << "\n";
    return 0;  // failures are isolated and recorded in the manifest
}

int run_moments(const GlobalArgs& g, const std::vector<int>& orders) {
    const hsns::RunConfig cfg = load(g);
    hsns::EnsembleOptions opt = file_options(cfg);
    opt.keep_trajectories = false;
    const auto res = hsns::run_ensemble(cfg, opt);
    if (res.energy_series.empty()) {
        std::cerr << "moments: no trajectory completed\n";
        return 2;
    }
    for (int m : orders) {
        const auto ms = hsns::build_moment_series(res.energy_series, res.times, m);
        const auto path = std::filesystem::path(cfg.run_out) /
                          ("moments_m" + std::to_string(m) + ".csv");
        hsns::write_moment_csv(path.string(), ms);
        std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
}

int run_kb(const GlobalArgs& g, std::vector<double> s_list, std::vector<double> tau_list) {
    const hsns::RunConfig cfg = load(g);
    const auto res = hsns::run_ensemble(cfg, file_options(cfg));
    if (res.trajectories.empty()) {
        std::cerr << "kb: no trajectory completed\n";
        return 2;
    }
    if (s_list.empty()) s_list.push_back(0.5 * cfg.run_t);
    if (tau_list.empty()) tau_list.push_back(cfg.run_stride);

    const auto dict = hsns::default_dictionary(res.trajectories.front().grid);
    const auto csv_path = std::filesystem::path(cfg.run_out) / "kb_report.csv";
    std::ofstream f(csv_path, std::ios::binary | std::ios::trunc);
    f << "observable_id,S,value,gap_tau,gap_value,seed\n";
    for (const auto& traj : res.trajectories) {
        for (const auto& obs : dict) {
            for (double S : s_list) {
                const double v = hsns::kb_average(traj, obs, S);
                for (double tau : tau_list) {
                    const double gap = hsns::stationarity_gap(traj, obs, tau, S);
                    f << obs.id << ',' << hsns::detail::format_double(S) << ','
                      << hsns::detail::format_double(v) << ','
                      << hsns::detail::format_double(tau) << ','
                      << hsns::detail::format_double(gap) << ',' << traj.seed << '\n';
                }
            }
        }
    }
    f.close();

    nlohmann::json summary;
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(res.config_hash));
    summary["config_hash"] = hash_hex;
    summary["S"] = s_list;
    summary["tau"] = tau_list;
    nlohmann::json jdict = nlohmann::json::array();
    for (const auto& obs : dict) {
        nlohmann::json j;
        j["id"] = obs.id;
        j["kind"] = obs.kind == hsns::Observable::Kind::Energy ? "energy"
                    : obs.kind == hsns::Observable::Kind::DensityPairing ? "density_pairing"
                                                                         : "momentum_pairing";
        j["window"] = obs.window;
        j["scale"] = obs.scale;
        jdict.push_back(j);
    }
    summary["dictionary"] = jdict;
    std::ofstream jf(std::filesystem::path(cfg.run_out) / "kb_summary.json",
                     std::ios::binary | std::ios::trunc);
    jf << summary.dump(2) << '\n';

    std::cout << "wrote " << csv_path.string() << "\n";
    return 0;
}

int run_check_energy(const GlobalArgs& g) {
    const hsns::RunConfig cfg = load(g);
    hsns::EnsembleOptions opt;
    opt.workers = cfg.run_workers;
    const auto res = hsns::run_ensemble(cfg, opt);
    if (res.trajectories.empty()) {
        std::cerr << "check-energy: no trajectory completed\n";
        return 2;
    }

    if (cfg.noise_k == 0) {
        // Deterministic audit: total energy nonincreasing within 1e-8 per
        // accepted step.
        for (const auto& traj : res.trajectories) {
            for (std::size_t s = 0; s + 1 < traj.size(); ++s) {
                const double e0 = hsns::total_energy(traj.states[s], traj.grid, traj.eos);
                const double e1 = hsns::total_energy(traj.states[s + 1], traj.grid, traj.eos);
                const double slack = 1e-8 * static_cast<double>(traj.intervals[s].steps);
                if (e1 > e0 + slack) {
                    std::cerr << "check-energy: energy increased by " << e1 - e0
                              << " over [" << traj.time(s) << ", " << traj.time(s + 1)
                              << "] (seed " << traj.seed << ")\n";
                    return 1;
                }
            }
        }
        std::cout << "check-energy: deterministic energy decay verified on "
                  << res.trajectories.size() << " trajectory(ies)\n";
        return 0;
    }

    // Stochastic audit: ensemble-mean pathwise residual <= 0 within 3
    // standard errors.
    std::vector<double> residuals;
    for (const auto& traj : res.trajectories)
        residuals.push_back(
            hsns::energy_inequality_residual(traj, traj.t0, traj.time(traj.size() - 1)));
    double mean = 0.0;
    for (double r : residuals) mean += r;
    mean /= static_cast<double>(residuals.size());
    double var = 0.0;
    for (double r : residuals) var += (r - mean) * (r - mean);
    var = residuals.size() > 1 ? var / (static_cast<double>(residuals.size()) - 1.0) : 0.0;
    const double se = std::sqrt(var / static_cast<double>(residuals.size()));
    std::cout << "check-energy: mean residual " << mean << " (stderr " << se << ", n = "
              << residuals.size() << ")\n";
    if (mean > 3.0 * se) {
        std::cerr << "check-energy: ensemble-mean residual exceeds 0 by more than 3 SE\n";
        return 1;
    }
    return 0;
}

int run_check_envelope(const std::string& series_path, double dm, double c1, double c2) {
    const auto ms = hsns::read_moment_csv(series_path);
    const auto chk = hsns::envelope_check(ms, dm, c1, c2);
    if (!chk.pass) {
        std::cerr << "check-envelope: series violates the envelope at t = " << chk.worst_time
                  << " (margin " << chk.worst_margin << ")\n";
        return 1;
    }
    std::cout << "check-envelope: pass (worst margin " << chk.worst_margin << " at t = "
              << chk.worst_time << ")\n";
    return 0;
}

int run_report(const GlobalArgs& g) {
    const hsns::RunConfig cfg = load(g);
    const auto res = hsns::run_ensemble(cfg, file_options(cfg));
    if (res.energy_series.empty()) {
        std::cerr << "report: no trajectory completed\n";
        return 2;
    }
    for (int m : {1, 2}) {
        const auto ms = hsns::build_moment_series(res.energy_series, res.times, m);
        const auto path =
            std::filesystem::path(cfg.run_out) / ("moments_m" + std::to_string(m) + ".csv");
        hsns::write_moment_csv(path.string(), ms);
    }
    GlobalArgs g2 = g;
    g2.out_override = cfg.run_out;
    const int kb_rc = run_kb(g2, {}, {});
    if (kb_rc != 0) return kb_rc;
    std::cout << "report: bundle written to " << cfg.run_out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hsns - stochastic hard-sphere compressible flow laboratory"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "configuration file");
    auto* seed_opt = app.add_option("--seed", g.seed_override, "override run.master_seed");
    app.add_option("--workers", g.workers_override, "override run.workers");
    app.add_option("--out", g.out_override, "override run.out");

    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    auto* ens = app.add_subcommand("ensemble", "run the configured ensemble");

    std::vector<int> orders{1};
    auto* mom = app.add_subcommand("moments", "ensemble moment series of the total energy");
    mom->add_option("--m", orders, "moment orders");

    std::vector<double> s_list, tau_list;
    auto* kb = app.add_subcommand("kb", "Krylov-Bogoliubov averages and shift gaps");
    kb->add_option("--S", s_list, "averaging horizons");
    kb->add_option("--tau", tau_list, "shift offsets");

    auto* che = app.add_subcommand("check-energy", "audit the energy inequality");

    std::string series_path;
    double dm = 1.0, c1 = 0.0, c2 = 0.0;
    auto* chv = app.add_subcommand("check-envelope", "check a moment series against an envelope");
    chv->add_option("--series", series_path, "moment series CSV")->required();
    chv->add_option("--Dm", dm, "decay rate")->required();
    chv->add_option("--c1", c1, "initial offset constant")->required();
    chv->add_option("--c2", c2, "plateau constant")->required();

    auto* rep = app.add_subcommand("report", "bundle all CSVs and the JSON summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;  // usage text on the error stream
    }

    try {
        g.seed_given = seed_opt->count() > 0;
        if (sim->parsed()) return run_simulate(g);
        if (ens->parsed()) return run_ensemble_cmd(g);
        if (mom->parsed()) return run_moments(g, orders);
        if (kb->parsed()) return run_kb(g, s_list, tau_list);
        if (che->parsed()) return run_check_energy(g);
        if (chv->parsed()) return run_check_envelope(series_path, dm, c1, c2);
        if (rep->parsed()) return run_report(g);
    } catch (const hsns::StiffnessFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const hsns::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const hsns::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
