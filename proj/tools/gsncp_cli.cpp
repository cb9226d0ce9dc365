// Command-line front end: simulate, estimate, evaluate, sweep, peb-map.

#include "gsncp/exp/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::uint64_t seed_or_config(const std::optional<std::uint64_t>& seed, const gsncp::ExperimentConfig& config) {
    return seed ? *seed : config.scenario.seed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-sensor extended target sensing experiments"};
    app.require_subcommand(1);

    std::string config_path, out, data_dir, truth_dir, estimates_dir, method = "mcmc";
    std::optional<std::uint64_t> seed;
    std::size_t reps = 1, workers = 0, sensor = 0, nx = 101, ny = 41;
    double height = 0.0;
    bool resume = false;

    auto* simulate = app.add_subcommand("simulate", "Sample a scene and write measurements and truth per epoch");
    simulate->add_option("--config", config_path, "JSON configuration")->required();
    simulate->add_option("--seed", seed, "Master seed (defaults to the config seed)");
    simulate->add_option("--out", out, "Output directory")->required();

    auto* estimate = app.add_subcommand("estimate", "Estimate targets per epoch with one method");
    estimate->add_option("--config", config_path, "JSON configuration")->required();
    estimate->add_option("--data", data_dir, "Directory written by simulate")->required();
    estimate->add_option("--method", method, "mcmc, dbscan or oracle");
    estimate->add_option("--seed", seed, "Master seed (defaults to the config seed)");
    estimate->add_option("--out", out, "Output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Score estimates against truth with OSPA");
    evaluate->add_option("--truth", truth_dir, "Truth directory (single run or rep_NNNN parent)")->required();
    evaluate->add_option("--estimates", estimates_dir, "Estimates directory (same layout as truth)")->required();
    evaluate->add_option("--config", config_path, "JSON configuration supplying OSPA order and cutoff");
    evaluate->add_option("--out", out, "OSPA table path; quantiles go to <stem>_summary.csv")->required();

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo replications of simulate, estimate and evaluate");
    sweep->add_option("--config", config_path, "JSON configuration")->required();
    sweep->add_option("--reps", reps, "Number of replications")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", seed, "Master seed (defaults to the config seed)");
    sweep->add_option("--out", out, "Output directory")->required();
    sweep->add_flag("--resume", resume, "Skip replications that already completed");
    sweep->add_option("--workers", workers, "Worker threads (GSNCP_WORKERS overrides)");

    auto* peb = app.add_subcommand("peb-map", "Position error bound of one sensor on an x-y grid");
    peb->add_option("--config", config_path, "JSON configuration")->required();
    peb->add_option("--sensor", sensor, "Sensor index");
    peb->add_option("--height", height, "z of the slice");
    peb->add_option("--nx", nx, "Grid points along x")->check(CLI::PositiveNumber);
    peb->add_option("--ny", ny, "Grid points along y")->check(CLI::PositiveNumber);
    peb->add_option("--out", out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*simulate) {
            const auto config = gsncp::load_config(config_path);
            gsncp::write_simulation(out, gsncp::simulate_replication(config.scenario, seed_or_config(seed, config), 0));
        } else if (*estimate) {
            const gsncp::Method m = gsncp::parse_method(method);
            const auto config = gsncp::load_config(config_path);
            const auto data = gsncp::read_simulation(data_dir);
            gsncp::write_method_output(out,
                                       gsncp::estimate_replication(config, data, m, seed_or_config(seed, config), 0));
        } else if (*evaluate) {
            gsncp::ExperimentConfig config;
            if (!config_path.empty()) config = gsncp::load_config(config_path);
            const auto rows =
                gsncp::evaluate_directories(truth_dir, estimates_dir, config.ospa_order, config.ospa_cutoff);
            gsncp::write_ospa(out, rows);
            gsncp::write_quantiles(gsncp::summary_path_for(out), gsncp::summarize_ospa(rows));
        } else if (*sweep) {
            const auto config = gsncp::load_config(config_path);
            gsncp::SweepOptions options;
            options.replications = reps;
            options.seed = seed_or_config(seed, config);
            options.out = out;
            options.resume = resume;
            options.workers = workers;
            gsncp::run_sweep(config, options);
        } else if (*peb) {
            const auto config = gsncp::load_config(config_path);
            gsncp::write_peb_map(out, gsncp::peb_map(config.scenario, sensor, height, nx, ny));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
