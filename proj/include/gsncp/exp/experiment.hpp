#pragma once

#include "gsncp/baselines/baselines.hpp"
#include "gsncp/core/config.hpp"
#include "gsncp/exp/records.hpp"
#include "gsncp/mcmc/chain_config.hpp"
#include "gsncp/posterior/posterior.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gsncp {

/// Everything a run needs besides seeds and paths.
struct ExperimentConfig {
    ScenarioConfig scenario;
    ChainConfig chain;
    DbscanGrid dbscan;
    double ospa_order = 2.0;
    double ospa_cutoff = 10.0;

    void validate() const;
};

/// Parses a JSON document. Unknown keys are rejected so typos surface.
///
///     {
///       "scenario": {
///         "domain": {"lower": [0, 0, 0], "upper": [50, 20, 10]},
///         "hardcore_radius": 8,
///         "extent_prior": {"diag": [1, 1.5], "offdiag": [-0.5, 0.5]},
///         "lambda": 0.002, "lambda_c": 0.0035, "epochs": 6, "seed": 1,
///         "sensors": [{"position": [25, -10, 5], "sigma_range": 0.1, ...}]
///       },
///       "chain": {"move_prob": 0.8, ...},
///       "dbscan": {"eps": [0.5, 1.0], "min_pts": [2, 3]},
///       "ospa": {"order": 2, "cutoff": 10}
///     }
///
/// Every section and key except scenario.domain and scenario.sensors is
/// optional and falls back to the struct defaults.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Random-number streams drawn per (replication, epoch).
enum class SeedStream : std::uint64_t { scene = 1, measurements = 2, mcmc = 3 };

/// splitmix64 finalizer.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed of one stream in one cell:
///   mix(mix(mix(master + stream) + replication) + epoch).
/// The scene stream uses epoch 0.
std::uint64_t split_seed(std::uint64_t master, std::size_t replication, int epoch, SeedStream stream);

/// One simulated scan of one physical sensor in one epoch.
struct ScanRecord {
    int epoch = 1;
    std::size_t sensor_index = 0;
    std::vector<Eigen::Vector3d> points;
    /// Per point: originating target id, or -1 for clutter.
    std::vector<int> sources;
    std::size_t discarded = 0;
};

/// A full replication: one persistent scene observed over all epochs.
struct SimulationData {
    std::vector<TargetState> truth;
    int epochs = 0;
    std::size_t sensor_count = 0;
    /// Epoch-major, then sensor order.
    std::vector<ScanRecord> scans;
};

SimulationData simulate_replication(const ScenarioConfig& scenario, std::uint64_t master_seed,
                                    std::size_t replication);

/// Writes measurements.csv, associations.csv, truth.csv and scans.csv
/// (per-scan counts: epoch, sensor_index, detections, clutter, discarded).
void write_simulation(const std::filesystem::path& dir, const SimulationData& data);

/// Reads a directory written by write_simulation. Associations are loaded
/// when present; otherwise every source is -1.
SimulationData read_simulation(const std::filesystem::path& dir);

/// Observation pooled over all scans of epochs 1..epoch. Physical sensor s in
/// epoch e becomes sensor state (e - 1) * sensor_count + s.
Observation observation_for_epoch(const ScenarioConfig& scenario, const SimulationData& data, int epoch);

/// Per-scan source labels aligned with observation_for_epoch.
std::vector<std::vector<int>> sources_for_epoch(const SimulationData& data, int epoch);

PriorModel prior_model(const ScenarioConfig& scenario);

enum class Method : std::uint8_t { mcmc, dbscan, oracle };

inline constexpr Method kAllMethods[] = {Method::mcmc, Method::dbscan, Method::oracle};

std::string_view to_string(Method method);
/// Throws std::invalid_argument for anything but mcmc, dbscan or oracle.
Method parse_method(std::string_view name);

/// Per-epoch bookkeeping of one method. Fields that do not apply to a
/// method stay zero.
struct EpochSummary {
    int epoch = 1;
    std::size_t targets = 0;
    std::size_t iterations = 0;
    std::size_t burnin_iterations = 0;
    double lambda = 0.0;
    double lambda_c = 0.0;
    double center_acceptance = 0.0;
    double extent_acceptance = 0.0;
    double birth_acceptance = 0.0;
    double death_acceptance = 0.0;
    double dbscan_eps = 0.0;
    std::size_t dbscan_min_pts = 0;
    bool dbscan_fallback = false;
    /// Wall time; kept out of the deterministic tables.
    double seconds = 0.0;
};

struct MethodOutput {
    Method method = Method::mcmc;
    std::vector<EstimateRecord> estimates;
    std::vector<DiagnosticRecord> diagnostics;
    std::vector<EpochSummary> epochs;
};

/// Runs `method` on every epoch in order. The MCMC chain of epoch 1 starts
/// empty with the configured intensities; later epochs warm-start from the
/// previous estimate and intensities.
MethodOutput estimate_replication(const ExperimentConfig& config, const SimulationData& data, Method method,
                                  std::uint64_t master_seed, std::size_t replication);

/// Writes estimates_<m>.csv, diagnostics_<m>.csv, summary_<m>.csv and
/// runtime_<m>.csv.
void write_method_output(const std::filesystem::path& dir, const MethodOutput& output);

std::vector<EpochSummary> read_epoch_summaries(const std::filesystem::path& path);

/// Linear-interpolation quantile of sorted data at position (n - 1) q.
double sorted_quantile(const std::vector<double>& sorted, double q);

struct QuantileRow {
    int epoch = 1;
    std::string method;
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Five-number summary per (epoch, method), sorted by epoch then method.
std::vector<QuantileRow> summarize_ospa(const std::vector<OspaRecord>& rows);
void write_quantiles(const std::filesystem::path& path, const std::vector<QuantileRow>& rows);

/// OSPA per (replication, epoch, method).
///
/// When `truth_dir` holds truth.csv it is a single replication 0 whose
/// estimates live directly in `estimates_dir`; otherwise both directories
/// hold rep_NNNN subdirectories. Methods are every estimates_<m>.csv found;
/// a replication missing one of them is an error naming it.
std::vector<OspaRecord> evaluate_directories(const std::filesystem::path& truth_dir,
                                             const std::filesystem::path& estimates_dir, double order,
                                             double cutoff);

/// Path of the quantile table written next to an OSPA table.
std::filesystem::path summary_path_for(const std::filesystem::path& ospa_path);

std::string replication_dir_name(std::size_t replication);

struct SweepOptions {
    std::size_t replications = 1;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    bool resume = false;
    /// Zero selects the hardware concurrency.
    std::size_t workers = 0;
};

/// Worker count from GSNCP_WORKERS, else `fallback`, else the hardware
/// concurrency.
std::size_t worker_count(std::size_t fallback);

/// simulate -> estimate (all methods) -> evaluate over replications.
///
/// Writes rep_NNNN/ per replication (with a `done` marker once complete),
/// then ospa.csv, ospa_summary.csv, iterations.csv and runtime.csv in `out`.
/// With `resume`, replications carrying the marker are not recomputed.
void run_sweep(const ExperimentConfig& config, const SweepOptions& options);

/// Mean MCMC iterations per epoch across replications.
struct IterationRow {
    int epoch = 1;
    std::size_t replications = 0;
    double mean_iterations = 0.0;
    double mean_burnin = 0.0;
    std::size_t max_iterations = 0;
};
std::vector<IterationRow> read_iteration_summary(const std::filesystem::path& path);

struct PebRow {
    double x = 0.0;
    double y = 0.0;
    double peb = 0.0;
};

/// PEB of one sensor on an nx-by-ny grid spanning the domain's x-y extent at
/// height z, x varying slowest. A single row or column sits at the midpoint.
std::vector<PebRow> peb_map(const ScenarioConfig& scenario, std::size_t sensor, double height, std::size_t nx,
                            std::size_t ny);
void write_peb_map(const std::filesystem::path& path, const std::vector<PebRow>& rows);
std::vector<PebRow> read_peb_map(const std::filesystem::path& path);

}  // namespace gsncp
