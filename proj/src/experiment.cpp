#include "gsncp/exp/experiment.hpp"

#include "gsncp/metrics/metrics.hpp"
#include "gsncp/mcmc/sampler.hpp"
#include "gsncp/sim/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gsncp {

namespace {

using json = nlohmann::json;

// ---- configuration ----

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
    if (!j.is_object()) throw std::invalid_argument("config: '" + section + "' must be an object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw std::invalid_argument("config: unknown key '" + section + "." + item.key() + "'");
        }
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

Eigen::Vector3d read_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("config: '" + what + "' must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void read_range(const json& j, const char* key, double& low, double& high, const std::string& section) {
    if (!j.contains(key)) return;
    const json& r = j.at(key);
    if (!r.is_array() || r.size() != 2) {
        throw std::invalid_argument("config: '" + section + "." + key + "' must be [low, high]");
    }
    low = r[0].get<double>();
    high = r[1].get<double>();
}

SensorState parse_sensor(const json& j, const std::string& section) {
    reject_unknown(j, {"position", "sigma_range", "sigma_angle", "snr_ref", "p_fa", "r0", "min_range", "fading_sigma"},
                   section);
    SensorState s;
    if (!j.contains("position")) throw std::invalid_argument("config: '" + section + ".position' is required");
    s.position = read_vec3(j.at("position"), section + ".position");
    read_opt(j, "sigma_range", s.sigma_range);
    read_opt(j, "sigma_angle", s.sigma_angle);
    read_opt(j, "snr_ref", s.snr_ref);
    read_opt(j, "p_fa", s.p_fa);
    read_opt(j, "r0", s.r0);
    read_opt(j, "min_range", s.min_range);
    read_opt(j, "fading_sigma", s.fading_sigma);
    return s;
}

ScenarioConfig parse_scenario(const json& j) {
    reject_unknown(j, {"domain", "hardcore_radius", "extent_prior", "lambda", "lambda_c", "sensors", "epochs", "seed"},
                   "scenario");
    ScenarioConfig s;
    if (!j.contains("domain")) throw std::invalid_argument("config: 'scenario.domain' is required");
    const json& d = j.at("domain");
    reject_unknown(d, {"lower", "upper"}, "scenario.domain");
    if (!d.contains("lower") || !d.contains("upper")) {
        throw std::invalid_argument("config: 'scenario.domain' needs lower and upper");
    }
    s.domain.lower = read_vec3(d.at("lower"), "scenario.domain.lower");
    s.domain.upper = read_vec3(d.at("upper"), "scenario.domain.upper");
    read_opt(j, "hardcore_radius", s.hardcore_radius);
    if (j.contains("extent_prior")) {
        const json& p = j.at("extent_prior");
        reject_unknown(p, {"diag", "offdiag"}, "scenario.extent_prior");
        read_range(p, "diag", s.extent_prior.diag_low, s.extent_prior.diag_high, "scenario.extent_prior");
        read_range(p, "offdiag", s.extent_prior.offdiag_low, s.extent_prior.offdiag_high, "scenario.extent_prior");
    }
    read_opt(j, "lambda", s.lambda);
    read_opt(j, "lambda_c", s.lambda_c);
    read_opt(j, "epochs", s.epochs);
    read_opt(j, "seed", s.seed);
    if (!j.contains("sensors") || !j.at("sensors").is_array() || j.at("sensors").empty()) {
        throw std::invalid_argument("config: 'scenario.sensors' must be a non-empty array");
    }
    const json& sensors = j.at("sensors");
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        s.sensors.push_back(parse_sensor(sensors[i], "scenario.sensors[" + std::to_string(i) + "]"));
    }
    return s;
}

ChainConfig parse_chain(const json& j) {
    reject_unknown(j,
                   {"move_prob", "extent_move_prob", "birth_centers", "birth_extents", "birth_radius", "patience",
                    "averaging", "max_burnin", "adapt_window", "adapt_low", "adapt_high", "adapt_factor",
                    "initial_center_scale", "initial_extent_scale", "birth_uniform_weight",
                    "update_intensities"},
                   "chain");
    ChainConfig c;
    read_opt(j, "move_prob", c.move_prob);
    read_opt(j, "extent_move_prob", c.extent_move_prob);
    read_opt(j, "birth_centers", c.birth_centers);
    read_opt(j, "birth_extents", c.birth_extents);
    read_opt(j, "birth_radius", c.birth_radius);
    read_opt(j, "patience", c.patience);
    read_opt(j, "averaging", c.averaging);
    read_opt(j, "max_burnin", c.max_burnin);
    read_opt(j, "adapt_window", c.adapt_window);
    read_opt(j, "adapt_low", c.adapt_low);
    read_opt(j, "adapt_high", c.adapt_high);
    read_opt(j, "adapt_factor", c.adapt_factor);
    read_opt(j, "initial_center_scale", c.initial_center_scale);
    read_opt(j, "initial_extent_scale", c.initial_extent_scale);
    read_opt(j, "birth_uniform_weight", c.birth_uniform_weight);
    read_opt(j, "update_intensities", c.update_intensities);
    return c;
}

// ---- small table helpers ----

std::ofstream open_table(const std::filesystem::path& path, const std::string& header) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << '\n';
    return out;
}

void close_table(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> split_header(const std::string& header) {
    std::vector<std::string> cells;
    std::stringstream in(header);
    std::string cell;
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

template <typename T>
T cell_as(const std::string& s, const std::filesystem::path& path) {
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error(path.string() + ": malformed value '" + s + "'");
    }
    return value;
}

const std::string kScansHeader = "epoch,sensor_index,detections,clutter,discarded";
const std::string kSummaryHeader =
    "epoch,targets,iterations,burnin_iterations,lambda,lambda_c,center_acceptance,extent_acceptance,"
    "birth_acceptance,death_acceptance,dbscan_eps,dbscan_min_pts,dbscan_fallback";
const std::string kRuntimeHeader = "epoch,seconds";
const std::string kQuantileHeader = "epoch,method,count,min,q1,median,q3,max";
const std::string kIterationHeader = "epoch,replications,mean_iterations,mean_burnin,max_iterations";
const std::string kPebHeader = "x,y,peb";

double elapsed_seconds(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// Ordered list of methods with an estimates_<m>.csv in `dir`.
std::vector<std::string> methods_in(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(dir)) return names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string file = entry.path().filename().string();
        constexpr std::string_view prefix = "estimates_";
        constexpr std::string_view suffix = ".csv";
        if (file.size() > prefix.size() + suffix.size() && file.starts_with(prefix) && file.ends_with(suffix)) {
            names.push_back(file.substr(prefix.size(), file.size() - prefix.size() - suffix.size()));
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

std::vector<int> epochs_of(const std::filesystem::path& truth_dir) {
    const std::filesystem::path path = truth_dir / "scans.csv";
    const CsvTable t = read_csv(path, split_header(kScansHeader));
    std::set<int> epochs;
    for (const auto& row : t.rows) epochs.insert(cell_as<int>(row[0], path));
    return {epochs.begin(), epochs.end()};
}

// Replication indices of rep_NNNN subdirectories, ascending.
std::vector<std::size_t> replications_in(const std::filesystem::path& dir) {
    std::vector<std::size_t> reps;
    if (!std::filesystem::is_directory(dir)) return reps;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (!name.starts_with("rep_")) continue;
        std::size_t index = 0;
        const char* first = name.data() + 4;
        const char* last = name.data() + name.size();
        const auto [ptr, ec] = std::from_chars(first, last, index);
        if (ec == std::errc{} && ptr == last) reps.push_back(index);
    }
    std::sort(reps.begin(), reps.end());
    return reps;
}

void evaluate_one(std::size_t replication, const std::filesystem::path& truth_dir,
                  const std::filesystem::path& est_dir, const std::vector<std::string>& methods, double order,
                  double cutoff, std::vector<OspaRecord>& out) {
    const std::filesystem::path truth_path = truth_dir / "truth.csv";
    if (!std::filesystem::exists(truth_path)) {
        throw std::runtime_error("replication " + std::to_string(replication) + ": missing " + truth_path.string());
    }
    const auto truth = by_epoch(read_truth(truth_path));
    const std::vector<int> epochs = epochs_of(truth_dir);
    std::map<std::string, std::map<int, std::vector<TargetState>>> estimates;
    for (const auto& m : methods) {
        const std::filesystem::path path = est_dir / ("estimates_" + m + ".csv");
        if (!std::filesystem::exists(path)) {
            throw std::runtime_error("replication " + std::to_string(replication) + ": missing estimate file " +
                                     path.string());
        }
        estimates[m] = by_epoch(read_estimates(path));
    }
    static const std::vector<TargetState> kEmpty;
    for (int epoch : epochs) {
        const auto t = truth.find(epoch);
        const auto& x = t == truth.end() ? kEmpty : t->second;
        for (const auto& m : methods) {
            const auto e = estimates[m].find(epoch);
            const auto& y = e == estimates[m].end() ? kEmpty : e->second;
            out.push_back({replication, epoch, m, ospa(x, y, order, cutoff)});
        }
    }
}

}  // namespace

// ---- configuration ----

void ExperimentConfig::validate() const {
    scenario.validate();
    if (scenario.sensors.empty()) throw std::invalid_argument("config: at least one sensor is required");
    chain.validate();
    if (dbscan.eps.empty() || dbscan.min_pts.empty()) throw std::invalid_argument("config: empty dbscan grid");
    for (double e : dbscan.eps) {
        if (!(e > 0.0)) throw std::invalid_argument("config: dbscan eps values must be positive");
    }
    for (std::size_t m : dbscan.min_pts) {
        if (m == 0) throw std::invalid_argument("config: dbscan min_pts values must be positive");
    }
    if (!(ospa_order >= 1.0) || !(ospa_cutoff > 0.0)) {
        throw std::invalid_argument("config: ospa needs order >= 1 and cutoff > 0");
    }
}

ExperimentConfig parse_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ExperimentConfig config;
    try {
        reject_unknown(root, {"scenario", "chain", "dbscan", "ospa"}, "root");
        if (!root.contains("scenario")) throw std::invalid_argument("config: 'scenario' is required");
        config.scenario = parse_scenario(root.at("scenario"));
        if (root.contains("chain")) config.chain = parse_chain(root.at("chain"));
        if (root.contains("dbscan")) {
            const json& d = root.at("dbscan");
            reject_unknown(d, {"eps", "min_pts"}, "dbscan");
            read_opt(d, "eps", config.dbscan.eps);
            read_opt(d, "min_pts", config.dbscan.min_pts);
        }
        if (root.contains("ospa")) {
            const json& o = root.at("ospa");
            reject_unknown(o, {"order", "cutoff"}, "ospa");
            read_opt(o, "order", config.ospa_order);
            read_opt(o, "cutoff", config.ospa_cutoff);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

// ---- seeds ----

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::size_t replication, int epoch, SeedStream stream) {
    std::uint64_t h = mix_seed(master + static_cast<std::uint64_t>(stream));
    h = mix_seed(h + replication);
    return mix_seed(h + static_cast<std::uint64_t>(epoch));
}

// ---- simulation ----

SimulationData simulate_replication(const ScenarioConfig& scenario, std::uint64_t master_seed,
                                    std::size_t replication) {
    scenario.validate();
    SimulationData data;
    data.epochs = scenario.epochs;
    data.sensor_count = scenario.sensors.size();
    Rng scene_rng(split_seed(master_seed, replication, 0, SeedStream::scene));
    data.truth = sample_hardcore_scene(scene_rng, scenario).targets;
    for (int epoch = 1; epoch <= scenario.epochs; ++epoch) {
        Rng rng(split_seed(master_seed, replication, epoch, SeedStream::measurements));
        auto scans = simulate_measurements(rng, data.truth, scenario.sensors, scenario.lambda_c, scenario.domain);
        for (std::size_t s = 0; s < scans.size(); ++s) {
            data.scans.push_back({epoch, s, std::move(scans[s].set.points), std::move(scans[s].sources),
                                  scans[s].discarded});
        }
    }
    return data;
}

void write_simulation(const std::filesystem::path& dir, const SimulationData& data) {
    std::vector<MeasurementRecord> meas;
    std::vector<AssociationRecord> assoc;
    for (const auto& scan : data.scans) {
        for (std::size_t m = 0; m < scan.points.size(); ++m) {
            meas.push_back({scan.epoch, scan.sensor_index, scan.points[m]});
            assoc.push_back({scan.epoch, scan.sensor_index, m, scan.sources[m]});
        }
    }
    write_measurements(dir / "measurements.csv", meas);
    write_associations(dir / "associations.csv", assoc);

    std::vector<TruthRecord> truth;
    for (int epoch = 1; epoch <= data.epochs; ++epoch) {
        for (std::size_t l = 0; l < data.truth.size(); ++l) truth.push_back({epoch, l, data.truth[l]});
    }
    write_truth(dir / "truth.csv", truth);

    const std::filesystem::path scans_path = dir / "scans.csv";
    auto out = open_table(scans_path, kScansHeader);
    for (const auto& scan : data.scans) {
        const auto clutter =
            static_cast<std::size_t>(std::count(scan.sources.begin(), scan.sources.end(), -1));
        out << scan.epoch << ',' << scan.sensor_index << ',' << scan.points.size() - clutter << ',' << clutter << ','
            << scan.discarded << '\n';
    }
    close_table(out, scans_path);
}

SimulationData read_simulation(const std::filesystem::path& dir) {
    SimulationData data;
    const std::filesystem::path scans_path = dir / "scans.csv";
    const CsvTable scans = read_csv(scans_path, split_header(kScansHeader));
    std::map<std::pair<int, std::size_t>, std::size_t> slot;
    for (const auto& row : scans.rows) {
        ScanRecord scan;
        scan.epoch = cell_as<int>(row[0], scans_path);
        scan.sensor_index = cell_as<std::size_t>(row[1], scans_path);
        scan.discarded = cell_as<std::size_t>(row[4], scans_path);
        data.epochs = std::max(data.epochs, scan.epoch);
        data.sensor_count = std::max(data.sensor_count, scan.sensor_index + 1);
        slot[{scan.epoch, scan.sensor_index}] = data.scans.size();
        data.scans.push_back(std::move(scan));
    }
    auto find_scan = [&](int epoch, std::size_t sensor) -> ScanRecord& {
        const auto it = slot.find({epoch, sensor});
        if (it == slot.end()) {
            throw std::runtime_error(dir.string() + ": no scan for epoch " + std::to_string(epoch) + ", sensor " +
                                     std::to_string(sensor));
        }
        return data.scans[it->second];
    };
    for (const auto& r : read_measurements(dir / "measurements.csv")) {
        ScanRecord& scan = find_scan(r.epoch, r.sensor_index);
        scan.points.push_back(r.point);
        scan.sources.push_back(-1);
    }
    if (std::filesystem::exists(dir / "associations.csv")) {
        for (const auto& a : read_associations(dir / "associations.csv")) {
            ScanRecord& scan = find_scan(a.epoch, a.sensor_index);
            if (a.point_index >= scan.sources.size()) {
                throw std::runtime_error(dir.string() + ": association refers to a missing point");
            }
            scan.sources[a.point_index] = a.target_id;
        }
    }
    const auto truth = by_epoch(read_truth(dir / "truth.csv"));
    if (const auto it = truth.find(1); it != truth.end()) data.truth = it->second;
    return data;
}

Observation observation_for_epoch(const ScenarioConfig& scenario, const SimulationData& data, int epoch) {
    if (epoch < 1 || epoch > data.epochs) throw std::out_of_range("epoch " + std::to_string(epoch) + " not simulated");
    if (data.sensor_count != scenario.sensors.size()) {
        throw std::invalid_argument("data has " + std::to_string(data.sensor_count) + " sensors, config has " +
                                    std::to_string(scenario.sensors.size()));
    }
    Observation obs;
    obs.domain = scenario.domain;
    for (int e = 1; e <= epoch; ++e) obs.sensors.insert(obs.sensors.end(), scenario.sensors.begin(), scenario.sensors.end());
    for (const auto& scan : data.scans) {
        if (scan.epoch > epoch) continue;
        const std::size_t k = static_cast<std::size_t>(scan.epoch - 1) * data.sensor_count + scan.sensor_index;
        obs.scans.push_back({k, scan.points});
    }
    return obs;
}

std::vector<std::vector<int>> sources_for_epoch(const SimulationData& data, int epoch) {
    std::vector<std::vector<int>> sources;
    for (const auto& scan : data.scans) {
        if (scan.epoch <= epoch) sources.push_back(scan.sources);
    }
    return sources;
}

PriorModel prior_model(const ScenarioConfig& scenario) {
    PriorModel prior;
    prior.domain = scenario.domain;
    prior.hardcore_radius = scenario.hardcore_radius;
    prior.extent_prior = scenario.extent_prior;
    return prior;
}

// ---- estimation ----

std::string_view to_string(Method method) {
    switch (method) {
        case Method::mcmc: return "mcmc";
        case Method::dbscan: return "dbscan";
        case Method::oracle: return "oracle";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected mcmc, dbscan or oracle)");
}

MethodOutput estimate_replication(const ExperimentConfig& config, const SimulationData& data, Method method,
                                  std::uint64_t master_seed, std::size_t replication) {
    const ScenarioConfig& scenario = config.scenario;
    const PriorModel prior = prior_model(scenario);
    const std::string name(to_string(method));
    MethodOutput output;
    output.method = method;

    ModelParams warm;
    for (int epoch = 1; epoch <= data.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const Observation obs = observation_for_epoch(scenario, data, epoch);
        EpochSummary summary;
        summary.epoch = epoch;
        std::vector<TargetState> states;

        switch (method) {
            case Method::mcmc: {
                if (epoch == 1) {
                    // Intensities must be positive for the prior to have mass.
                    const double floor = 1.0 / (static_cast<double>(obs.sensor_state_count()) * obs.domain.volume());
                    warm.targets.clear();
                    warm.lambda = std::max(scenario.lambda, 1.0 / obs.domain.volume());
                    warm.lambda_c = std::max(scenario.lambda_c, floor);
                }
                Rng rng(split_seed(master_seed, replication, epoch, SeedStream::mcmc));
                const ChainResult result = run_chain(rng, obs, prior, config.chain, warm);
                states = result.estimate;
                warm = result.final_params;
                warm.targets = result.estimate;
                summary.iterations = result.total_iterations;
                summary.burnin_iterations = result.burnin_iterations;
                summary.lambda = result.final_params.lambda;
                summary.lambda_c = result.final_params.lambda_c;
                summary.center_acceptance = result.center_acceptance;
                summary.extent_acceptance = result.extent_acceptance;
                summary.birth_acceptance = result.birth_acceptance;
                summary.death_acceptance = result.death_acceptance;
                for (const auto& rec : result.trace) {
                    std::string kind(to_string(rec.kind));
                    if (rec.kind != ProposalKind::none && !rec.accepted) kind += "_rejected";
                    output.diagnostics.push_back(
                        {epoch, rec.iteration, rec.log_posterior, rec.targets, rec.lambda, rec.lambda_c, kind});
                }
                break;
            }
            case Method::dbscan: {
                const DbscanSelection sel = dbscan_grid_search(obs, prior, config.dbscan);
                states = sel.states;
                summary.lambda = sel.params.lambda;
                summary.lambda_c = sel.params.lambda_c;
                summary.dbscan_eps = sel.eps;
                summary.dbscan_min_pts = sel.min_pts;
                summary.dbscan_fallback = sel.fallback;
                break;
            }
            case Method::oracle: {
                states = oracle_estimate(obs, sources_for_epoch(data, epoch), data.truth);
                break;
            }
        }

        summary.targets = states.size();
        for (std::size_t l = 0; l < states.size(); ++l) output.estimates.push_back({epoch, name, l, states[l]});
        summary.seconds = elapsed_seconds(start);
        output.epochs.push_back(summary);
    }
    return output;
}

void write_method_output(const std::filesystem::path& dir, const MethodOutput& output) {
    const std::string name(to_string(output.method));
    write_estimates(dir / ("estimates_" + name + ".csv"), output.estimates);
    if (output.method == Method::mcmc) write_diagnostics(dir / ("diagnostics_" + name + ".csv"), output.diagnostics);

    const std::filesystem::path summary_path = dir / ("summary_" + name + ".csv");
    auto summary = open_table(summary_path, kSummaryHeader);
    for (const auto& e : output.epochs) {
        summary << e.epoch << ',' << e.targets << ',' << e.iterations << ',' << e.burnin_iterations << ','
                << format_double(e.lambda) << ',' << format_double(e.lambda_c) << ','
                << format_double(e.center_acceptance) << ',' << format_double(e.extent_acceptance) << ','
                << format_double(e.birth_acceptance) << ',' << format_double(e.death_acceptance) << ','
                << format_double(e.dbscan_eps) << ',' << e.dbscan_min_pts << ',' << (e.dbscan_fallback ? 1 : 0)
                << '\n';
    }
    close_table(summary, summary_path);

    const std::filesystem::path runtime_path = dir / ("runtime_" + name + ".csv");
    auto runtime = open_table(runtime_path, kRuntimeHeader);
    for (const auto& e : output.epochs) runtime << e.epoch << ',' << format_double(e.seconds) << '\n';
    close_table(runtime, runtime_path);
}

std::vector<EpochSummary> read_epoch_summaries(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, split_header(kSummaryHeader));
    std::vector<EpochSummary> rows;
    for (const auto& c : t.rows) {
        EpochSummary e;
        e.epoch = cell_as<int>(c[0], path);
        e.targets = cell_as<std::size_t>(c[1], path);
        e.iterations = cell_as<std::size_t>(c[2], path);
        e.burnin_iterations = cell_as<std::size_t>(c[3], path);
        e.lambda = cell_as<double>(c[4], path);
        e.lambda_c = cell_as<double>(c[5], path);
        e.center_acceptance = cell_as<double>(c[6], path);
        e.extent_acceptance = cell_as<double>(c[7], path);
        e.birth_acceptance = cell_as<double>(c[8], path);
        e.death_acceptance = cell_as<double>(c[9], path);
        e.dbscan_eps = cell_as<double>(c[10], path);
        e.dbscan_min_pts = cell_as<std::size_t>(c[11], path);
        e.dbscan_fallback = cell_as<int>(c[12], path) != 0;
        rows.push_back(e);
    }
    // Attach wall times when the runtime table sits alongside.
    std::filesystem::path runtime_path = path;
    const std::string file = path.filename().string();
    if (file.starts_with("summary_")) {
        runtime_path.replace_filename("runtime_" + file.substr(8));
        if (std::filesystem::exists(runtime_path)) {
            const CsvTable r = read_csv(runtime_path, split_header(kRuntimeHeader));
            for (const auto& c : r.rows) {
                const int epoch = cell_as<int>(c[0], runtime_path);
                for (auto& e : rows) {
                    if (e.epoch == epoch) e.seconds = cell_as<double>(c[1], runtime_path);
                }
            }
        }
    }
    return rows;
}

// ---- evaluation ----

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sorted_quantile: q outside [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<QuantileRow> summarize_ospa(const std::vector<OspaRecord>& rows) {
    std::map<std::pair<int, std::string>, std::vector<double>> groups;
    for (const auto& r : rows) groups[{r.epoch, r.method}].push_back(r.ospa);
    std::vector<QuantileRow> out;
    for (auto& [key, values] : groups) {
        std::sort(values.begin(), values.end());
        out.push_back({key.first, key.second, values.size(), values.front(), sorted_quantile(values, 0.25),
                       sorted_quantile(values, 0.5), sorted_quantile(values, 0.75), values.back()});
    }
    return out;
}

void write_quantiles(const std::filesystem::path& path, const std::vector<QuantileRow>& rows) {
    auto out = open_table(path, kQuantileHeader);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.method << ',' << r.count << ',' << format_double(r.min) << ','
            << format_double(r.q1) << ',' << format_double(r.median) << ',' << format_double(r.q3) << ','
            << format_double(r.max) << '\n';
    }
    close_table(out, path);
}

std::vector<OspaRecord> evaluate_directories(const std::filesystem::path& truth_dir,
                                             const std::filesystem::path& estimates_dir, double order,
                                             double cutoff) {
    std::vector<OspaRecord> out;
    if (std::filesystem::exists(truth_dir / "truth.csv")) {
        const auto methods = methods_in(estimates_dir);
        if (methods.empty()) {
            throw std::runtime_error("replication 0: no estimate files in " + estimates_dir.string());
        }
        evaluate_one(0, truth_dir, estimates_dir, methods, order, cutoff, out);
        return out;
    }
    const auto reps = replications_in(truth_dir);
    if (reps.empty()) {
        throw std::runtime_error("no truth.csv or rep_NNNN directories in " + truth_dir.string());
    }
    std::set<std::string> all;
    for (std::size_t r : reps) {
        for (auto& m : methods_in(estimates_dir / replication_dir_name(r))) all.insert(m);
    }
    if (all.empty()) throw std::runtime_error("no estimate files under " + estimates_dir.string());
    const std::vector<std::string> methods(all.begin(), all.end());
    for (std::size_t r : reps) {
        const std::filesystem::path est = estimates_dir / replication_dir_name(r);
        if (!std::filesystem::is_directory(est)) {
            throw std::runtime_error("replication " + std::to_string(r) + ": missing estimates directory " +
                                     est.string());
        }
        evaluate_one(r, truth_dir / replication_dir_name(r), est, methods, order, cutoff, out);
    }
    return out;
}

std::filesystem::path summary_path_for(const std::filesystem::path& ospa_path) {
    std::filesystem::path p = ospa_path;
    p.replace_filename(ospa_path.stem().string() + "_summary.csv");
    return p;
}

std::string replication_dir_name(std::size_t replication) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rep_%04zu", replication);
    return buf;
}

// ---- sweep ----

std::size_t worker_count(std::size_t fallback) {
    if (const char* env = std::getenv("GSNCP_WORKERS"); env != nullptr && *env != '\0') {
        std::size_t n = 0;
        const char* last = env + std::char_traits<char>::length(env);
        const auto [ptr, ec] = std::from_chars(env, last, n);
        if (ec != std::errc{} || ptr != last || n == 0) {
            throw std::invalid_argument("GSNCP_WORKERS must be a positive integer, got '" + std::string(env) + "'");
        }
        return n;
    }
    if (fallback > 0) return fallback;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
    config.validate();
    if (options.replications == 0) throw std::invalid_argument("sweep: need at least one replication");
    std::filesystem::create_directories(options.out);

    auto run_one = [&](std::size_t r) {
        const std::filesystem::path dir = options.out / replication_dir_name(r);
        const std::filesystem::path marker = dir / "done";
        if (options.resume && std::filesystem::exists(marker)) return;
        std::filesystem::create_directories(dir);
        std::filesystem::remove(marker);
        const SimulationData data = simulate_replication(config.scenario, options.seed, r);
        write_simulation(dir, data);
        for (Method m : kAllMethods) {
            write_method_output(dir, estimate_replication(config, data, m, options.seed, r));
        }
        std::ofstream(marker) << "ok\n";
    };

    const std::size_t workers = std::min(worker_count(options.workers), options.replications);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(options.replications);
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < options.replications; r = next++) {
            try {
                run_one(r);
                std::lock_guard lock(log_mutex);
                std::cerr << "replication " << r << " done\n";
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t r = 0; r < errors.size(); ++r) {
        if (!errors[r]) continue;
        try {
            std::rethrow_exception(errors[r]);
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(r) + ": " + e.what());
        }
    }

    const auto ospa_rows = evaluate_directories(options.out, options.out, config.ospa_order, config.ospa_cutoff);
    write_ospa(options.out / "ospa.csv", ospa_rows);
    write_quantiles(options.out / "ospa_summary.csv", summarize_ospa(ospa_rows));

    std::map<int, std::vector<EpochSummary>> per_epoch;
    const std::filesystem::path runtime_path = options.out / "runtime.csv";
    auto runtime = open_table(runtime_path, "replication,method,epoch,seconds");
    for (std::size_t r = 0; r < options.replications; ++r) {
        const std::filesystem::path dir = options.out / replication_dir_name(r);
        for (Method m : kAllMethods) {
            const std::string name(to_string(m));
            const auto summaries = read_epoch_summaries(dir / ("summary_" + name + ".csv"));
            for (const auto& e : summaries) {
                runtime << r << ',' << name << ',' << e.epoch << ',' << format_double(e.seconds) << '\n';
                if (m == Method::mcmc) per_epoch[e.epoch].push_back(e);
            }
        }
    }
    close_table(runtime, runtime_path);

    const std::filesystem::path iter_path = options.out / "iterations.csv";
    auto iters = open_table(iter_path, kIterationHeader);
    for (const auto& [epoch, rows] : per_epoch) {
        double total = 0.0, burnin = 0.0;
        std::size_t max_it = 0;
        for (const auto& e : rows) {
            total += static_cast<double>(e.iterations);
            burnin += static_cast<double>(e.burnin_iterations);
            max_it = std::max(max_it, e.iterations);
        }
        const auto n = static_cast<double>(rows.size());
        iters << epoch << ',' << rows.size() << ',' << format_double(total / n) << ',' << format_double(burnin / n)
              << ',' << max_it << '\n';
    }
    close_table(iters, iter_path);
}

std::vector<IterationRow> read_iteration_summary(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, split_header(kIterationHeader));
    std::vector<IterationRow> rows;
    for (const auto& c : t.rows) {
        rows.push_back({cell_as<int>(c[0], path), cell_as<std::size_t>(c[1], path), cell_as<double>(c[2], path),
                        cell_as<double>(c[3], path), cell_as<std::size_t>(c[4], path)});
    }
    return rows;
}

// ---- PEB map ----

std::vector<PebRow> peb_map(const ScenarioConfig& scenario, std::size_t sensor, double height, std::size_t nx,
                            std::size_t ny) {
    if (sensor >= scenario.sensors.size()) {
        throw std::out_of_range("peb_map: sensor " + std::to_string(sensor) + " does not exist");
    }
    if (nx == 0 || ny == 0) throw std::invalid_argument("peb_map: grid needs nx, ny >= 1");
    auto axis = [](double lo, double hi, std::size_t n, std::size_t i) {
        if (n == 1) return 0.5 * (lo + hi);
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    const Domain& d = scenario.domain;
    const SensorState& s = scenario.sensors[sensor];
    std::vector<PebRow> rows;
    rows.reserve(nx * ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const Eigen::Vector3d p(axis(d.lower(0), d.upper(0), nx, i), axis(d.lower(1), d.upper(1), ny, j), height);
            // The bound is undefined at the sensor itself.
            const double value = (p - s.position).norm() > 0.0 ? peb(s, p) : std::numeric_limits<double>::infinity();
            rows.push_back({p(0), p(1), value});
        }
    }
    return rows;
}

void write_peb_map(const std::filesystem::path& path, const std::vector<PebRow>& rows) {
    auto out = open_table(path, kPebHeader);
    for (const auto& r : rows) out << format_double(r.x) << ',' << format_double(r.y) << ',' << format_double(r.peb) << '\n';
    close_table(out, path);
}

std::vector<PebRow> read_peb_map(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, split_header(kPebHeader));
    std::vector<PebRow> rows;
    for (const auto& c : t.rows) rows.push_back({cell_as<double>(c[0], path), cell_as<double>(c[1], path), cell_as<double>(c[2], path)});
    return rows;
}

}  // namespace gsncp
