#include "gsncp/exp/experiment.hpp"
#include "gsncp/metrics/metrics.hpp"
#include "gsncp/sensor/sensor_field.hpp"
#include "gsncp/sim/scene.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace gsncp;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory under the system temp path, removed on exit.
struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& name) : path(fs::temp_directory_path() / ("gsncp_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// A small, fast scenario: a couple of targets, two sensors, two epochs.
constexpr const char* kSmallConfig = R"({
  "scenario": {
    "domain": {"lower": [0, 0, 0], "upper": [20, 10, 6]},
    "hardcore_radius": 6,
    "lambda": 0.0025,
    "lambda_c": 0.0025,
    "epochs": 2,
    "seed": 7,
    "sensors": [
      {"position": [10, -10, 3], "sigma_range": 0.1, "sigma_angle": 0.01, "snr_ref": 6.25e7, "r0": 1500},
      {"position": [10, 20, 3], "sigma_range": 0.1, "sigma_angle": 0.01, "snr_ref": 6.25e7, "r0": 1500}
    ]
  },
  "chain": {"patience": 50, "averaging": 20},
  "dbscan": {"eps": [1.0, 2.0], "min_pts": [3, 5]}
})";

ExperimentConfig small_config() { return parse_config(kSmallConfig); }

bool same_files(const fs::path& a, const fs::path& b, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        if (slurp(a / n) != slurp(b / n)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("split_seed: deterministic and distinct across cells") {
    CHECK(mix_seed(0) == 0xe220a8397b1dcdafULL);
    CHECK(split_seed(5, 3, 2, SeedStream::mcmc) == split_seed(5, 3, 2, SeedStream::mcmc));
    std::set<std::uint64_t> seen;
    for (std::size_t r = 0; r < 10; ++r) {
        for (int e = 0; e <= 6; ++e) {
            for (SeedStream s : {SeedStream::scene, SeedStream::measurements, SeedStream::mcmc}) {
                seen.insert(split_seed(2024, r, e, s));
            }
        }
    }
    CHECK(seen.size() == 10 * 7 * 3);
}

TEST_CASE("parse_config: defaults, unknown keys and validation") {
    const ExperimentConfig c = small_config();
    CHECK(c.scenario.sensors.size() == 2);
    CHECK(c.scenario.epochs == 2);
    CHECK(c.chain.patience == 50);
    CHECK(c.chain.move_prob == 0.8);
    CHECK(c.ospa_cutoff == 10.0);
    CHECK(c.dbscan.eps.size() == 2);

    std::string typo = kSmallConfig;
    typo.replace(typo.find("\"patience\""), 10, "\"patiense\"");
    CHECK_THROWS_WITH_AS(parse_config(typo), doctest::Contains("patiense"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(R"({"chain": {}})"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("not json"), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::runtime_error);
}

TEST_CASE("records round-trip through CSV") {
    ScratchDir dir("records");
    Rng rng(101);
    std::uniform_real_distribution<double> u(-50, 50);

    std::vector<MeasurementRecord> meas;
    std::vector<TruthRecord> truth;
    std::vector<EstimateRecord> est;
    for (int i = 0; i < 20; ++i) {
        meas.push_back({1 + i % 3, std::size_t(i % 2), Eigen::Vector3d(u(rng), u(rng), u(rng) * 1e-7)});
        TargetState t;
        t.center = Eigen::Vector3d(u(rng), u(rng), u(rng));
        t.extent.e << 1.0 + i, 1.0 / 3.0, 1e-9, u(rng), u(rng), u(rng);
        truth.push_back({1 + i % 2, std::size_t(i), t});
        est.push_back({1 + i % 2, "mcmc", std::size_t(i), t});
    }
    write_measurements(dir.path / "m.csv", meas);
    write_truth(dir.path / "t.csv", truth);
    write_estimates(dir.path / "e.csv", est);
    const auto meas_back = read_measurements(dir.path / "m.csv");
    const auto truth_back = read_truth(dir.path / "t.csv");
    const auto est_back = read_estimates(dir.path / "e.csv");
    REQUIRE(meas_back.size() == meas.size());
    for (std::size_t i = 0; i < meas.size(); ++i) {
        CHECK(meas_back[i].epoch == meas[i].epoch);
        CHECK(meas_back[i].sensor_index == meas[i].sensor_index);
        CHECK(meas_back[i].point == meas[i].point);
        CHECK(truth_back[i].state.center == truth[i].state.center);
        CHECK(truth_back[i].state.extent.e == truth[i].state.extent.e);
        CHECK(est_back[i].method == "mcmc");
        CHECK(est_back[i].state.extent.e == est[i].state.extent.e);
    }

    const std::vector<AssociationRecord> assoc{{1, 0, 0, 3}, {2, 1, 4, -1}};
    write_associations(dir.path / "a.csv", assoc);
    const auto assoc_back = read_associations(dir.path / "a.csv");
    REQUIRE(assoc_back.size() == 2);
    CHECK(assoc_back[1].target_id == -1);
    CHECK(assoc_back[1].point_index == 4);

    const std::vector<DiagnosticRecord> diag{{1, 0, -12.5, 2, 0.002, 0.0035, "birth"}};
    write_diagnostics(dir.path / "d.csv", diag);
    const auto diag_back = read_diagnostics(dir.path / "d.csv");
    REQUIRE(diag_back.size() == 1);
    CHECK(diag_back[0].log_posterior == -12.5);
    CHECK(diag_back[0].accept_kind == "birth");

    const std::vector<OspaRecord> ospa_rows{{3, 2, "oracle", 0.1 + 0.2}};
    write_ospa(dir.path / "o.csv", ospa_rows);
    CHECK(read_ospa(dir.path / "o.csv")[0].ospa == 0.1 + 0.2);

    std::ofstream(dir.path / "bad.csv") << "epoch,sensor_index,x,y,z\n1,0,1.0,abc,2\n";
    CHECK_THROWS_WITH_AS(read_measurements(dir.path / "bad.csv"), doctest::Contains("abc"), std::runtime_error);
    std::ofstream(dir.path / "header.csv") << "epoch,x\n";
    CHECK_THROWS_AS(read_measurements(dir.path / "header.csv"), std::runtime_error);
}

TEST_CASE("simulate_replication: determinism and layout") {
    const ExperimentConfig c = small_config();
    const SimulationData a = simulate_replication(c.scenario, 11, 0);
    const SimulationData b = simulate_replication(c.scenario, 11, 0);
    CHECK(a.epochs == 2);
    CHECK(a.sensor_count == 2);
    REQUIRE(a.scans.size() == 4);
    for (std::size_t i = 0; i < a.scans.size(); ++i) {
        CHECK(a.scans[i].epoch == int(i / 2) + 1);
        CHECK(a.scans[i].sensor_index == i % 2);
        CHECK(a.scans[i].points.size() == a.scans[i].sources.size());
        for (const auto& p : a.scans[i].points) CHECK(c.scenario.domain.contains(p));
    }

    ScratchDir dir("simulate");
    write_simulation(dir.path / "a", a);
    write_simulation(dir.path / "b", b);
    CHECK(same_files(dir.path / "a", dir.path / "b",
                     {"measurements.csv", "associations.csv", "truth.csv", "scans.csv"}));

    const SimulationData other = simulate_replication(c.scenario, 11, 1);
    CHECK(other.scans[0].points != a.scans[0].points);

    const SimulationData back = read_simulation(dir.path / "a");
    CHECK(back.epochs == a.epochs);
    REQUIRE(back.scans.size() == a.scans.size());
    for (std::size_t i = 0; i < a.scans.size(); ++i) {
        CHECK(back.scans[i].points == a.scans[i].points);
        CHECK(back.scans[i].sources == a.scans[i].sources);
        CHECK(back.scans[i].discarded == a.scans[i].discarded);
    }
    REQUIRE(back.truth.size() == a.truth.size());
    for (std::size_t l = 0; l < a.truth.size(); ++l) CHECK(back.truth[l].center == a.truth[l].center);
}

TEST_CASE("simulate_replication: clutter count per sensor-epoch") {
    ExperimentConfig c = small_config();
    c.scenario.lambda = 0.0;
    c.scenario.lambda_c = 35.0 / c.scenario.domain.volume();
    double total = 0.0;
    std::size_t scans = 0;
    for (std::size_t r = 0; r < 500; ++r) {
        const SimulationData d = simulate_replication(c.scenario, 3, r);
        for (const auto& s : d.scans) {
            total += double(std::count(s.sources.begin(), s.sources.end(), -1));
            ++scans;
        }
    }
    const double mean = total / double(scans);
    CHECK(std::abs(mean - 35.0) < 3.0 * std::sqrt(35.0 / double(scans)));
}

TEST_CASE("observation_for_epoch pools earlier epochs with epoch-major sensor states") {
    const ExperimentConfig c = small_config();
    const SimulationData d = simulate_replication(c.scenario, 12, 0);
    const Observation one = observation_for_epoch(c.scenario, d, 1);
    const Observation two = observation_for_epoch(c.scenario, d, 2);
    CHECK(one.scans.size() == 2);
    REQUIRE(two.scans.size() == 4);
    REQUIRE(two.sensors.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(two.scans[k].sensor_index == k);
        CHECK(two.scans[k].points == d.scans[k].points);
        CHECK(two.sensors[k].position == c.scenario.sensors[k % 2].position);
    }
    const auto sources = sources_for_epoch(d, 2);
    REQUIRE(sources.size() == 4);
    CHECK(sources[3] == d.scans[3].sources);
    CHECK_THROWS_AS(observation_for_epoch(c.scenario, d, 3), std::out_of_range);
}

TEST_CASE("parse_method rejects unknown names") {
    CHECK(parse_method("mcmc") == Method::mcmc);
    CHECK(parse_method("dbscan") == Method::dbscan);
    CHECK(parse_method("oracle") == Method::oracle);
    CHECK(to_string(Method::oracle) == "oracle");
    CHECK_THROWS_WITH_AS(parse_method("kmeans"), doctest::Contains("unknown method"), std::invalid_argument);
}

TEST_CASE("oracle is accurate on a clutter-free single target") {
    ExperimentConfig c = small_config();
    c.scenario.epochs = 6;
    TargetState truth;
    truth.center = Eigen::Vector3d(10, 5, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        SimulationData d;
        d.truth = {truth};
        d.epochs = c.scenario.epochs;
        d.sensor_count = c.scenario.sensors.size();
        for (int epoch = 1; epoch <= d.epochs; ++epoch) {
            auto scans = simulate_measurements(rng, d.truth, c.scenario.sensors, 0.0, c.scenario.domain);
            for (std::size_t s = 0; s < scans.size(); ++s) {
                d.scans.push_back({epoch, s, scans[s].set.points, scans[s].sources, scans[s].discarded});
            }
        }
        const MethodOutput out = estimate_replication(c, d, Method::oracle, 0, 0);
        CHECK(ospa(d.truth, by_epoch(out.estimates).at(6)) < 0.5);
    }
}

TEST_CASE("estimate_replication: mcmc starts from a birth, dbscan and oracle produce estimates") {
    const ExperimentConfig c = small_config();
    const SimulationData d = simulate_replication(c.scenario, 31, 0);
    const MethodOutput mcmc = estimate_replication(c, d, Method::mcmc, 31, 0);
    REQUIRE_FALSE(mcmc.diagnostics.empty());
    CHECK(mcmc.diagnostics.front().epoch == 1);
    CHECK(mcmc.diagnostics.front().iteration == 0);
    CHECK(mcmc.diagnostics.front().accept_kind.rfind("birth", 0) == 0);
    REQUIRE(mcmc.epochs.size() == 2);
    for (const auto& e : mcmc.epochs) {
        CHECK(e.iterations == e.burnin_iterations + c.chain.averaging);
        CHECK(e.burnin_iterations >= c.chain.patience);
        CHECK(e.lambda_c > 0.0);
    }

    const MethodOutput again = estimate_replication(c, d, Method::mcmc, 31, 0);
    REQUIRE(again.estimates.size() == mcmc.estimates.size());
    for (std::size_t i = 0; i < again.estimates.size(); ++i) {
        CHECK(again.estimates[i].state.center == mcmc.estimates[i].state.center);
    }

    const MethodOutput db = estimate_replication(c, d, Method::dbscan, 31, 0);
    REQUIRE(db.epochs.size() == 2);
    CHECK(db.epochs[0].dbscan_eps > 0.0);
    for (const auto& e : db.estimates) CHECK(e.method == "dbscan");
}

TEST_CASE("evaluate_directories: truth against itself scores zero, missing files are named") {
    const ExperimentConfig c = small_config();
    ScratchDir dir("evaluate");
    const SimulationData d = simulate_replication(c.scenario, 41, 0);
    write_simulation(dir.path, d);

    std::vector<EstimateRecord> perfect;
    for (const auto& t : read_truth(dir.path / "truth.csv")) perfect.push_back({t.epoch, "mcmc", t.target_id, t.state});
    write_estimates(dir.path / "estimates_mcmc.csv", perfect);
    const auto rows = evaluate_directories(dir.path, dir.path, 2.0, 10.0);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.ospa == 0.0);
        CHECK(r.method == "mcmc");
    }

    // Replicated layout: rep_0001 lacks the estimate file present in rep_0000.
    const fs::path sweep = dir.path / "sweep";
    for (std::size_t r = 0; r < 2; ++r) {
        const fs::path rep = sweep / replication_dir_name(r);
        fs::create_directories(rep);
        write_simulation(rep, d);
        if (r == 0) write_estimates(rep / "estimates_mcmc.csv", perfect);
    }
    CHECK_THROWS_WITH_AS(evaluate_directories(sweep, sweep, 2.0, 10.0), doctest::Contains("replication 1"),
                         std::runtime_error);
    CHECK(summary_path_for("out/ospa.csv") == fs::path("out/ospa_summary.csv"));
    CHECK(replication_dir_name(7) == "rep_0007");
}

TEST_CASE("quantiles match a sorting oracle") {
    Rng rng(51);
    std::uniform_real_distribution<double> u(0, 10);
    std::vector<OspaRecord> rows;
    std::vector<double> values;
    for (std::size_t r = 0; r < 21; ++r) {
        const double v = u(rng);
        rows.push_back({r, 1, "mcmc", v});
        values.push_back(v);
        rows.push_back({r, 2, "dbscan", 1.0});
    }
    std::sort(values.begin(), values.end());
    const auto q = summarize_ospa(rows);
    REQUIRE(q.size() == 2);
    CHECK(q[0].epoch == 1);
    CHECK(q[0].count == 21);
    CHECK(q[0].min == values.front());
    CHECK(q[0].max == values.back());
    CHECK(q[0].median == values[10]);
    CHECK(q[0].q1 == values[5]);
    CHECK(q[0].q3 == values[15]);
    CHECK(q[1].median == 1.0);

    CHECK(sorted_quantile({1.0, 2.0}, 0.5) == 1.5);
    CHECK(sorted_quantile({1.0, 2.0, 4.0, 8.0}, 0.25) == doctest::Approx(1.75));
    CHECK_THROWS_AS(sorted_quantile({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(sorted_quantile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("run_sweep equals simulate, estimate and evaluate composed, and resumes") {
    const ExperimentConfig c = small_config();
    ScratchDir dir("sweep");
    SweepOptions options;
    options.replications = 1;
    options.seed = 61;
    options.out = dir.path / "sweep";
    options.workers = 1;
    run_sweep(c, options);

    const fs::path manual = dir.path / "manual" / replication_dir_name(0);
    fs::create_directories(manual);
    const SimulationData d = simulate_replication(c.scenario, 61, 0);
    write_simulation(manual, d);
    for (Method m : kAllMethods) write_method_output(manual, estimate_replication(c, d, m, 61, 0));
    const auto rows = evaluate_directories(dir.path / "manual", dir.path / "manual", c.ospa_order, c.ospa_cutoff);
    write_ospa(dir.path / "manual" / "ospa.csv", rows);

    CHECK(same_files(options.out / replication_dir_name(0), manual,
                     {"measurements.csv", "truth.csv", "estimates_mcmc.csv", "estimates_dbscan.csv",
                      "estimates_oracle.csv", "diagnostics_mcmc.csv"}));
    CHECK(slurp(options.out / "ospa.csv") == slurp(dir.path / "manual" / "ospa.csv"));
    CHECK(fs::exists(options.out / "ospa_summary.csv"));
    const auto iterations = read_iteration_summary(options.out / "iterations.csv");
    REQUIRE(iterations.size() == 2);
    CHECK(iterations[0].replications == 1);

    // A completed replication is left alone on resume; a new one is added.
    const fs::path estimates = options.out / replication_dir_name(0) / "estimates_oracle.csv";
    const std::string before = slurp(estimates);
    const auto stamp = fs::last_write_time(estimates);
    options.resume = true;
    options.replications = 2;
    run_sweep(c, options);
    CHECK(fs::last_write_time(estimates) == stamp);
    CHECK(slurp(estimates) == before);
    CHECK(fs::exists(options.out / replication_dir_name(1) / "done"));
    CHECK(read_ospa(options.out / "ospa.csv").size() == 2 * 2 * 3);
}

TEST_CASE("peb_map: grid size, delegation and growth with range") {
    const ExperimentConfig c = small_config();
    const auto rows = peb_map(c.scenario, 0, 3.0, 5, 4);
    REQUIRE(rows.size() == 20);
    CHECK(rows.front().x == 0.0);
    CHECK(rows.back().x == 20.0);
    CHECK(rows.back().y == 10.0);
    for (const auto& r : rows) {
        CHECK(r.peb == doctest::Approx(peb(c.scenario.sensors[0], Eigen::Vector3d(r.x, r.y, 3.0))).epsilon(1e-14));
    }
    // Along x = 10 the range to sensor 0 grows with y.
    const auto column = peb_map(c.scenario, 0, 3.0, 1, 30);
    for (std::size_t i = 1; i < column.size(); ++i) CHECK(column[i].peb > column[i - 1].peb);
    CHECK(column[0].x == 10.0);

    ScratchDir dir("peb");
    write_peb_map(dir.path / "peb.csv", rows);
    const auto back = read_peb_map(dir.path / "peb.csv");
    REQUIRE(back.size() == rows.size());
    CHECK(back[7].peb == rows[7].peb);
    CHECK_THROWS_AS(peb_map(c.scenario, 2, 3.0, 5, 4), std::out_of_range);
    CHECK_THROWS_AS(peb_map(c.scenario, 0, 3.0, 0, 4), std::invalid_argument);
}
