#include "gsncp/baselines/baselines.hpp"
#include "gsncp/core/extent.hpp"
#include "gsncp/posterior/contribution_cache.hpp"
#include "gsncp/sim/scene.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

using namespace gsncp;

namespace {

/// Textbook DBSCAN by brute-force neighborhoods: expand clusters from core
/// points in input order, claiming border points on first contact.
std::vector<int> reference_dbscan(const std::vector<Eigen::Vector3d>& pts, double eps, std::size_t min_pts) {
    const std::size_t n = pts.size();
    auto neighbors = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n; ++j) {
            if ((pts[i] - pts[j]).norm() <= eps) out.push_back(j);
        }
        return out;
    };
    std::vector<int> labels(n, -2);
    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != -2) continue;
        auto seeds = neighbors(i);
        if (seeds.size() < min_pts) {
            labels[i] = -1;
            continue;
        }
        labels[i] = cluster;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            const std::size_t q = seeds[k];
            if (labels[q] == -1) labels[q] = cluster;
            if (labels[q] != -2) continue;
            labels[q] = cluster;
            const auto more = neighbors(q);
            if (more.size() >= min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
        }
        ++cluster;
    }
    return labels;
}

/// Partition as a set of member sets, so label names do not matter.
std::set<std::set<std::size_t>> partition(const std::vector<int>& labels, const std::vector<std::size_t>& keys) {
    std::map<int, std::set<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(keys[i]);
    std::set<std::set<std::size_t>> out;
    for (const auto& [label, members] : groups) out.insert(members);
    return out;
}

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
}

std::vector<Eigen::Vector3d> blob(Rng& rng, const Eigen::Vector3d& center, double sd, std::size_t count) {
    std::normal_distribution<double> normal(0.0, sd);
    std::vector<Eigen::Vector3d> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(center + Eigen::Vector3d(normal(rng), normal(rng), normal(rng)));
    return out;
}

SensorState precise_sensor(const Eigen::Vector3d& position) {
    SensorState s;
    s.position = position;
    s.sigma_range = 0.05;
    s.sigma_angle = 0.002;
    s.snr_ref = 1e10;
    s.r0 = 1e5;
    return s;
}

}  // namespace

TEST_CASE("dbscan: identical points form one cluster") {
    const std::vector<Eigen::Vector3d> pts(6, Eigen::Vector3d(1, 2, 3));
    const auto labels = dbscan(pts, 0.5, 3);
    for (int l : labels) CHECK(l == 0);
}

TEST_CASE("dbscan: isolated point is noise") {
    const std::vector<Eigen::Vector3d> pts{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0.1, 0, 0),
                                           Eigen::Vector3d(50, 0, 0)};
    const auto labels = dbscan(pts, 0.5, 2);
    CHECK(labels[0] == 0);
    CHECK(labels[1] == 0);
    CHECK(labels[2] == kNoiseLabel);
    CHECK_THROWS_AS(dbscan(pts, 0.0, 2), std::invalid_argument);
    CHECK(dbscan({}, 1.0, 2).empty());
}

TEST_CASE("dbscan: two distant dense groups give two clusters matching the reference") {
    Rng rng(81);
    auto pts = blob(rng, Eigen::Vector3d(0, 0, 0), 0.3, 40);
    const auto other = blob(rng, Eigen::Vector3d(20, 0, 0), 0.3, 40);
    pts.insert(pts.end(), other.begin(), other.end());
    const auto labels = dbscan(pts, 1.0, 4);
    CHECK(*std::max_element(labels.begin(), labels.end()) == 1);
    CHECK(partition(labels, iota(pts.size())) == partition(reference_dbscan(pts, 1.0, 4), iota(pts.size())));
}

TEST_CASE("dbscan: core partition agrees with the reference on random fixtures") {
    Rng rng(82);
    std::uniform_real_distribution<double> coord(0, 10);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < 120; ++i) pts.emplace_back(coord(rng), coord(rng), coord(rng) * 0.3);
        const double eps = 0.8 + 0.05 * trial;
        const std::size_t min_pts = 3 + trial % 4;
        const auto ours = dbscan(pts, eps, min_pts);
        const auto ref = reference_dbscan(pts, eps, min_pts);
        // Noise sets agree; core points share clusters identically.
        std::vector<int> ours_core, ref_core;
        std::vector<std::size_t> keys;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            CHECK((ours[i] == kNoiseLabel) == (ref[i] == kNoiseLabel));
            std::size_t count = 0;
            for (const auto& q : pts) count += (q - pts[i]).norm() <= eps ? 1 : 0;
            if (count >= min_pts) {
                ours_core.push_back(ours[i]);
                ref_core.push_back(ref[i]);
                keys.push_back(i);
            }
        }
        CHECK(partition(ours_core, keys) == partition(ref_core, keys));
    }
}

TEST_CASE("dbscan is invariant to input permutation") {
    Rng rng(83);
    std::uniform_real_distribution<double> coord(0, 8);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < 100; ++i) pts.emplace_back(coord(rng), coord(rng), coord(rng) * 0.5);
        std::vector<std::size_t> order = iota(pts.size());
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Eigen::Vector3d> shuffled;
        for (std::size_t i : order) shuffled.push_back(pts[i]);
        const double eps = 1.0 + 0.05 * trial;
        CHECK(partition(dbscan(pts, eps, 3), iota(pts.size())) == partition(dbscan(shuffled, eps, 3), order));
    }
}

TEST_CASE("clusters_to_states: mean center and floored extent") {
    const std::vector<SensorState> sensors{precise_sensor(Eigen::Vector3d(0, -20, 0))};
    const std::vector<Eigen::Vector3d> same(5, Eigen::Vector3d(3, 4, 5));
    const auto states = clusters_to_states(same, std::vector<std::size_t>(5, 0), std::vector<int>(5, 0), sensors, 1e-4);
    REQUIRE(states.size() == 1);
    CHECK(states[0].center == Eigen::Vector3d(3, 4, 5));
    CHECK(extent_to_covariance(states[0].extent).isApprox(1e-4 * Eigen::Matrix3d::Identity(), 1e-9));

    Rng rng(84);
    const auto pts = blob(rng, Eigen::Vector3d(1, 1, 1), 1.0, 7);
    const std::vector<int> labels{0, 0, 0, kNoiseLabel, 0, 0, 0};
    const auto one = clusters_to_states(pts, std::vector<std::size_t>(7, 0), labels, sensors);
    REQUIRE(one.size() == 1);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t i : {0, 1, 2, 4, 5, 6}) mean += pts[i];
    CHECK((one[0].center - mean / 6.0).norm() < 1e-15);

    CHECK_THROWS_AS(clusters_to_states(pts, {0}, labels, sensors), std::invalid_argument);
}

TEST_CASE("clusters_to_states recovers the extent of a large simulated cluster") {
    Rng rng(85);
    const SensorState sensor = precise_sensor(Eigen::Vector3d(0, -20, 0));
    TargetState truth;
    truth.center = Eigen::Vector3d(0, 0, 0);
    truth.extent.e << 1.3, 1.1, 1.2, 0.3, -0.2, 0.1;
    Domain domain;
    domain.lower = Eigen::Vector3d::Constant(-100);
    domain.upper = Eigen::Vector3d::Constant(100);
    std::vector<Eigen::Vector3d> pts;
    while (pts.size() < 20000) {
        const auto scan = simulate_measurements(rng, {truth}, {sensor}, 0.0, domain)[0];
        pts.insert(pts.end(), scan.set.points.begin(), scan.set.points.end());
    }
    const auto states =
        clusters_to_states(pts, std::vector<std::size_t>(pts.size(), 0), std::vector<int>(pts.size(), 0), {sensor});
    const Eigen::Matrix3d expected = extent_to_covariance(truth.extent);
    const Eigen::Matrix3d got = extent_to_covariance(states.at(0).extent);
    CHECK((got - expected).norm() / expected.norm() < 0.15);
}

TEST_CASE("dbscan_grid_search: singleton grid, cardinality and feasibility") {
    Rng rng(86);
    Observation obs;
    obs.domain.upper = Eigen::Vector3d(50, 20, 10);
    obs.sensors = {precise_sensor(Eigen::Vector3d(25, -10, 5)), precise_sensor(Eigen::Vector3d(25, 30, 5))};
    std::vector<TargetState> truth(3);
    truth[0].center = Eigen::Vector3d(8, 10, 5);
    truth[1].center = Eigen::Vector3d(25, 8, 5);
    truth[2].center = Eigen::Vector3d(42, 12, 5);
    for (auto& t : truth) t.extent.e << 1.2, 1.1, 1.3, 0.1, 0.0, -0.1;
    for (const auto& scan : simulate_measurements(rng, truth, obs.sensors, 0.0, obs.domain)) obs.scans.push_back(scan.set);
    PriorModel prior;
    prior.domain = obs.domain;
    prior.hardcore_radius = 8.0;

    DbscanGrid single;
    single.eps = {2.0};
    single.min_pts = {5};
    const DbscanSelection one = dbscan_grid_search(obs, prior, single);
    CHECK(one.eps == 2.0);
    CHECK(one.min_pts == 5);

    const DbscanSelection best = dbscan_grid_search(obs, prior, DbscanGrid{});
    CHECK_FALSE(best.fallback);
    CHECK(best.states.size() == 3);
    CHECK(best.log_posterior > -std::numeric_limits<double>::infinity());
    CHECK(best.log_posterior == doctest::Approx(log_posterior(best.params, obs, prior)).epsilon(1e-10));
    for (const auto& s : best.states) CHECK(in_extent_prior_support(s.extent, prior.extent_prior));

    // The selected cell maximizes the posterior over the grid.
    const DbscanGrid grid;
    for (double eps : grid.eps) {
        for (std::size_t m : grid.min_pts) {
            DbscanGrid cell;
            cell.eps = {eps};
            cell.min_pts = {m};
            const DbscanSelection s = dbscan_grid_search(obs, prior, cell);
            if (!s.fallback) CHECK(s.log_posterior <= best.log_posterior);
        }
    }

    CHECK_THROWS_AS(dbscan_grid_search(obs, prior, DbscanGrid{{}, {2}}), std::invalid_argument);
}

TEST_CASE("oracle_estimate: one and two measurements") {
    Observation obs;
    obs.domain.upper = Eigen::Vector3d(20, 20, 10);
    obs.sensors = {precise_sensor(Eigen::Vector3d(10, -10, 5))};
    TargetState truth;
    truth.center = Eigen::Vector3d(10, 10, 5);
    const Eigen::Vector3d z1(10.3, 9.8, 5.1), z2(9.5, 10.4, 4.7);

    obs.scans = {MeasurementSet{0, {z1}}};
    auto est = oracle_estimate(obs, {{0}}, {truth});
    REQUIRE(est.size() == 1);
    CHECK((est[0].center - z1).norm() < 1e-12);

    obs.scans = {MeasurementSet{0, {z1, z2, Eigen::Vector3d(1, 1, 1)}}};
    est = oracle_estimate(obs, {{0, 0, -1}}, {truth});
    REQUIRE(est.size() == 1);
    CHECK((est[0].center - 0.5 * (z1 + z2)).norm() < 1e-12);

    TargetState unseen;
    unseen.center = Eigen::Vector3d(3, 3, 3);
    CHECK(oracle_estimate(obs, {{0, 0, -1}}, {truth, unseen}).size() == 1);
    CHECK_THROWS_AS(oracle_estimate(obs, {}, {truth}), std::invalid_argument);
    CHECK_THROWS_AS(oracle_estimate(obs, {{0}}, {truth}), std::invalid_argument);
}

TEST_CASE("extent_mle is consistent") {
    Rng rng(87);
    Vector6<double> e;
    e << 1.3, 1.1, 1.2, 0.3, -0.2, 0.1;
    const Eigen::Matrix3d truth = extent_to_covariance(Extent(e));
    const Eigen::Matrix3d factor = Extent(e).lower_triangular();
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> noise_scale(0.05, 0.6);
    std::vector<Eigen::Vector3d> residuals;
    std::vector<Eigen::Matrix3d> noises;
    for (int i = 0; i < 50000; ++i) {
        const double s = noise_scale(rng);
        const Eigen::Matrix3d noise = Eigen::Vector3d(s, 0.5 * s, 2 * s).asDiagonal();
        const Eigen::Vector3d u(normal(rng), normal(rng), normal(rng));
        const Eigen::Vector3d w(normal(rng), normal(rng), normal(rng));
        residuals.push_back(factor * u + Eigen::Matrix3d(noise.cwiseSqrt()) * w);
        noises.push_back(noise);
    }
    const Eigen::Matrix3d got = extent_mle(residuals, noises);
    CHECK((got - truth).norm() / truth.norm() < 0.1);
    CHECK_THROWS_AS(extent_mle({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(extent_mle(residuals, {}), std::invalid_argument);
}

TEST_CASE("oracle_estimate recovers the extent and is unbiased in position") {
    Rng rng(88);
    Observation obs;
    obs.domain.lower = Eigen::Vector3d::Constant(-100);
    obs.domain.upper = Eigen::Vector3d::Constant(100);
    obs.sensors = {precise_sensor(Eigen::Vector3d(0, -30, 0)), precise_sensor(Eigen::Vector3d(-30, 0, 0))};
    TargetState truth;
    truth.extent.e << 1.3, 1.1, 1.2, 0.3, -0.2, 0.1;

    Eigen::Vector3d error_sum = Eigen::Vector3d::Zero();
    Eigen::Vector3d error_sq = Eigen::Vector3d::Zero();
    const int reps = 300;
    Eigen::Matrix3d extent_sum = Eigen::Matrix3d::Zero();
    for (int r = 0; r < reps; ++r) {
        obs.scans.clear();
        std::vector<std::vector<int>> sources;
        for (const auto& scan : simulate_measurements(rng, {truth}, obs.sensors, 0.0, obs.domain)) {
            obs.scans.push_back(scan.set);
            sources.push_back(scan.sources);
        }
        const auto est = oracle_estimate(obs, sources, {truth});
        REQUIRE(est.size() == 1);
        const Eigen::Vector3d err = est[0].center - truth.center;
        error_sum += err;
        error_sq += err.cwiseProduct(err);
        extent_sum += extent_to_covariance(est[0].extent);
    }
    const Eigen::Vector3d mean = error_sum / reps;
    const Eigen::Vector3d sd = (error_sq / reps - mean.cwiseProduct(mean)).cwiseSqrt();
    for (int j = 0; j < 3; ++j) CHECK(std::abs(mean(j)) < 3.0 * sd(j) / std::sqrt(double(reps)));
    const Eigen::Matrix3d expected = extent_to_covariance(truth.extent);
    CHECK((extent_sum / reps - expected).norm() / expected.norm() < 0.1);
}

TEST_CASE("floor_eigenvalues projects onto the floored cone") {
    Eigen::Matrix3d m = Eigen::Vector3d(-1.0, 0.5, 2.0).asDiagonal();
    const Eigen::Matrix3d out = floor_eigenvalues(m, 0.1);
    CHECK(out.isApprox(Eigen::Matrix3d(Eigen::Vector3d(0.1, 0.5, 2.0).asDiagonal()), 1e-12));
}
