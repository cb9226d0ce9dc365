#include "gsncp/baselines/baselines.hpp"

#include "gsncp/core/extent.hpp"
#include "gsncp/mcmc/sampler.hpp"
#include "gsncp/posterior/contribution_cache.hpp"
#include "gsncp/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace gsncp {

namespace {

/// Uniform hash grid with cell size eps for radius queries.
class NeighborGrid {
public:
    NeighborGrid(const std::vector<Eigen::Vector3d>& points, double eps) : points_(points), eps_(eps) {
        for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
    }

    template <typename Visit>
    void for_each_neighbor(std::size_t i, Visit&& visit) const {
        const Eigen::Vector3i c = cell_of(points_[i]);
        const double eps2 = eps_ * eps_;
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find(key(c + Eigen::Vector3i(dx, dy, dz)));
                    if (it == cells_.end()) continue;
                    for (std::size_t j : it->second) {
                        const double d2 = (points_[j] - points_[i]).squaredNorm();
                        if (d2 <= eps2) visit(j, d2);
                    }
                }
            }
        }
    }

private:
    [[nodiscard]] Eigen::Vector3i cell_of(const Eigen::Vector3d& p) const {
        return Eigen::Vector3i(static_cast<int>(std::floor(p(0) / eps_)), static_cast<int>(std::floor(p(1) / eps_)),
                               static_cast<int>(std::floor(p(2) / eps_)));
    }
    static std::int64_t key(const Eigen::Vector3i& c) {
        constexpr std::int64_t span = 1 << 20;
        return ((static_cast<std::int64_t>(c(0)) + span / 2) * span + (c(1) + span / 2)) * span + (c(2) + span / 2);
    }

    const std::vector<Eigen::Vector3d>& points_;
    double eps_;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

bool lexicographically_less(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

}  // namespace

std::vector<int> dbscan(const std::vector<Eigen::Vector3d>& points, double eps, std::size_t min_pts) {
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be positive");
    const std::size_t n = points.size();
    std::vector<int> labels(n, kNoiseLabel);
    if (n == 0) return labels;

    const NeighborGrid grid(points, eps);
    std::vector<char> core(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        grid.for_each_neighbor(i, [&](std::size_t, double) { ++count; });
        core[i] = count >= min_pts ? 1 : 0;
    }

    // Components of the core graph, discovered in input order.
    std::vector<std::size_t> stack;
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || labels[i] != kNoiseLabel) continue;
        const int id = next++;
        labels[i] = id;
        stack.push_back(i);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            grid.for_each_neighbor(p, [&](std::size_t q, double) {
                if (core[q] && labels[q] == kNoiseLabel) {
                    labels[q] = id;
                    stack.push_back(q);
                }
            });
        }
    }

    // Border points attach to the nearest core neighbor.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = n;
        grid.for_each_neighbor(i, [&](std::size_t j, double d2) {
            if (!core[j]) return;
            if (d2 < best || (d2 == best && best_j < n && lexicographically_less(points[j], points[best_j]))) {
                best = d2;
                best_j = j;
            }
        });
        if (best_j < n) labels[i] = labels[best_j];
    }

    // Renumber by first appearance so labels do not depend on core discovery.
    std::unordered_map<int, int> remap;
    for (int& label : labels) {
        if (label == kNoiseLabel) continue;
        auto [it, inserted] = remap.try_emplace(label, static_cast<int>(remap.size()));
        label = it->second;
    }
    return labels;
}

Eigen::Matrix3d floor_eigenvalues(const Eigen::Matrix3d& m, double floor) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(0.5 * (m + m.transpose()));
    const Eigen::Vector3d values = eig.eigenvalues().cwiseMax(floor);
    Eigen::Matrix3d out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

std::vector<TargetState> clusters_to_states(const std::vector<Eigen::Vector3d>& points,
                                            const std::vector<std::size_t>& sensor_of, const std::vector<int>& labels,
                                            const std::vector<SensorState>& sensors, double floor) {
    if (points.size() != labels.size() || points.size() != sensor_of.size()) {
        throw std::invalid_argument("clusters_to_states: points, sensor indices and labels must align");
    }
    int clusters = 0;
    for (int label : labels) clusters = std::max(clusters, label + 1);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(clusters));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != kNoiseLabel) members[static_cast<std::size_t>(labels[i])].push_back(i);
    }

    std::vector<TargetState> states;
    for (const auto& idx : members) {
        if (idx.empty()) continue;
        const double n = static_cast<double>(idx.size());
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (std::size_t i : idx) mean += points[i];
        mean /= n;
        Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
        Eigen::Matrix3d noise = Eigen::Matrix3d::Zero();
        for (std::size_t i : idx) {
            const Eigen::Vector3d d = points[i] - mean;
            scatter += d * d.transpose();
            noise += noise_covariance(sensors.at(sensor_of[i]), mean);
        }
        const Eigen::Matrix3d extent_cov = floor_eigenvalues(scatter / n - noise / n, floor);
        TargetState t;
        t.center = mean;
        t.extent = covariance_to_extent(extent_cov);
        states.push_back(t);
    }
    return states;
}

namespace {

ModelParams params_for_clusters(const Observation& obs, const std::vector<TargetState>& states,
                                std::size_t clutter_count, std::size_t measurement_count) {
    ModelParams params;
    params.targets = states;
    double total_rate = 0.0;
    for (const auto& t : states) {
        for (const auto& sensor : obs.sensors) total_rate += measurement_rate(sensor, t);
    }
    const double volume = obs.domain.volume();
    const Intensities next = update_intensities({1.0 / volume, 1.0 / volume}, clutter_count, measurement_count,
                                                states.size(), total_rate, obs.sensor_state_count(), volume);
    params.lambda = next.lambda;
    params.lambda_c = next.lambda_c;
    return params;
}

}  // namespace

DbscanSelection dbscan_grid_search(const Observation& obs, const PriorModel& prior, const DbscanGrid& grid) {
    if (grid.eps.empty() || grid.min_pts.empty()) throw std::invalid_argument("dbscan_grid_search: empty grid");
    const FlatMeasurements flat(obs);

    std::vector<double> eps_values = grid.eps;
    std::vector<std::size_t> min_values = grid.min_pts;
    std::sort(eps_values.begin(), eps_values.end());
    std::sort(min_values.begin(), min_values.end());

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    DbscanSelection best;
    best.log_posterior = kNegInf;
    bool have_best = false;
    DbscanSelection best_likelihood;
    double best_ll = kNegInf;
    bool have_ll = false;

    for (double eps : eps_values) {
        for (std::size_t min_pts : min_values) {
            const std::vector<int> labels = dbscan(flat.points, eps, min_pts);
            std::vector<TargetState> states = clusters_to_states(flat.points, flat.sensor_of, labels, obs.sensors);
            for (auto& s : states) s.extent = project_to_prior_support(s.extent, prior.extent_prior);
            const auto clutter = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoiseLabel));
            ModelParams params = params_for_clusters(obs, states, clutter, flat.size());

            const double ll = ContributionCache(obs, params).log_likelihood();
            const double lp = log_prior(params, prior);
            const double post = lp == kNegInf ? kNegInf : lp + ll;

            if (post > kNegInf && (!have_best || post > best.log_posterior)) {
                best = {eps, min_pts, states, params, post, false};
                have_best = true;
            }
            if (!have_ll || ll > best_ll) {
                best_likelihood = {eps, min_pts, states, params, post, true};
                best_ll = ll;
                have_ll = true;
            }
        }
    }
    return have_best ? best : best_likelihood;
}

Eigen::Matrix3d extent_mle(const std::vector<Eigen::Vector3d>& residuals,
                           const std::vector<Eigen::Matrix3d>& noise_covs, double tolerance,
                           std::size_t max_iterations, double floor) {
    if (residuals.size() != noise_covs.size()) throw std::invalid_argument("extent_mle: size mismatch");
    if (residuals.empty()) throw std::invalid_argument("extent_mle: no residuals");
    const double n = static_cast<double>(residuals.size());

    // Moment estimate as the starting point.
    Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        sigma += residuals[i] * residuals[i].transpose() - noise_covs[i];
    }
    sigma = floor_eigenvalues(sigma / n, floor);

    // EM on z = c + u + w with u ~ N(0, sigma), w ~ N(0, N_i).
    for (std::size_t it = 0; it < max_iterations; ++it) {
        Eigen::Matrix3d next = Eigen::Matrix3d::Zero();
        for (std::size_t i = 0; i < residuals.size(); ++i) {
            const Eigen::Matrix3d gain = sigma * (sigma + noise_covs[i]).inverse();
            const Eigen::Vector3d m = gain * residuals[i];
            next += sigma - gain * sigma + m * m.transpose();
        }
        next = floor_eigenvalues(next / n, floor);
        const double change = (next - sigma).norm() / std::max(sigma.norm(), 1e-300);
        sigma = next;
        if (change < tolerance) break;
    }
    return sigma;
}

std::vector<TargetState> oracle_estimate(const Observation& obs, const std::vector<std::vector<int>>& sources,
                                         const std::vector<TargetState>& truth) {
    if (sources.size() != obs.scans.size()) throw std::invalid_argument("oracle_estimate: one source list per scan");
    std::vector<TargetState> out;
    for (std::size_t l = 0; l < truth.size(); ++l) {
        const TargetState& target = truth[l];
        const Eigen::Matrix3d extent_cov = extent_to_covariance(target.extent);
        Eigen::Matrix3d information = Eigen::Matrix3d::Zero();
        Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
        std::vector<Eigen::Vector3d> residuals;
        std::vector<Eigen::Matrix3d> noise_covs;
        for (std::size_t i = 0; i < obs.scans.size(); ++i) {
            const auto& scan = obs.scans[i];
            if (sources[i].size() != scan.points.size()) {
                throw std::invalid_argument("oracle_estimate: source list length differs from scan size");
            }
            const Eigen::Matrix3d noise = noise_covariance(obs.sensors.at(scan.sensor_index), target.center);
            const Eigen::Matrix3d precision = (extent_cov + noise).inverse();
            for (std::size_t m = 0; m < scan.points.size(); ++m) {
                if (sources[i][m] != static_cast<int>(l)) continue;
                information += precision;
                weighted += precision * scan.points[m];
                residuals.push_back(scan.points[m] - target.center);
                noise_covs.push_back(noise);
            }
        }
        if (residuals.empty()) continue;
        TargetState estimate;
        estimate.center = information.ldlt().solve(weighted);
        estimate.extent = covariance_to_extent(extent_mle(residuals, noise_covs));
        out.push_back(estimate);
    }
    return out;
}

}  // namespace gsncp
