#pragma once

#include "gsncp/core/types.hpp"
#include "gsncp/posterior/posterior.hpp"
#include "gsncp/sensor/sensor_field.hpp"

#include <cstddef>
#include <vector>

namespace gsncp {

inline constexpr int kNoiseLabel = -1;

/// Density-based clustering.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Clusters are connected components of core points; a
/// non-core point joins the cluster of its nearest core neighbor, otherwise
/// it is noise. Assigning border points by distance rather than visit order
/// makes the partition independent of input order. Labels are numbered by
/// first appearance in the input.
std::vector<int> dbscan(const std::vector<Eigen::Vector3d>& points, double eps, std::size_t min_pts);

/// Moment-matched target states from cluster labels.
///
/// Center is the cluster mean; extent covariance is the (1/n) sample
/// covariance minus the mean sensor noise covariance at the center, with
/// eigenvalues floored at `floor`.
std::vector<TargetState> clusters_to_states(const std::vector<Eigen::Vector3d>& points,
                                            const std::vector<std::size_t>& sensor_of, const std::vector<int>& labels,
                                            const std::vector<SensorState>& sensors, double floor = 1e-4);

struct DbscanGrid {
    std::vector<double> eps{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    std::vector<std::size_t> min_pts{2, 3, 5, 8};
};

struct DbscanSelection {
    double eps = 0.0;
    std::size_t min_pts = 0;
    /// Cluster states with extents clamped into the prior box.
    std::vector<TargetState> states;
    ModelParams params;
    double log_posterior = 0.0;
    /// True when every cell had zero posterior mass and the cell with the
    /// highest likelihood was returned instead.
    bool fallback = false;
};

/// Evaluates every (eps, min_pts) cell and returns the posterior maximizer.
/// Noise points count as clutter in the intensity formulas. Ties go to the
/// smaller eps, then the smaller min_pts.
DbscanSelection dbscan_grid_search(const Observation& obs, const PriorModel& prior, const DbscanGrid& grid);

/// Oracle with known associations.
///
/// `sources[i][m]` is the true target index of point m of scan i (-1 for
/// clutter). Centers are weighted least squares with the true extent; extents
/// are maximum likelihood at the true center, fitted by EM. Targets without
/// any detection are omitted.
std::vector<TargetState> oracle_estimate(const Observation& obs, const std::vector<std::vector<int>>& sources,
                                         const std::vector<TargetState>& truth);

/// Maximum-likelihood extent covariance for residuals d_i ~ N(0, S + N_i).
Eigen::Matrix3d extent_mle(const std::vector<Eigen::Vector3d>& residuals,
                           const std::vector<Eigen::Matrix3d>& noise_covs, double tolerance = 1e-8,
                           std::size_t max_iterations = 2000, double floor = 1e-4);

/// Symmetric projection onto matrices with eigenvalues >= floor.
Eigen::Matrix3d floor_eigenvalues(const Eigen::Matrix3d& m, double floor);

}  // namespace gsncp
