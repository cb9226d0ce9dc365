#pragma once

#include "gsncp/core/types.hpp"
#include "gsncp/sensor/sensor_field.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace gsncp {

/// Everything the likelihood conditions on: the domain, one SensorState per
/// sensor state k, and the measurement sets recorded in those states.
struct Observation {
    Domain domain;
    std::vector<SensorState> sensors;
    std::vector<MeasurementSet> scans;

    [[nodiscard]] std::size_t sensor_state_count() const { return sensors.size(); }
    [[nodiscard]] std::size_t measurement_count() const;
    /// Throws if a scan references a sensor state that does not exist.
    void validate() const;
};

/// Hyperparameters of the prior on (targets, lambda, lambda_c).
struct PriorModel {
    Domain domain;
    double hardcore_radius = 8.0;
    ExtentPrior extent_prior;
    /// Optional cap on the number of targets; zero prior mass above it.
    std::size_t max_targets = std::numeric_limits<std::size_t>::max();
};

/// lambda_c + sum_l rate_k(C_l) * K(p - c_l; extent cov + noise cov at c_l).
double intensity_at(const ModelParams& params, const SensorState& sensor, const Eigen::Vector3d& p);

/// Observed log-likelihood summed over all sensor states:
///   sum_k [ (1 - lambda_c)|D| - sum_l rate_k(C_l) + sum_m log Z_k(p_km) ].
/// Straight evaluation with no caching; throws if lambda_c <= 0.
double log_likelihood(const ModelParams& params, const Observation& obs);

/// L log(lambda) + sum_l log prior_E(e_l), or -inf when an intensity is
/// non-positive, a center leaves D, two centers are closer than R, or the
/// cardinality cap is exceeded.
double log_prior(const ModelParams& params, const PriorModel& prior);

/// True when `candidate` keeps distance >= R to every target except `skip`.
bool hardcore_clear(const std::vector<TargetState>& targets, const Eigen::Vector3d& candidate, double radius,
                    std::size_t skip = std::numeric_limits<std::size_t>::max());

inline double log_posterior(const ModelParams& params, const Observation& obs, const PriorModel& prior) {
    const double lp = log_prior(params, prior);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    return lp + log_likelihood(params, obs);
}

}  // namespace gsncp
