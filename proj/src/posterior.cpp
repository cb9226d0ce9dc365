#include "gsncp/posterior/posterior.hpp"

#include "gsncp/core/extent.hpp"
#include "gsncp/posterior/kernel.hpp"
#include "gsncp/sim/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gsncp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::size_t Observation::measurement_count() const {
    std::size_t n = 0;
    for (const auto& scan : scans) n += scan.points.size();
    return n;
}

void Observation::validate() const {
    for (const auto& scan : scans) {
        if (scan.sensor_index >= sensors.size()) {
            throw std::invalid_argument("observation: scan references sensor state " +
                                        std::to_string(scan.sensor_index) + " but only " +
                                        std::to_string(sensors.size()) + " exist");
        }
    }
}

double intensity_at(const ModelParams& params, const SensorState& sensor, const Eigen::Vector3d& p) {
    double z = params.lambda_c;
    for (const auto& target : params.targets) {
        z += measurement_rate(sensor, target) * kernel_eval<double>(p - target.center,
                                                                    effective_covariance(sensor, target));
    }
    return z;
}

double log_likelihood(const ModelParams& params, const Observation& obs) {
    if (!(params.lambda_c > 0.0)) throw std::invalid_argument("log_likelihood: lambda_c must be positive");
    obs.validate();
    const double volume = obs.domain.volume();
    double ll = 0.0;
    for (const auto& sensor : obs.sensors) {
        ll += (1.0 - params.lambda_c) * volume;
        for (const auto& target : params.targets) ll -= measurement_rate(sensor, target);
    }
    for (const auto& scan : obs.scans) {
        const SensorState& sensor = obs.sensors[scan.sensor_index];
        for (const auto& p : scan.points) ll += std::log(intensity_at(params, sensor, p));
    }
    return ll;
}

bool hardcore_clear(const std::vector<TargetState>& targets, const Eigen::Vector3d& candidate, double radius,
                    std::size_t skip) {
    const double r2 = radius * radius;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        if (j == skip) continue;
        if ((targets[j].center - candidate).squaredNorm() < r2) return false;
    }
    return true;
}

double log_prior(const ModelParams& params, const PriorModel& prior) {
    if (!(params.lambda > 0.0) || !(params.lambda_c > 0.0)) return kNegInf;
    const auto& targets = params.targets;
    if (targets.size() > prior.max_targets) return kNegInf;
    double lp = static_cast<double>(targets.size()) * std::log(params.lambda);
    for (std::size_t l = 0; l < targets.size(); ++l) {
        if (!prior.domain.contains(targets[l].center)) return kNegInf;
        lp += log_extent_prior_density(targets[l].extent, prior.extent_prior);
        if (lp == kNegInf) return kNegInf;
        for (std::size_t j = l + 1; j < targets.size(); ++j) {
            if ((targets[l].center - targets[j].center).norm() < prior.hardcore_radius) return kNegInf;
        }
    }
    return lp;
}

}  // namespace gsncp
