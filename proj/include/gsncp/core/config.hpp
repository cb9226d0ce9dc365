#pragma once

#include "gsncp/core/types.hpp"
#include "gsncp/sensor/sensor_field.hpp"

#include <cstdint>
#include <vector>

namespace gsncp {

/// Ground-truth scenario: domain, target process, clutter and sensors.
struct ScenarioConfig {
    Domain domain;
    double hardcore_radius = 8.0;
    ExtentPrior extent_prior;
    /// Target center intensity (targets per m^3).
    double lambda = 0.0;
    /// Clutter intensity (points per m^3 per sensor state).
    double lambda_c = 0.0;
    /// Physical sensors; each scans once per epoch.
    std::vector<SensorState> sensors;
    int epochs = 1;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

}  // namespace gsncp
