#pragma once

#include "gsncp/core/config.hpp"
#include "gsncp/core/types.hpp"
#include "gsncp/sensor/sensor_field.hpp"

#include <cstddef>
#include <vector>

namespace gsncp {

/// Outcome of hard-core scene sampling.
struct HardcoreScene {
    std::vector<TargetState> targets;
    /// Poisson draw for the number of centers the sampler tried to place.
    std::size_t requested = 0;
    /// True when the proposal budget ran out before `requested` centers fit.
    bool saturated = false;
};

/// Sequential inhibition: draw N ~ Poisson(lambda |D|), then place uniform
/// proposals that keep distance >= R to every accepted center, with a budget
/// of ceil(100 lambda |D|) proposals. Extents are i.i.d. prior draws.
HardcoreScene sample_hardcore_scene(Rng& rng, const ScenarioConfig& config);

/// Poisson mean of detections of `target` in one scan:
/// detection_probability(c) * max(1, resolution(c) * det(E)).
double measurement_rate(const SensorState& sensor, const TargetState& target);

/// Detections of one scan tagged with their origin.
struct SimulatedScan {
    MeasurementSet set;
    /// Per point: index of the originating target, or -1 for clutter.
    std::vector<int> sources;
    /// Points generated outside D and dropped.
    std::size_t discarded = 0;
};

/// One scan per entry of `sensors`; scan k carries sensor_index k.
///
/// Target detections follow the two-stage model z = v + noise(v) with
/// v = c + E n, so the sensor covariance is evaluated at the impinging point
/// v rather than the center. Clutter is a homogeneous Poisson process on D.
std::vector<SimulatedScan> simulate_measurements(Rng& rng, const std::vector<TargetState>& scene,
                                                 const std::vector<SensorState>& sensors, double lambda_c,
                                                 const Domain& domain);

}  // namespace gsncp
