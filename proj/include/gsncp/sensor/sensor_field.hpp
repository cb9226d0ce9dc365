#pragma once

#include "gsncp/core/extent.hpp"
#include "gsncp/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsncp {

/// Pose and analytic field parameters of one sensor state.
///
/// The fields are range/bearing surrogates for a monostatic radar:
///  - noise covariance: sigma_range^2 along the line of sight and
///    (sigma_angle * range)^2 across it,
///  - detection probability: p_fa^(1 / (1 + snr_ref / range^4)),
///  - resolution: r0 / max(range^2, min_range^2).
template <typename Scalar>
struct SensorStateT {
    Vector3<Scalar> position = Vector3<Scalar>::Zero();
    Scalar sigma_range = Scalar(0.1);
    Scalar sigma_angle = Scalar(0.01);
    Scalar snr_ref = Scalar(1e8);
    Scalar p_fa = Scalar(0.01);
    Scalar r0 = Scalar(1000);
    Scalar min_range = Scalar(1);
    /// Lognormal scale of the covariance mismatch applied by the simulator only.
    Scalar fading_sigma = Scalar(0);

    [[nodiscard]] bool valid() const {
        return sigma_range > Scalar(0) && sigma_angle > Scalar(0) && r0 > Scalar(0) && snr_ref > Scalar(0) &&
               p_fa > Scalar(0) && p_fa <= Scalar(1) && min_range > Scalar(0) && fading_sigma >= Scalar(0);
    }
};

using SensorState = SensorStateT<double>;

template <typename Scalar>
Scalar sensor_range(const SensorStateT<Scalar>& sensor, const Vector3<Scalar>& p) {
    return (p - sensor.position).norm();
}

template <typename Scalar>
Matrix3<Scalar> noise_covariance(const SensorStateT<Scalar>& sensor, const Vector3<Scalar>& p) {
    const Vector3<Scalar> los = p - sensor.position;
    const Scalar range = los.norm();
    if (!(range > Scalar(0))) {
        throw std::invalid_argument("noise_covariance: point coincides with the sensor position");
    }
    const Vector3<Scalar> u = los / range;
    const Scalar along = sensor.sigma_range * sensor.sigma_range;
    const Scalar cross = (sensor.sigma_angle * range) * (sensor.sigma_angle * range);
    // Both cross-range eigenvalues are equal, so R diag(.) R^T needs only the
    // line-of-sight projector.
    const Matrix3<Scalar> proj = u * u.transpose();
    Matrix3<Scalar> cov = along * proj + cross * (Matrix3<Scalar>::Identity() - proj);
    return Scalar(0.5) * (cov + cov.transpose());
}

template <typename Scalar>
Scalar detection_probability(const SensorStateT<Scalar>& sensor, const Vector3<Scalar>& p) {
    using std::pow;
    const Scalar range = sensor_range(sensor, p);
    const Scalar r2 = range * range;
    const Scalar snr = sensor.snr_ref / (r2 * r2);
    return pow(sensor.p_fa, Scalar(1) / (Scalar(1) + snr));
}

template <typename Scalar>
Scalar resolution(const SensorStateT<Scalar>& sensor, const Vector3<Scalar>& p) {
    const Scalar range = sensor_range(sensor, p);
    return sensor.r0 / std::max(range * range, sensor.min_range * sensor.min_range);
}

/// Position error bound: sqrt(tr noise_covariance).
template <typename Scalar>
Scalar peb(const SensorStateT<Scalar>& sensor, const Vector3<Scalar>& p) {
    using std::sqrt;
    return sqrt(noise_covariance(sensor, p).trace());
}

/// Extent covariance plus sensor noise evaluated at the target center.
template <typename Scalar>
Matrix3<Scalar> effective_covariance(const SensorStateT<Scalar>& sensor, const TargetStateT<Scalar>& target) {
    return extent_to_covariance(target.extent) + noise_covariance(sensor, target.center);
}

}  // namespace gsncp
