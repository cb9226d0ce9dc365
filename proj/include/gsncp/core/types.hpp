#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <random>
#include <vector>

namespace gsncp {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Rng = std::mt19937_64;

/// Lower-triangular extent factor E of an ellipsoidal target.
///
/// The six parameters map onto E as
///
///     | e1  0   0  |
///     | e4  e2  0  |
///     | e5  e6  e3 |
///
/// so that the extent covariance is E * E^T and det(E) = e1 * e2 * e3.
template <typename Scalar>
struct ExtentT {
    Vector6<Scalar> e = (Vector6<Scalar>() << 1, 1, 1, 0, 0, 0).finished();

    ExtentT() = default;
    explicit ExtentT(const Vector6<Scalar>& params) : e(params) {}

    [[nodiscard]] Matrix3<Scalar> lower_triangular() const {
        Matrix3<Scalar> factor = Matrix3<Scalar>::Zero();
        factor(0, 0) = e(0);
        factor(1, 1) = e(1);
        factor(2, 2) = e(2);
        factor(1, 0) = e(3);
        factor(2, 0) = e(4);
        factor(2, 1) = e(5);
        return factor;
    }

    [[nodiscard]] Scalar determinant() const { return e(0) * e(1) * e(2); }

    [[nodiscard]] bool has_positive_diagonal() const {
        return e(0) > Scalar(0) && e(1) > Scalar(0) && e(2) > Scalar(0);
    }
};

/// Axis-aligned box D.
template <typename Scalar>
struct DomainT {
    Vector3<Scalar> lower = Vector3<Scalar>::Zero();
    Vector3<Scalar> upper = Vector3<Scalar>::Ones();

    [[nodiscard]] Scalar volume() const { return (upper - lower).prod(); }

    [[nodiscard]] bool contains(const Vector3<Scalar>& p) const {
        return (p.array() >= lower.array()).all() && (p.array() <= upper.array()).all();
    }

    [[nodiscard]] bool valid() const { return (upper.array() > lower.array()).all(); }
};

/// Center position and extent of one extended target.
template <typename Scalar>
struct TargetStateT {
    Vector3<Scalar> center = Vector3<Scalar>::Zero();
    ExtentT<Scalar> extent;
};

using Extent = ExtentT<double>;
using Domain = DomainT<double>;
using TargetState = TargetStateT<double>;

/// Detections recorded in one sensor state.
struct MeasurementSet {
    std::size_t sensor_index = 0;
    std::vector<Eigen::Vector3d> points;
};

/// Full sampler state: targets plus the center and clutter intensities.
struct ModelParams {
    std::vector<TargetState> targets;
    double lambda = 0.0;
    double lambda_c = 0.0;
};

/// Uniform box prior on the six extent parameters.
struct ExtentPrior {
    double diag_low = 1.0;
    double diag_high = 1.5;
    double offdiag_low = -0.5;
    double offdiag_high = 0.5;

    [[nodiscard]] bool ordered() const { return diag_low <= diag_high && offdiag_low <= offdiag_high; }
};

}  // namespace gsncp
