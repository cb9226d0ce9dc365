#pragma once

#include "gsncp/core/extent.hpp"
#include "gsncp/core/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gsncp {

/// Principal square root of a symmetric positive semi-definite matrix.
/// Negative eigenvalues from rounding are clamped to zero.
template <typename Scalar>
Matrix3<Scalar> spd_sqrt(const Matrix3<Scalar>& m) {
    const Eigen::SelfAdjointEigenSolver<Matrix3<Scalar>> eig(Scalar(0.5) * (m + m.transpose()));
    const Vector3<Scalar> root = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Lexicographic order on (center, extent parameters).
template <typename Scalar>
bool target_less(const TargetStateT<Scalar>& a, const TargetStateT<Scalar>& b) {
    for (int j = 0; j < 3; ++j) {
        if (a.center(j) != b.center(j)) return a.center(j) < b.center(j);
    }
    for (int j = 0; j < 6; ++j) {
        if (a.extent.e(j) != b.extent.e(j)) return a.extent.e(j) < b.extent.e(j);
    }
    return false;
}

/// 2-Wasserstein distance between N(c_a, S_a) and N(c_b, S_b).
template <typename Scalar>
Scalar gaussian_wasserstein(const Vector3<Scalar>& ca, const Matrix3<Scalar>& sa, const Vector3<Scalar>& cb,
                            const Matrix3<Scalar>& sb) {
    using std::sqrt;
    const Matrix3<Scalar> ra = spd_sqrt(sa);
    const Matrix3<Scalar> cross = spd_sqrt<Scalar>(ra * sb * ra);
    const Scalar bures = (sa + sb - Scalar(2) * cross).trace();
    return sqrt(std::max(Scalar(0), (ca - cb).squaredNorm() + bures));
}

/// Gaussian-Wasserstein distance between two extended targets, treating
/// each as N(center, extent covariance).
/// Arguments are put in a canonical order first, so the result is bitwise
/// symmetric.
template <typename Scalar>
Scalar gw_distance(const TargetStateT<Scalar>& a, const TargetStateT<Scalar>& b) {
    if (target_less(b, a)) return gw_distance(b, a);
    if (!target_less(a, b)) return Scalar(0);
    return gaussian_wasserstein(a.center, extent_to_covariance(a.extent), b.center, extent_to_covariance(b.extent));
}

/// Minimum-cost assignment of rows to columns for a square cost matrix.
/// Returns the column assigned to each row.
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost);

/// Optimal sub-pattern assignment distance of order p with cutoff c, using
/// gw_distance as the base metric. Two empty sets are at distance zero.
double ospa(const std::vector<TargetState>& x, const std::vector<TargetState>& y, double order = 2.0,
            double cutoff = 10.0);

}  // namespace gsncp
