#pragma once

#include "gsncp/core/types.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gsncp {

/// Log of the normalized Gaussian kernel given a Cholesky factorization of
/// its bandwidth.
template <typename Scalar>
Scalar log_kernel_eval(const Vector3<Scalar>& delta, const Eigen::LLT<Matrix3<Scalar>>& llt) {
    using std::log;
    const Matrix3<Scalar> lower = llt.matrixL();
    const Vector3<Scalar> y = lower.template triangularView<Eigen::Lower>().solve(delta);
    const Scalar log_det = Scalar(2) * (log(lower(0, 0)) + log(lower(1, 1)) + log(lower(2, 2)));
    return Scalar(-0.5) * (y.squaredNorm() + Scalar(3) * Scalar(std::log(2.0 * std::numbers::pi)) + log_det);
}

/// exp(-0.5 d^T S^-1 d) / sqrt((2 pi)^3 det S).
template <typename Scalar>
Scalar kernel_eval(const Vector3<Scalar>& delta, const Matrix3<Scalar>& cov) {
    using std::exp;
    Eigen::LLT<Matrix3<Scalar>> llt(cov);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("kernel_eval: bandwidth is not positive definite");
    return exp(log_kernel_eval(delta, llt));
}

}  // namespace gsncp
