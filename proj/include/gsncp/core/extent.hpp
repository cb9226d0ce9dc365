#pragma once

#include "gsncp/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gsncp {

/// Extent covariance E * E^T.
template <typename Scalar>
Matrix3<Scalar> extent_to_covariance(const ExtentT<Scalar>& extent) {
    if (!extent.has_positive_diagonal()) {
        throw std::invalid_argument("extent_to_covariance: diagonal entries must be positive");
    }
    const Matrix3<Scalar> factor = extent.lower_triangular();
    Matrix3<Scalar> cov = factor * factor.transpose();
    // Force exact symmetry; the product is symmetric only up to rounding.
    return Scalar(0.5) * (cov + cov.transpose());
}

/// Inverse of extent_to_covariance via the Cholesky factor (positive diagonal).
template <typename Scalar>
ExtentT<Scalar> covariance_to_extent(const Matrix3<Scalar>& cov) {
    Eigen::LLT<Matrix3<Scalar>> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("covariance_to_extent: covariance is not positive definite");
    }
    const Matrix3<Scalar> factor = llt.matrixL();
    Vector6<Scalar> e;
    e << factor(0, 0), factor(1, 1), factor(2, 2), factor(1, 0), factor(2, 0), factor(2, 1);
    return ExtentT<Scalar>(e);
}

template <typename Scalar, typename Generator>
ExtentT<Scalar> sample_extent_prior(Generator& rng, const ExtentPrior& prior) {
    std::uniform_real_distribution<double> diag(prior.diag_low, prior.diag_high);
    std::uniform_real_distribution<double> offdiag(prior.offdiag_low, prior.offdiag_high);
    Vector6<Scalar> e;
    for (int j = 0; j < 3; ++j) e(j) = Scalar(diag(rng));
    for (int j = 3; j < 6; ++j) e(j) = Scalar(offdiag(rng));
    return ExtentT<Scalar>(e);
}

inline Extent sample_extent_prior(Rng& rng, const ExtentPrior& prior) {
    return sample_extent_prior<double>(rng, prior);
}

template <typename Scalar>
bool in_extent_prior_support(const ExtentT<Scalar>& extent, const ExtentPrior& prior) {
    for (int j = 0; j < 3; ++j) {
        if (extent.e(j) < prior.diag_low || extent.e(j) > prior.diag_high) return false;
    }
    for (int j = 3; j < 6; ++j) {
        if (extent.e(j) < prior.offdiag_low || extent.e(j) > prior.offdiag_high) return false;
    }
    return true;
}

/// Log of the uniform box density; -inf outside the support.
template <typename Scalar>
Scalar log_extent_prior_density(const ExtentT<Scalar>& extent, const ExtentPrior& prior) {
    if (!in_extent_prior_support(extent, prior)) return -std::numeric_limits<Scalar>::infinity();
    using std::log;
    return -Scalar(3) * Scalar(log(prior.diag_high - prior.diag_low)) -
           Scalar(3) * Scalar(log(prior.offdiag_high - prior.offdiag_low));
}

/// Clamp every parameter into the prior box.
template <typename Scalar>
ExtentT<Scalar> project_to_prior_support(const ExtentT<Scalar>& extent, const ExtentPrior& prior) {
    ExtentT<Scalar> out = extent;
    for (int j = 0; j < 3; ++j) out.e(j) = std::clamp<Scalar>(out.e(j), prior.diag_low, prior.diag_high);
    for (int j = 3; j < 6; ++j) out.e(j) = std::clamp<Scalar>(out.e(j), prior.offdiag_low, prior.offdiag_high);
    return out;
}

}  // namespace gsncp
