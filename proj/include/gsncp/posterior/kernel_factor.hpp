#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gsncp::detail {

/// Scaled Gaussian kernel rate * K_S(delta) with the Cholesky factor of S
/// unpacked for a branch-free triangular solve in the hot loops.
struct KernelFactor {
    double l00, l10, l11, l20, l21, l22;
    double log_scale;  // log(rate) - 0.5 log((2 pi)^3 det S)

    KernelFactor(const Eigen::Matrix3d& cov, double rate) {
        Eigen::LLT<Eigen::Matrix3d> llt(cov);
        if (llt.info() != Eigen::Success) throw std::runtime_error("kernel bandwidth is not positive definite");
        const Eigen::Matrix3d l = llt.matrixL();
        l00 = l(0, 0);
        l10 = l(1, 0);
        l11 = l(1, 1);
        l20 = l(2, 0);
        l21 = l(2, 1);
        l22 = l(2, 2);
        const double log_det = 2.0 * (std::log(l00) + std::log(l11) + std::log(l22));
        log_scale = std::log(rate) - 0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + log_det);
    }

    [[nodiscard]] double operator()(const Eigen::Vector3d& delta) const {
        const double y0 = delta(0) / l00;
        const double y1 = (delta(1) - l10 * y0) / l11;
        const double y2 = (delta(2) - l20 * y0 - l21 * y1) / l22;
        return std::exp(log_scale - 0.5 * (y0 * y0 + y1 * y1 + y2 * y2));
    }
};

}  // namespace gsncp::detail
