#include "gsncp/core/config.hpp"
#include "gsncp/core/extent.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace gsncp;

namespace {

Extent make_extent(double e1, double e2, double e3, double e4, double e5, double e6) {
    Vector6<double> e;
    e << e1, e2, e3, e4, e5, e6;
    return Extent(e);
}

Extent random_extent(Rng& rng) {
    std::uniform_real_distribution<double> diag(0.2, 2.0);
    std::uniform_real_distribution<double> off(-1.0, 1.0);
    return make_extent(diag(rng), diag(rng), diag(rng), off(rng), off(rng), off(rng));
}

}  // namespace

TEST_CASE("extent_to_covariance: identity and diagonal squares") {
    CHECK(extent_to_covariance(make_extent(1, 1, 1, 0, 0, 0)).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    const Eigen::Matrix3d expected = Eigen::Vector3d(4, 1, 1).asDiagonal();
    CHECK(extent_to_covariance(make_extent(2, 1, 1, 0, 0, 0)).isApprox(expected, 1e-15));
}

TEST_CASE("extent_to_covariance: matches elementwise triple-loop product") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Extent extent = random_extent(rng);
        double factor[3][3] = {{extent.e(0), 0, 0}, {extent.e(3), extent.e(1), 0}, {extent.e(4), extent.e(5), extent.e(2)}};
        const Eigen::Matrix3d cov = extent_to_covariance(extent);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double sum = 0.0;
                for (int k = 0; k < 3; ++k) sum += factor[i][k] * factor[j][k];
                CHECK(cov(i, j) == doctest::Approx(sum).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("extent_to_covariance: positive definite with det equal to squared diagonal product") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Extent extent = random_extent(rng);
        const Eigen::Matrix3d cov = extent_to_covariance(extent);
        CHECK(cov.isApprox(cov.transpose(), 0.0));
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
        const double d = extent.determinant();
        CHECK(cov.determinant() == doctest::Approx(d * d).epsilon(1e-10));
    }
}

TEST_CASE("extent_to_covariance: rejects non-positive diagonal") {
    CHECK_THROWS_AS(extent_to_covariance(make_extent(0, 1, 1, 0, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(extent_to_covariance(make_extent(1, -1, 1, 0, 0, 0)), std::invalid_argument);
}

TEST_CASE("covariance_to_extent inverts extent_to_covariance") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Extent extent = random_extent(rng);
        const Extent back = covariance_to_extent(extent_to_covariance(extent));
        CHECK((back.e - extent.e).norm() < 1e-10);
    }
    CHECK_THROWS_AS(covariance_to_extent(Eigen::Matrix3d(-Eigen::Matrix3d::Identity())), std::invalid_argument);
}

TEST_CASE("sample_extent_prior stays inside the bounds and has the uniform mean") {
    Rng rng(14);
    const ExtentPrior prior;
    const int draws = 100000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        const Extent e = sample_extent_prior(rng, prior);
        for (int j = 0; j < 3; ++j) REQUIRE((e.e(j) >= 1.0 && e.e(j) <= 1.5));
        for (int j = 3; j < 6; ++j) REQUIRE((e.e(j) >= -0.5 && e.e(j) <= 0.5));
        sum += e.e(0);
    }
    const double sigma = 0.5 / std::sqrt(12.0) / std::sqrt(double(draws));
    CHECK(std::abs(sum / draws - 1.25) < 3.0 * sigma);
}

TEST_CASE("sample_extent_prior with degenerate bounds is a point mass") {
    Rng rng(15);
    const ExtentPrior prior{1.0, 1.0, 1.0, 1.0};
    const Extent e = sample_extent_prior(rng, prior);
    CHECK(e.e == Vector6<double>::Ones());
}

TEST_CASE("log_extent_prior_density") {
    const ExtentPrior prior;
    const Extent inside = make_extent(1.2, 1.1, 1.4, 0.1, -0.3, 0.2);
    CHECK(log_extent_prior_density(inside, prior) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(log_extent_prior_density(make_extent(0.9, 1.1, 1.4, 0, 0, 0), prior) ==
          -std::numeric_limits<double>::infinity());
    CHECK(log_extent_prior_density(make_extent(1.2, 1.1, 1.4, 0.6, 0, 0), prior) ==
          -std::numeric_limits<double>::infinity());

    // Constant on the support, and the box volume is 0.5^3 * 1^3, so the
    // density times the volume is one.
    Rng rng(16);
    for (int i = 0; i < 50; ++i) {
        CHECK(log_extent_prior_density(sample_extent_prior(rng, prior), prior) ==
              log_extent_prior_density(inside, prior));
    }
    CHECK(std::exp(log_extent_prior_density(inside, prior)) * 0.125 == doctest::Approx(1.0));
}

TEST_CASE("project_to_prior_support clamps into the box") {
    const ExtentPrior prior;
    const Extent clamped = project_to_prior_support(make_extent(0.5, 2.0, 1.2, -3.0, 0.1, 0.9), prior);
    CHECK(clamped.e(0) == 1.0);
    CHECK(clamped.e(1) == 1.5);
    CHECK(clamped.e(2) == 1.2);
    CHECK(clamped.e(3) == -0.5);
    CHECK(clamped.e(4) == 0.1);
    CHECK(clamped.e(5) == 0.5);
    CHECK(in_extent_prior_support(clamped, prior));
}

TEST_CASE("core types are generic over the scalar") {
    const ExtentT<float> e;
    const Matrix3<float> cov = extent_to_covariance(e);
    CHECK(cov.isApprox(Matrix3<float>::Identity()));
    const DomainT<float> box{Vector3<float>(0, 0, 0), Vector3<float>(2, 3, 4)};
    CHECK(box.volume() == 24.0f);
    CHECK(box.contains(Vector3<float>(1, 1, 1)));
    CHECK_FALSE(box.contains(Vector3<float>(3, 1, 1)));
}

TEST_CASE("ScenarioConfig::validate names the violated constraint") {
    ScenarioConfig config;
    config.lambda = 0.001;
    config.lambda_c = 0.001;
    config.sensors.push_back(SensorState{});
    CHECK_NOTHROW(config.validate());

    ScenarioConfig bad = config;
    bad.domain.upper = Eigen::Vector3d(0, 1, 1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = config;
    bad.sensors.front().sigma_range = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = config;
    bad.extent_prior.diag_low = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = config;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
