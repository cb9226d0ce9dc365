#include "gsncp/metrics/metrics.hpp"

#include "../support/ospa_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace gsncp;
using gsncp::testing::brute_force_ospa;
using gsncp::testing::random_targets;

namespace {

Eigen::Matrix3d random_spd(Rng& rng) {
    std::normal_distribution<double> normal;
    Eigen::Matrix3d a;
    for (int i = 0; i < 9; ++i) a(i) = normal(rng);
    return a * a.transpose() + 0.1 * Eigen::Matrix3d::Identity();
}

}  // namespace

TEST_CASE("spd_sqrt squares back to its argument") {
    Rng rng(91);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Matrix3d m = random_spd(rng);
        const Eigen::Matrix3d r = spd_sqrt(m);
        CHECK((r * r - m).norm() < 1e-9 * m.norm());
        CHECK((r - r.transpose()).norm() < 1e-12);
    }
}

TEST_CASE("gaussian_wasserstein: identity, point masses and commuting covariances") {
    Rng rng(92);
    const Eigen::Matrix3d s = random_spd(rng);
    const Eigen::Vector3d c(1, 2, 3);
    CHECK(gaussian_wasserstein(c, s, c, s) < 1e-6);

    const Eigen::Vector3d d(4, -1, 0.5);
    const Eigen::Matrix3d tiny = 1e-14 * Eigen::Matrix3d::Identity();
    CHECK(gaussian_wasserstein(c, tiny, d, tiny) == doctest::Approx((c - d).norm()).epsilon(1e-6));

    const Eigen::Vector3d a(1.0, 4.0, 0.25), b(9.0, 1.0, 2.0);
    const double expected =
        std::sqrt((c - d).squaredNorm() + (a.cwiseSqrt() - b.cwiseSqrt()).squaredNorm());
    CHECK(gaussian_wasserstein(c, Eigen::Matrix3d(a.asDiagonal()), d, Eigen::Matrix3d(b.asDiagonal())) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gw_distance is a symmetric metric") {
    Rng rng(93);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = random_targets(rng, 3, 10.0);
        CHECK(gw_distance(t[0], t[0]) == 0.0);
        CHECK(gw_distance(t[0], t[1]) == gw_distance(t[1], t[0]));
        CHECK(gw_distance(t[0], t[2]) <= gw_distance(t[0], t[1]) + gw_distance(t[1], t[2]) + 1e-9);
    }
}

TEST_CASE("hungarian matches exhaustive assignment") {
    Rng rng(94);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 6;
        Eigen::MatrixXd cost(n, n);
        for (int i = 0; i < cost.size(); ++i) cost(i) = unit(rng);
        const auto assignment = hungarian(cost);
        double got = 0.0;
        for (int i = 0; i < n; ++i) got += cost(i, Eigen::Index(assignment[i]));
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("ospa: examples") {
    Rng rng(95);
    const auto x = random_targets(rng, 4, 10.0);
    CHECK(ospa(x, x) == 0.0);
    CHECK(ospa({}, {}) == 0.0);
    CHECK(ospa({}, {x[0]}) == doctest::Approx(10.0));
    CHECK(ospa({x[0]}, {}, 1.0, 3.0) == doctest::Approx(3.0));
}

TEST_CASE("ospa matches brute force, is symmetric and bounded by the cutoff") {
    Rng rng(96);
    std::uniform_int_distribution<std::size_t> size(0, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_targets(rng, size(rng), 12.0);
        const auto y = random_targets(rng, size(rng), 12.0);
        const double order = trial % 2 == 0 ? 2.0 : 1.0;
        const double cutoff = trial % 3 == 0 ? 3.0 : 10.0;
        const double d = ospa(x, y, order, cutoff);
        CHECK(d == doctest::Approx(brute_force_ospa(x, y, order, cutoff)).epsilon(1e-12));
        CHECK(d == ospa(y, x, order, cutoff));
        CHECK(d <= cutoff + 1e-12);
        CHECK(d >= 0.0);
    }
}
