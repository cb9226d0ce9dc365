#include "gsncp/sim/scene.hpp"

#include "gsncp/core/extent.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace gsncp {

void ScenarioConfig::validate() const {
    if (!domain.valid()) throw std::invalid_argument("scenario: domain upper must exceed lower componentwise");
    if (!(hardcore_radius > 0.0)) throw std::invalid_argument("scenario: hardcore_radius must be positive");
    if (!extent_prior.ordered()) throw std::invalid_argument("scenario: extent prior bounds must be ordered");
    if (!(extent_prior.diag_low > 0.0)) {
        throw std::invalid_argument("scenario: extent prior diagonal lower bound must be positive");
    }
    if (lambda < 0.0) throw std::invalid_argument("scenario: lambda must be non-negative");
    if (lambda_c < 0.0) throw std::invalid_argument("scenario: lambda_c must be non-negative");
    if (epochs < 1) throw std::invalid_argument("scenario: epochs must be at least 1");
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (!sensors[i].valid()) {
            throw std::invalid_argument("scenario: sensor " + std::to_string(i) + " has invalid parameters");
        }
    }
}

namespace {

Eigen::Vector3d uniform_in(Rng& rng, const Domain& domain) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::Vector3d p;
    for (int j = 0; j < 3; ++j) p(j) = domain.lower(j) + unit(rng) * (domain.upper(j) - domain.lower(j));
    return p;
}

Eigen::Vector3d standard_normal3(Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d n;
    for (int j = 0; j < 3; ++j) n(j) = normal(rng);
    return n;
}

std::size_t poisson(Rng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<long long> dist(mean);
    return static_cast<std::size_t>(dist(rng));
}

}  // namespace

HardcoreScene sample_hardcore_scene(Rng& rng, const ScenarioConfig& config) {
    if (!(config.hardcore_radius > 0.0)) throw std::invalid_argument("sample_hardcore_scene: R must be positive");
    const double mean = config.lambda * config.domain.volume();
    HardcoreScene scene;
    scene.requested = poisson(rng, mean);
    const auto budget = static_cast<std::size_t>(std::ceil(100.0 * mean));
    const double r2 = config.hardcore_radius * config.hardcore_radius;

    std::vector<Eigen::Vector3d> centers;
    std::size_t proposals = 0;
    while (centers.size() < scene.requested && proposals < budget) {
        ++proposals;
        const Eigen::Vector3d c = uniform_in(rng, config.domain);
        const bool clear = std::none_of(centers.begin(), centers.end(),
                                        [&](const Eigen::Vector3d& q) { return (q - c).squaredNorm() < r2; });
        if (clear) centers.push_back(c);
    }
    scene.saturated = centers.size() < scene.requested;
    for (const auto& c : centers) {
        TargetState t;
        t.center = c;
        t.extent = sample_extent_prior(rng, config.extent_prior);
        scene.targets.push_back(t);
    }
    return scene;
}

double measurement_rate(const SensorState& sensor, const TargetState& target) {
    const double resolvable = std::max(1.0, resolution(sensor, target.center) * target.extent.determinant());
    return detection_probability(sensor, target.center) * resolvable;
}

std::vector<SimulatedScan> simulate_measurements(Rng& rng, const std::vector<TargetState>& scene,
                                                 const std::vector<SensorState>& sensors, double lambda_c,
                                                 const Domain& domain) {
    std::vector<SimulatedScan> scans(sensors.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < sensors.size(); ++k) {
        const SensorState& sensor = sensors[k];
        SimulatedScan& scan = scans[k];
        scan.set.sensor_index = k;

        for (std::size_t l = 0; l < scene.size(); ++l) {
            const TargetState& target = scene[l];
            const Eigen::Matrix3d factor = target.extent.lower_triangular();
            const std::size_t count = poisson(rng, measurement_rate(sensor, target));
            for (std::size_t i = 0; i < count; ++i) {
                const Eigen::Vector3d v = target.center + factor * standard_normal3(rng);
                Eigen::Matrix3d cov = noise_covariance(sensor, v);
                if (sensor.fading_sigma > 0.0) cov *= std::exp(sensor.fading_sigma * normal(rng));
                const Eigen::Matrix3d chol = Eigen::LLT<Eigen::Matrix3d>(cov).matrixL();
                const Eigen::Vector3d z = v + chol * standard_normal3(rng);
                if (domain.contains(z)) {
                    scan.set.points.push_back(z);
                    scan.sources.push_back(static_cast<int>(l));
                } else {
                    ++scan.discarded;
                }
            }
        }

        const std::size_t clutter = poisson(rng, lambda_c * domain.volume());
        for (std::size_t i = 0; i < clutter; ++i) {
            scan.set.points.push_back(uniform_in(rng, domain));
            scan.sources.push_back(-1);
        }
    }
    return scans;
}

}  // namespace gsncp
