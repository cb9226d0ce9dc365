#include "gsncp/posterior/contribution_cache.hpp"

#include "gsncp/core/extent.hpp"
#include "gsncp/posterior/kernel_factor.hpp"
#include "gsncp/sim/scene.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace gsncp {

namespace {

using detail::KernelFactor;

template <typename Visit>
void for_each_contribution(const Observation& obs, const FlatMeasurements& flat, const TargetState& target,
                           std::vector<double>& rates, Visit&& visit) {
    const Eigen::Matrix3d extent_cov = extent_to_covariance(target.extent);
    const std::size_t k_count = obs.sensor_state_count();
    rates.assign(k_count, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) rates[k] = measurement_rate(obs.sensors[k], target);
    for (const auto& block : flat.blocks) {
        if (block.begin == block.end) continue;
        const SensorState& sensor = obs.sensors[block.sensor_index];
        const KernelFactor kernel(extent_cov + noise_covariance(sensor, target.center), rates[block.sensor_index]);
        for (std::size_t m = block.begin; m < block.end; ++m) visit(m, kernel(flat.points[m] - target.center));
    }
}

}  // namespace

FlatMeasurements::FlatMeasurements(const Observation& obs) {
    obs.validate();
    points.reserve(obs.measurement_count());
    sensor_of.reserve(obs.measurement_count());
    for (const auto& scan : obs.scans) {
        Block block{scan.sensor_index, points.size(), points.size() + scan.points.size()};
        for (const auto& p : scan.points) {
            points.push_back(p);
            sensor_of.push_back(scan.sensor_index);
        }
        blocks.push_back(block);
    }
}

TargetTerms compute_target_terms(const Observation& obs, const FlatMeasurements& flat, const TargetState& target) {
    TargetTerms terms;
    terms.eta.assign(flat.size(), 0.0);
    double eta_sum = 0.0;
    for_each_contribution(obs, flat, target, terms.rates, [&](std::size_t m, double eta) {
        terms.eta[m] = eta;
        eta_sum += eta;
    });
    terms.eta_sum = eta_sum;
    for (double r : terms.rates) terms.rate_sum += r;
    return terms;
}

double contribution_total(const Observation& obs, const FlatMeasurements& flat, const TargetState& target) {
    std::vector<double> rates;
    double total = 0.0;
    for_each_contribution(obs, flat, target, rates, [&](std::size_t, double eta) { total += eta; });
    return total;
}

ContributionCache::ContributionCache(const Observation& obs, const ModelParams& params)
    : obs_(&obs), flat_(obs), lambda_c_(params.lambda_c), shot_noise_(flat_.size(), 0.0) {
    if (!(lambda_c_ > 0.0)) throw std::invalid_argument("ContributionCache: lambda_c must be positive");
    rows_.reserve(params.targets.size());
    for (const auto& target : params.targets) rows_.push_back(evaluate(target));
    resum();
}

double ContributionCache::total_rate() const {
    double total = 0.0;
    for (const auto& row : rows_) total += row.rate_sum;
    return total;
}

double ContributionCache::addition_delta(const TargetTerms& terms) const {
    double delta = -terms.rate_sum;
    for (std::size_t m = 0; m < shot_noise_.size(); ++m) {
        delta += std::log1p(terms.eta[m] / (lambda_c_ + shot_noise_[m]));
    }
    return delta;
}

double ContributionCache::removal_delta(std::size_t l) const {
    assert(l < rows_.size());
    const auto& eta = rows_[l].eta;
    double delta = rows_[l].rate_sum;
    for (std::size_t m = 0; m < shot_noise_.size(); ++m) {
        const double rest = std::max(0.0, shot_noise_[m] - eta[m]);
        delta += std::log((lambda_c_ + rest) / (lambda_c_ + shot_noise_[m]));
    }
    return delta;
}

double ContributionCache::replacement_delta(std::size_t l, const TargetTerms& terms) const {
    assert(l < rows_.size());
    const auto& old_eta = rows_[l].eta;
    double delta = rows_[l].rate_sum - terms.rate_sum;
    for (std::size_t m = 0; m < shot_noise_.size(); ++m) {
        const double rest = std::max(0.0, shot_noise_[m] - old_eta[m]);
        delta += std::log((lambda_c_ + rest + terms.eta[m]) / (lambda_c_ + shot_noise_[m]));
    }
    return delta;
}

double ContributionCache::add_target(TargetTerms terms) { return insert_target(rows_.size(), std::move(terms)); }

double ContributionCache::insert_target(std::size_t pos, TargetTerms terms) {
    if (pos > rows_.size()) throw std::out_of_range("ContributionCache::insert_target: position past the end");
    const double before = log_likelihood_;
    for (std::size_t m = 0; m < shot_noise_.size(); ++m) shot_noise_[m] += terms.eta[m];
    rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(terms));
    refresh_log_likelihood();
    return log_likelihood_ - before;
}

double ContributionCache::remove_target(std::size_t l, TargetTerms* removed) {
    if (l >= rows_.size()) throw std::out_of_range("ContributionCache::remove_target: no such target");
    const double before = log_likelihood_;
    const auto& eta = rows_[l].eta;
    for (std::size_t m = 0; m < shot_noise_.size(); ++m) shot_noise_[m] = std::max(0.0, shot_noise_[m] - eta[m]);
    if (removed != nullptr) *removed = std::move(rows_[l]);
    rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(l));
    if (rows_.empty()) std::fill(shot_noise_.begin(), shot_noise_.end(), 0.0);
    refresh_log_likelihood();
    return log_likelihood_ - before;
}

double ContributionCache::move_target(std::size_t l, TargetTerms terms) {
    if (l >= rows_.size()) throw std::out_of_range("ContributionCache::move_target: no such target");
    const double before = log_likelihood_;
    const auto& old_eta = rows_[l].eta;
    for (std::size_t m = 0; m < shot_noise_.size(); ++m) {
        shot_noise_[m] = std::max(0.0, shot_noise_[m] - old_eta[m]) + terms.eta[m];
    }
    rows_[l] = std::move(terms);
    refresh_log_likelihood();
    return log_likelihood_ - before;
}

double ContributionCache::set_clutter_intensity(double lambda_c) {
    if (!(lambda_c > 0.0)) throw std::invalid_argument("ContributionCache: lambda_c must be positive");
    const double before = log_likelihood_;
    lambda_c_ = lambda_c;
    refresh_log_likelihood();
    return log_likelihood_ - before;
}

void ContributionCache::resum() {
    std::fill(shot_noise_.begin(), shot_noise_.end(), 0.0);
    for (const auto& row : rows_) {
        for (std::size_t m = 0; m < shot_noise_.size(); ++m) shot_noise_[m] += row.eta[m];
    }
    refresh_log_likelihood();
}

void ContributionCache::refresh_log_likelihood() {
    const double k_count = static_cast<double>(obs_->sensor_state_count());
    double ll = k_count * (1.0 - lambda_c_) * obs_->domain.volume() - total_rate();
    for (double s : shot_noise_) ll += std::log(lambda_c_ + s);
    log_likelihood_ = ll;
}

}  // namespace gsncp
