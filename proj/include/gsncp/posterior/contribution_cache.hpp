#pragma once

#include "gsncp/core/types.hpp"
#include "gsncp/posterior/posterior.hpp"

#include <cstddef>
#include <vector>

namespace gsncp {

/// Measurements of an Observation flattened into one contiguous array,
/// with the range belonging to each scan.
struct FlatMeasurements {
    struct Block {
        std::size_t sensor_index = 0;
        std::size_t begin = 0;
        std::size_t end = 0;
    };

    std::vector<Eigen::Vector3d> points;
    std::vector<std::size_t> sensor_of;
    std::vector<Block> blocks;

    explicit FlatMeasurements(const Observation& obs);
    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Everything one target contributes to the intensity.
struct TargetTerms {
    /// rate_k(C) per sensor state.
    std::vector<double> rates;
    /// eta_k(p_m | C) per flattened measurement.
    std::vector<double> eta;
    double rate_sum = 0.0;
    double eta_sum = 0.0;
};

/// Computes the intensity contributions of one target. O(M + K).
TargetTerms compute_target_terms(const Observation& obs, const FlatMeasurements& flat, const TargetState& target);

/// Sum over sensor states and measurements of eta_k(p | C), without storing
/// the row. Used by birth-rate evaluation.
double contribution_total(const Observation& obs, const FlatMeasurements& flat, const TargetState& target);

/// Per-measurement intensity bookkeeping for one chain.
///
/// Keeps the shot-noise sum S_m = sum_l eta(p_m | C_l) and each target's
/// row, so adding, removing or moving one target costs O(M + K) and the
/// log-likelihood is refreshed in O(M + L).
class ContributionCache {
public:
    ContributionCache(const Observation& obs, const ModelParams& params);

    [[nodiscard]] std::size_t target_count() const { return rows_.size(); }
    [[nodiscard]] std::size_t measurement_count() const { return flat_.size(); }
    [[nodiscard]] std::size_t sensor_state_count() const { return obs_->sensor_state_count(); }
    [[nodiscard]] double lambda_c() const { return lambda_c_; }
    [[nodiscard]] double log_likelihood() const { return log_likelihood_; }
    [[nodiscard]] double total_intensity(std::size_t m) const { return lambda_c_ + shot_noise_[m]; }
    [[nodiscard]] double shot_noise(std::size_t m) const { return shot_noise_[m]; }
    [[nodiscard]] double contribution(std::size_t m, std::size_t l) const { return rows_[l].eta[m]; }
    [[nodiscard]] double rate(std::size_t k, std::size_t l) const { return rows_[l].rates[k]; }
    [[nodiscard]] const TargetTerms& terms(std::size_t l) const { return rows_[l]; }
    [[nodiscard]] const FlatMeasurements& measurements() const { return flat_; }
    [[nodiscard]] const Observation& observation() const { return *obs_; }
    /// Sum over targets and sensor states of the measurement rates.
    [[nodiscard]] double total_rate() const;

    [[nodiscard]] TargetTerms evaluate(const TargetState& target) const {
        return compute_target_terms(*obs_, flat_, target);
    }

    /// Log-likelihood change if a target with `terms` were appended.
    [[nodiscard]] double addition_delta(const TargetTerms& terms) const;
    /// Log-likelihood change if target l were removed.
    [[nodiscard]] double removal_delta(std::size_t l) const;
    /// Log-likelihood change if target l were replaced by `terms`.
    [[nodiscard]] double replacement_delta(std::size_t l, const TargetTerms& terms) const;

    /// Each edit returns the change in log-likelihood.
    double add_target(TargetTerms terms);
    /// Inserts at position `pos`, shifting later targets.
    double insert_target(std::size_t pos, TargetTerms terms);
    /// Optionally hands the removed row back through `removed`.
    double remove_target(std::size_t l, TargetTerms* removed = nullptr);
    double move_target(std::size_t l, TargetTerms terms);
    double set_clutter_intensity(double lambda_c);

    /// Recomputes the shot-noise sums from the stored rows.
    void resum();

private:
    void refresh_log_likelihood();

    const Observation* obs_;
    FlatMeasurements flat_;
    double lambda_c_;
    std::vector<TargetTerms> rows_;
    std::vector<double> shot_noise_;
    double log_likelihood_ = 0.0;
};

}  // namespace gsncp
