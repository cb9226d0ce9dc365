#pragma once

#include <cstddef>

namespace gsncp {

/// Tuning of the jump MCMC sampler. Defaults are the desk-scale experiment
/// settings; the adaptation and birth-mixture constants are our own choices.
struct ChainConfig {
    double move_prob = 0.8;         // p_m
    double extent_move_prob = 0.7;  // p_em
    std::size_t birth_centers = 100;  // N_B, expected number of thinned centers
    std::size_t birth_extents = 20;   // N_E, prior draws paired with each center
    double birth_radius = 0.2;        // r_B
    std::size_t patience = 200;
    std::size_t averaging = 100;  // N, post-burn-in samples averaged
    std::size_t max_burnin = 5000;

    std::size_t adapt_window = 50;
    double adapt_low = 0.15;
    double adapt_high = 0.4;
    double adapt_factor = 1.5;
    double initial_center_scale = 0.5;   // theta
    double initial_extent_scale = 0.05;  // sigma_E,move

    /// Weight of the uniform-domain component of the birth proposal.
    double birth_uniform_weight = 0.05;

    /// When false, lambda and lambda_c stay at their initial values and no
    /// clutter labels are drawn.
    bool update_intensities = true;

    void validate() const;
};

}  // namespace gsncp
