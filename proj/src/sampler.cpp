#include "gsncp/mcmc/sampler.hpp"

#include "gsncp/core/extent.hpp"
#include "gsncp/posterior/kernel.hpp"
#include "gsncp/posterior/kernel_factor.hpp"
#include "gsncp/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <random>
#include <stdexcept>

namespace gsncp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_sum_exp(const std::vector<double>& values) {
    double hi = kNegInf;
    for (double v : values) hi = std::max(hi, v);
    if (hi == kNegInf) return kNegInf;
    if (hi == kInf) return kInf;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - hi);
    return hi + std::log(sum);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

Eigen::Vector3d uniform_in_domain(Rng& rng, const Domain& domain) {
    Eigen::Vector3d p;
    for (int j = 0; j < 3; ++j) p(j) = domain.lower(j) + uniform01(rng) * (domain.upper(j) - domain.lower(j));
    return p;
}

Eigen::Vector3d uniform_in_ball(Rng& rng, double radius) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d dir;
    do {
        for (int j = 0; j < 3; ++j) dir(j) = normal(rng);
    } while (dir.squaredNorm() == 0.0);
    return dir.normalized() * (radius * std::cbrt(uniform01(rng)));
}

/// Whether adding `candidate` (or replacing target `skip` by it) keeps the
/// prior finite. Intensities are not checked here.
bool admissible(const ChainState& state, const TargetState& candidate, std::size_t skip) {
    const PriorModel& prior = state.prior();
    const std::size_t count = skip < state.target_count() ? state.target_count() : state.target_count() + 1;
    if (count > prior.max_targets) return false;
    if (!prior.domain.contains(candidate.center)) return false;
    if (!in_extent_prior_support(candidate.extent, prior.extent_prior)) return false;
    return hardcore_clear(state.params().targets, candidate.center, prior.hardcore_radius, skip);
}

}  // namespace

// ---- ChainConfig ----

void ChainConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(move_prob) || !prob(extent_move_prob)) throw std::invalid_argument("chain: probabilities must lie in [0,1]");
    if (birth_centers == 0 || birth_extents == 0 || patience == 0 || averaging == 0 || adapt_window == 0) {
        throw std::invalid_argument("chain: N_B, N_E, patience, N and the adaptation window must be positive");
    }
    if (!(birth_radius > 0.0)) throw std::invalid_argument("chain: r_B must be positive");
    if (!(adapt_factor > 1.0) || !(adapt_low < adapt_high)) throw std::invalid_argument("chain: bad adaptation band");
    if (!(initial_center_scale > 0.0) || !(initial_extent_scale > 0.0)) {
        throw std::invalid_argument("chain: initial move scales must be positive");
    }
    if (!(birth_uniform_weight > 0.0 && birth_uniform_weight <= 1.0)) {
        throw std::invalid_argument("chain: birth_uniform_weight must lie in (0,1]");
    }
}

// ---- ChainState ----

ChainState::ChainState(const Observation& obs, const PriorModel& prior, ModelParams params)
    : obs_(&obs), prior_(&prior), params_(std::move(params)), cache_(obs, params_),
      log_prior_(gsncp::log_prior(params_, prior)) {}

void ChainState::insert(std::size_t pos, const TargetState& target, TargetTerms terms) {
    params_.targets.insert(params_.targets.begin() + static_cast<std::ptrdiff_t>(pos), target);
    cache_.insert_target(pos, std::move(terms));
    log_prior_ = gsncp::log_prior(params_, *prior_);
}

void ChainState::erase(std::size_t l, TargetState* removed, TargetTerms* removed_terms) {
    if (removed != nullptr) *removed = params_.targets[l];
    params_.targets.erase(params_.targets.begin() + static_cast<std::ptrdiff_t>(l));
    cache_.remove_target(l, removed_terms);
    log_prior_ = gsncp::log_prior(params_, *prior_);
}

void ChainState::replace(std::size_t l, const TargetState& target, TargetTerms terms) {
    params_.targets[l] = target;
    cache_.move_target(l, std::move(terms));
    log_prior_ = gsncp::log_prior(params_, *prior_);
}

void ChainState::set_intensities(double lambda, double lambda_c) {
    params_.lambda = lambda;
    params_.lambda_c = lambda_c;
    cache_.set_clutter_intensity(lambda_c);
    log_prior_ = gsncp::log_prior(params_, *prior_);
}

// ---- Birth and death rates ----

double log_birth_rate(double lambda, double lambda_c, double contribution_sum) {
    return std::log(lambda) + std::log1p(contribution_sum / lambda_c);
}

double birth_rate(const ModelParams& params, const Observation& obs, const FlatMeasurements& flat,
                  const TargetState& candidate) {
    return params.lambda * (1.0 + contribution_total(obs, flat, candidate) / params.lambda_c);
}

DeathRate death_rate(const ChainState& state, std::size_t l) {
    const ModelParams& params = state.params();
    if (l >= params.targets.size()) throw std::out_of_range("death_rate: no such target");
    const double log_b = log_birth_rate(params.lambda, params.lambda_c, state.cache().terms(l).eta_sum);
    if (state.log_prior() > kNegInf) {
        // Removing a target from an admissible configuration keeps it admissible,
        // so only the lambda and extent-density factors of the prior change.
        const double prior_delta =
            -std::log(params.lambda) - log_extent_prior_density(params.targets[l].extent, state.prior().extent_prior);
        return {log_b + state.cache().removal_delta(l) + prior_delta, false};
    }
    ModelParams without = params;
    without.targets.erase(without.targets.begin() + static_cast<std::ptrdiff_t>(l));
    if (log_prior(without, state.prior()) > kNegInf) return {kInf, true};
    throw std::domain_error("death_rate: configuration has zero posterior mass with and without the target");
}

std::vector<double> log_death_rates(const ChainState& state) {
    std::vector<double> out(state.target_count());
    for (std::size_t l = 0; l < out.size(); ++l) out[l] = death_rate(state, l).log_rate;
    return out;
}

// ---- Birth grid ----

double BirthProposalGrid::ball_volume() const { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

std::vector<double> BirthProposalGrid::active_weights(const std::vector<TargetState>& base) const {
    std::vector<double> w = center_weights;
    const double r2 = exclusion_radius * exclusion_radius;
    for (std::size_t n = 0; n < centers.size(); ++n) {
        for (const auto& t : base) {
            if ((centers[n] - t.center).squaredNorm() < r2) {
                w[n] = 0.0;
                break;
            }
        }
    }
    return w;
}

namespace {

double grid_rate(const BirthProposalGrid& grid, double weight_sum) {
    return weight_sum * grid.ball_volume() * grid.extent_volume /
           static_cast<double>(std::max<std::size_t>(grid.extents.size(), 1));
}

}  // namespace

double BirthProposalGrid::total_rate(const std::vector<TargetState>& base) const {
    const std::vector<double> w = active_weights(base);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0) || uniform_weight >= 1.0) return floor_rate;
    // Scaled so that B times the grid part of the density matches b near
    // the grid centers, where acceptable births are found.
    return grid_rate(*this, total) / (1.0 - uniform_weight);
}

double BirthProposalGrid::log_density(const TargetState& candidate, const std::vector<TargetState>& base) const {
    const double log_extent = log_extent_prior_density(candidate.extent, extent_prior);
    if (log_extent == kNegInf || !domain.contains(candidate.center)) return kNegInf;
    const std::vector<double> w = active_weights(base);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const bool grid_empty = !(total > 0.0);
    const double w_uniform = grid_empty ? 1.0 : uniform_weight;
    const double log_uniform = std::log(w_uniform) - std::log(domain.volume());
    if (grid_empty || uniform_weight >= 1.0) return log_uniform + log_extent;

    const double r2 = radius * radius;
    double near = 0.0;
    for (std::size_t n = 0; n < centers.size(); ++n) {
        if (w[n] > 0.0 && (candidate.center - centers[n]).squaredNorm() <= r2) near += w[n];
    }
    if (!(near > 0.0)) return log_uniform + log_extent;
    const double log_grid = std::log1p(-uniform_weight) - std::log(ball_volume()) + std::log(near) - std::log(total);
    return log_add_exp(log_uniform, log_grid) + log_extent;
}

BirthProposalGrid build_birth_grid(Rng& rng, const ModelParams& params, const Observation& obs,
                                   const FlatMeasurements& flat, const ChainConfig& config, const PriorModel& prior) {
    const ExtentPrior& ep = prior.extent_prior;
    BirthProposalGrid grid;
    grid.extent_volume = std::pow(ep.diag_high - ep.diag_low, 3) * std::pow(ep.offdiag_high - ep.offdiag_low, 3);
    if (!(grid.extent_volume > 0.0)) {
        throw std::invalid_argument("build_birth_grid: extent prior box must have positive volume");
    }
    grid.radius = config.birth_radius;
    grid.uniform_weight = config.birth_uniform_weight;
    grid.exclusion_radius = prior.hardcore_radius;
    grid.floor_rate = params.lambda * prior.domain.volume() * grid.extent_volume;
    grid.domain = prior.domain;
    grid.extent_prior = ep;

    const std::size_t m_total = flat.size();
    if (m_total > 0) {
        const double retention = std::min(1.0, static_cast<double>(config.birth_centers) / static_cast<double>(m_total));
        for (std::size_t m = 0; m < m_total; ++m) {
            if (retention >= 1.0 || uniform01(rng) < retention) grid.centers.push_back(flat.points[m]);
        }
    } else {
        for (std::size_t n = 0; n < config.birth_centers; ++n) grid.centers.push_back(uniform_in_domain(rng, prior.domain));
    }
    for (std::size_t j = 0; j < config.birth_extents; ++j) grid.extents.push_back(sample_extent_prior(rng, ep));

    const std::size_t n_ext = grid.extents.size();
    std::vector<Eigen::Matrix3d> extent_covs(n_ext);
    std::vector<double> extent_dets(n_ext);
    for (std::size_t j = 0; j < n_ext; ++j) {
        extent_covs[j] = extent_to_covariance(grid.extents[j]);
        extent_dets[j] = grid.extents[j].determinant();
    }

    const std::size_t k_count = obs.sensor_state_count();
    std::vector<Eigen::Matrix3d> noise(k_count);
    std::vector<double> detect(k_count), resolve(k_count);
    grid.rates.assign(grid.centers.size() * n_ext, 0.0);
    grid.center_weights.assign(grid.centers.size(), 0.0);
    for (std::size_t n = 0; n < grid.centers.size(); ++n) {
        const Eigen::Vector3d& c = grid.centers[n];
        for (std::size_t k = 0; k < k_count; ++k) {
            noise[k] = noise_covariance(obs.sensors[k], c);
            detect[k] = detection_probability(obs.sensors[k], c);
            resolve[k] = resolution(obs.sensors[k], c);
        }
        for (std::size_t j = 0; j < n_ext; ++j) {
            double total = 0.0;
            for (const auto& block : flat.blocks) {
                if (block.begin == block.end) continue;
                const std::size_t k = block.sensor_index;
                const double rate = detect[k] * std::max(1.0, resolve[k] * extent_dets[j]);
                const detail::KernelFactor kernel(extent_covs[j] + noise[k], rate);
                for (std::size_t m = block.begin; m < block.end; ++m) total += kernel(flat.points[m] - c);
            }
            const double b = params.lambda * (1.0 + total / params.lambda_c);
            grid.rates[n * n_ext + j] = b;
            grid.center_weights[n] += b;
        }
    }
    return grid;
}

BirthDraw propose_birth(Rng& rng, const BirthProposalGrid& grid, const std::vector<TargetState>& base) {
    BirthDraw draw;
    const std::vector<double> w = grid.active_weights(base);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0) || uniform01(rng) < grid.uniform_weight) {
        draw.candidate.center = uniform_in_domain(rng, grid.domain);
        draw.node = grid.centers.size();
    } else {
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        draw.node = pick(rng);
        draw.candidate.center = grid.centers[draw.node] + uniform_in_ball(rng, grid.radius);
    }
    draw.candidate.extent = sample_extent_prior(rng, grid.extent_prior);
    draw.log_density = grid.log_density(draw.candidate, base);
    return draw;
}

void GridBirthProposal::refresh(Rng& rng, const ChainState& state) {
    grid_ = build_birth_grid(rng, state.params(), state.observation(), state.cache().measurements(), config_,
                             state.prior());
}

double GridBirthProposal::log_total_rate(const std::vector<TargetState>& base) const {
    return std::log(grid_.total_rate(base));
}

TargetState GridBirthProposal::sample(Rng& rng, const std::vector<TargetState>& base) const {
    return propose_birth(rng, grid_, base).candidate;
}

double GridBirthProposal::log_density(const TargetState& candidate, const std::vector<TargetState>& base) const {
    return grid_.log_density(candidate, base);
}

// ---- Moves ----

Eigen::Matrix3d center_move_covariance(const Observation& obs, const TargetState& target, double scale) {
    if (obs.sensors.empty()) return scale * Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d extent_cov = extent_to_covariance(target.extent);
    Eigen::Matrix3d information = Eigen::Matrix3d::Zero();
    for (const auto& sensor : obs.sensors) {
        information += (extent_cov + noise_covariance(sensor, target.center)).inverse();
    }
    Eigen::Matrix3d cov = scale * information.inverse();
    return 0.5 * (cov + cov.transpose());
}

MoveDraw GaussianCenterMove::propose(Rng& rng, const ChainState& state, std::size_t l) const {
    const TargetState& current = state.params().targets[l];
    const Eigen::LLT<Eigen::Matrix3d> forward(center_move_covariance(state.observation(), current, scale()));
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Vector3d n(normal(rng), normal(rng), normal(rng));

    MoveDraw draw;
    draw.candidate = current;
    draw.candidate.center = current.center + Eigen::Matrix3d(forward.matrixL()) * n;
    const Eigen::LLT<Eigen::Matrix3d> reverse(center_move_covariance(state.observation(), draw.candidate, scale()));
    const Eigen::Vector3d step = draw.candidate.center - current.center;
    draw.log_forward = log_kernel_eval<double>(step, forward);
    draw.log_reverse = log_kernel_eval<double>(-step, reverse);
    return draw;
}

double GaussianExtentMove::log_density(const Vector6<double>& to, const Vector6<double>& from, double scale) {
    double out = 0.0;
    for (int j = 0; j < 6; ++j) {
        const double sd = scale * std::max(std::abs(from(j)), 1e-12);
        const double z = (to(j) - from(j)) / sd;
        out += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return out;
}

MoveDraw GaussianExtentMove::propose(Rng& rng, const ChainState& state, std::size_t l) const {
    const TargetState& current = state.params().targets[l];
    std::normal_distribution<double> normal(0.0, 1.0);
    MoveDraw draw;
    draw.candidate = current;
    for (int j = 0; j < 6; ++j) {
        draw.candidate.extent.e(j) += scale() * std::max(std::abs(current.extent.e(j)), 1e-12) * normal(rng);
    }
    draw.log_forward = log_density(draw.candidate.extent.e, current.extent.e, scale());
    draw.log_reverse = log_density(current.extent.e, draw.candidate.extent.e, scale());
    return draw;
}

std::string_view to_string(ProposalKind kind) {
    switch (kind) {
        case ProposalKind::birth: return "birth";
        case ProposalKind::death: return "death";
        case ProposalKind::move_center: return "move_center";
        case ProposalKind::move_extent: return "move_extent";
        case ProposalKind::none: break;
    }
    return "none";
}

// ---- Transitions ----

double TransitionTerms::log_acceptance() const {
    const double r = log_target_ratio + log_reverse - log_forward;
    if (std::isnan(r)) return kNegInf;
    return std::min(0.0, r);
}

namespace {

/// Appends `candidate` and fills the ratio; the state keeps the candidate
/// unless the prior rules it out. `log_norm` is log(B + D) of the current state.
TransitionTerms apply_birth(ChainState& state, const BirthProposal& proposal, const TargetState& candidate,
                            double log_b_total, double log_norm, bool& applied) {
    TransitionTerms t;
    t.log_forward = (log_b_total - log_norm) + proposal.log_density(candidate, state.params().targets);
    applied = false;
    if (!admissible(state, candidate, std::numeric_limits<std::size_t>::max())) {
        t.log_target_ratio = kNegInf;
        return t;
    }
    const double before = state.log_posterior();
    state.push_back(candidate, state.cache().evaluate(candidate));
    applied = true;
    t.log_target_ratio = state.log_posterior() - before;
    const std::vector<double> after_rates = log_death_rates(state);
    const double log_b_after = proposal.log_total_rate(state.params().targets);
    t.log_reverse = after_rates.back() - log_add_exp(log_b_after, log_sum_exp(after_rates));
    return t;
}

TransitionTerms apply_death(ChainState& state, const BirthProposal& proposal, std::size_t l,
                            const std::vector<double>& rates, double log_norm, TargetState& removed,
                            TargetTerms& removed_terms) {
    TransitionTerms t;
    t.log_forward = rates[l] - log_norm;
    const double before = state.log_posterior();
    state.erase(l, &removed, &removed_terms);
    t.log_target_ratio = state.log_posterior() - before;
    const auto& base = state.params().targets;
    const double log_b_after = proposal.log_total_rate(base);
    const double log_d_after = log_sum_exp(log_death_rates(state));
    t.log_reverse = (log_b_after - log_add_exp(log_b_after, log_d_after)) + proposal.log_density(removed, base);
    return t;
}

}  // namespace

TransitionTerms birth_transition(ChainState& state, const BirthProposal& proposal, const TargetState& candidate) {
    const double log_b_total = proposal.log_total_rate(state.params().targets);
    const double log_norm = log_add_exp(log_b_total, log_sum_exp(log_death_rates(state)));
    bool applied = false;
    TransitionTerms t = apply_birth(state, proposal, candidate, log_b_total, log_norm, applied);
    if (applied) state.erase(state.target_count() - 1);
    return t;
}

TransitionTerms death_transition(ChainState& state, const BirthProposal& proposal, std::size_t l) {
    const double log_b_total = proposal.log_total_rate(state.params().targets);
    const std::vector<double> rates = log_death_rates(state);
    const double log_norm = log_add_exp(log_b_total, log_sum_exp(rates));
    TargetState removed;
    TargetTerms removed_terms;
    TransitionTerms t = apply_death(state, proposal, l, rates, log_norm, removed, removed_terms);
    state.insert(l, removed, std::move(removed_terms));
    return t;
}

TransitionTerms move_transition(const ChainState& state, std::size_t l, const TargetState& candidate,
                                const TargetTerms& terms, double log_forward, double log_reverse) {
    TransitionTerms t;
    t.log_forward = log_forward;
    t.log_reverse = log_reverse;
    if (!admissible(state, candidate, l)) {
        t.log_target_ratio = kNegInf;
        return t;
    }
    const ExtentPrior& ep = state.prior().extent_prior;
    t.log_target_ratio = state.cache().replacement_delta(l, terms) + log_extent_prior_density(candidate.extent, ep) -
                         log_extent_prior_density(state.params().targets[l].extent, ep);
    return t;
}

StepOutcome step_birth_death(Rng& rng, ChainState& state, BirthProposal& proposal) {
    proposal.refresh(rng, state);
    const double log_b_total = proposal.log_total_rate(state.params().targets);
    const std::vector<double> rates = log_death_rates(state);
    const double log_norm = log_add_exp(log_b_total, log_sum_exp(rates));
    const double log_pb = log_b_total - log_norm;

    StepOutcome out;
    if (state.target_count() == 0 || std::log(uniform01(rng)) < log_pb) {
        out.kind = ProposalKind::birth;
        const TargetState candidate = proposal.sample(rng, state.params().targets);
        bool applied = false;
        const TransitionTerms t = apply_birth(state, proposal, candidate, log_b_total, log_norm, applied);
        out.accepted = applied && std::log(uniform01(rng)) < t.log_acceptance();
        if (applied && !out.accepted) state.erase(state.target_count() - 1);
        return out;
    }

    out.kind = ProposalKind::death;
    const double hi = *std::max_element(rates.begin(), rates.end());
    std::vector<double> weights(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) weights[i] = std::exp(rates[i] - hi);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t l = pick(rng);

    TargetState removed;
    TargetTerms removed_terms;
    const TransitionTerms t = apply_death(state, proposal, l, rates, log_norm, removed, removed_terms);
    out.accepted = std::log(uniform01(rng)) < t.log_acceptance();
    if (!out.accepted) state.insert(l, removed, std::move(removed_terms));
    return out;
}

StepOutcome step_move(Rng& rng, ChainState& state, const MoveProposal& proposal, std::size_t l, ProposalKind kind) {
    StepOutcome out;
    out.kind = kind;
    const MoveDraw draw = proposal.propose(rng, state, l);
    if (!admissible(state, draw.candidate, l)) return out;
    TargetTerms terms = state.cache().evaluate(draw.candidate);
    const TransitionTerms t = move_transition(state, l, draw.candidate, terms, draw.log_forward, draw.log_reverse);
    out.accepted = std::log(uniform01(rng)) < t.log_acceptance();
    if (out.accepted) state.replace(l, draw.candidate, std::move(terms));
    return out;
}

// ---- Clutter labels and intensities ----

ClutterLabels sample_clutter_labels(Rng& rng, const ContributionCache& cache) {
    ClutterLabels out;
    out.labels.resize(cache.measurement_count());
    for (std::size_t m = 0; m < out.labels.size(); ++m) {
        const double p_clutter = cache.lambda_c() / cache.total_intensity(m);
        const bool clutter = uniform01(rng) < p_clutter;
        out.labels[m] = clutter ? 0 : 1;
        out.clutter_count += clutter ? 1 : 0;
    }
    return out;
}

Intensities update_intensities(const Intensities& current, std::size_t clutter_count, std::size_t measurement_count,
                               std::size_t target_count, double total_rate, std::size_t sensor_states, double volume) {
    Intensities next = current;
    const double k = static_cast<double>(std::max<std::size_t>(sensor_states, 1));
    next.lambda_c = std::max(static_cast<double>(clutter_count), 1.0) / (k * volume);
    if (target_count > 0 && clutter_count < measurement_count && total_rate > 0.0) {
        next.lambda = static_cast<double>(measurement_count - clutter_count) * static_cast<double>(target_count) /
                      (volume * total_rate);
    }
    return next;
}

double adapt_scale(double scale, double acceptance_rate, const ChainConfig& config) {
    if (acceptance_rate > config.adapt_high) return scale * config.adapt_factor;
    if (acceptance_rate < config.adapt_low) return scale / config.adapt_factor;
    return scale;
}

double ScaleAdapter::record(bool accepted, double scale) {
    ++proposed_;
    ++proposed_total_;
    if (accepted) {
        ++accepted_;
        ++accepted_total_;
    }
    if (proposed_ < config_.adapt_window) return scale;
    const double rate = static_cast<double>(accepted_) / static_cast<double>(proposed_);
    proposed_ = 0;
    accepted_ = 0;
    return adapt_scale(scale, rate, config_);
}

// ---- Sampler ----

JumpSampler::JumpSampler(const Observation& obs, const PriorModel& prior, const ChainConfig& config, ModelParams init)
    : config_(config), state_(obs, prior, std::move(init)),
      birth_(std::make_unique<GridBirthProposal>(config)),
      center_(std::make_unique<GaussianCenterMove>(config.initial_center_scale)),
      extent_(std::make_unique<GaussianExtentMove>(config.initial_extent_scale)), center_adapt_(config),
      extent_adapt_(config) {
    config_.validate();
}

StepOutcome JumpSampler::birth_death(Rng& rng) { return step_birth_death(rng, state_, *birth_); }

StepOutcome JumpSampler::iterate(Rng& rng, bool burn_in) {
    StepOutcome out;
    const std::size_t count = state_.target_count();
    // The kind of step is drawn independently of L so that the empty set
    // keeps its balance with the singletons.
    const bool move = !burn_in || uniform01(rng) < config_.move_prob;
    if (move && count > 0) {
        const std::size_t l = std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
        if (uniform01(rng) < config_.extent_move_prob) {
            out = step_move(rng, state_, *extent_, l, ProposalKind::move_extent);
            if (burn_in) extent_->set_scale(extent_adapt_.record(out.accepted, extent_->scale()));
        } else {
            out = step_move(rng, state_, *center_, l, ProposalKind::move_center);
            if (burn_in) center_->set_scale(center_adapt_.record(out.accepted, center_->scale()));
        }
    } else if (!move) {
        out = birth_death(rng);
    }
    if (config_.update_intensities) update_intensity_parameters(rng);
    return out;
}

void JumpSampler::update_intensity_parameters(Rng& rng) {
    const ClutterLabels labels = sample_clutter_labels(rng, state_.cache());
    const ModelParams& p = state_.params();
    const Observation& obs = state_.observation();
    const Intensities next =
        update_intensities({p.lambda, p.lambda_c}, labels.clutter_count, state_.cache().measurement_count(),
                           p.targets.size(), state_.cache().total_rate(), obs.sensor_state_count(), obs.domain.volume());
    state_.set_intensities(next.lambda, next.lambda_c);
}

std::vector<TargetState> repair_warm_start(const std::vector<TargetState>& targets, const PriorModel& prior) {
    std::vector<TargetState> kept;
    for (const auto& t : targets) {
        if (kept.size() >= prior.max_targets) break;
        if (!prior.domain.contains(t.center) || !in_extent_prior_support(t.extent, prior.extent_prior)) continue;
        if (!hardcore_clear(kept, t.center, prior.hardcore_radius)) continue;
        kept.push_back(t);
    }
    return kept;
}

ChainResult run_chain(Rng& rng, const Observation& obs, const PriorModel& prior, const ChainConfig& config,
                      const ModelParams& init) {
    config.validate();
    ModelParams start = init;
    start.targets = repair_warm_start(init.targets, prior);
    JumpSampler sampler(obs, prior, config, start);

    ChainResult result;
    std::size_t births = 0, births_ok = 0, deaths = 0, deaths_ok = 0;
    std::size_t iteration = 0;
    auto record = [&](const StepOutcome& outcome) {
        const ModelParams& p = sampler.state().params();
        result.trace.push_back({iteration, sampler.state().log_posterior(), p.targets.size(), p.lambda, p.lambda_c,
                                outcome.kind, outcome.accepted});
        if (outcome.kind == ProposalKind::birth) {
            ++births;
            births_ok += outcome.accepted ? 1 : 0;
        } else if (outcome.kind == ProposalKind::death) {
            ++deaths;
            deaths_ok += outcome.accepted ? 1 : 0;
        }
    };

    double best = sampler.state().log_posterior();
    std::size_t stale = 0;
    while (true) {
        const bool initial_birth = iteration == 0 && sampler.state().target_count() == 0;
        const StepOutcome outcome = initial_birth ? sampler.birth_death(rng) : sampler.iterate(rng, true);
        record(outcome);
        ++iteration;
        const double lp = sampler.state().log_posterior();
        if (lp > best) {
            best = lp;
            stale = 0;
        } else {
            ++stale;
        }
        if (stale >= config.patience || iteration >= config.max_burnin) break;
    }
    result.burnin_iterations = iteration;

    const std::size_t count = sampler.state().target_count();
    std::vector<Eigen::Vector3d> center_sum(count, Eigen::Vector3d::Zero());
    std::vector<Vector6<double>> extent_sum(count, Vector6<double>::Zero());
    for (std::size_t i = 0; i < config.averaging; ++i) {
        const StepOutcome outcome = sampler.iterate(rng, false);
        record(outcome);
        ++iteration;
        const auto& targets = sampler.state().params().targets;
        for (std::size_t l = 0; l < count; ++l) {
            center_sum[l] += targets[l].center;
            extent_sum[l] += targets[l].extent.e;
        }
    }
    result.total_iterations = iteration;

    const double n = static_cast<double>(config.averaging);
    for (std::size_t l = 0; l < count; ++l) {
        TargetState t;
        t.center = center_sum[l] / n;
        t.extent = Extent(extent_sum[l] / n);
        result.estimate.push_back(t);
    }
    result.final_params = sampler.state().params();

    auto ratio = [](std::size_t ok, std::size_t total) {
        return total == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(total);
    };
    result.center_acceptance =
        ratio(sampler.center_adapter().accepted_total(), sampler.center_adapter().proposed_total());
    result.extent_acceptance =
        ratio(sampler.extent_adapter().accepted_total(), sampler.extent_adapter().proposed_total());
    result.birth_acceptance = ratio(births_ok, births);
    result.death_acceptance = ratio(deaths_ok, deaths);
    return result;
}

}  // namespace gsncp
