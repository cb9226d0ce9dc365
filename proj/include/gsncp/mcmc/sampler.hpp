#pragma once

#include "gsncp/core/types.hpp"
#include "gsncp/mcmc/chain_config.hpp"
#include "gsncp/posterior/contribution_cache.hpp"
#include "gsncp/posterior/posterior.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace gsncp {

/// Current chain configuration with its likelihood cache.
///
/// `params.targets` and the cache rows are kept in the same order; every
/// edit goes through the methods below so the two never drift apart.
class ChainState {
public:
    ChainState(const Observation& obs, const PriorModel& prior, ModelParams params);

    [[nodiscard]] const ModelParams& params() const { return params_; }
    [[nodiscard]] const ContributionCache& cache() const { return cache_; }
    [[nodiscard]] const Observation& observation() const { return *obs_; }
    [[nodiscard]] const PriorModel& prior() const { return *prior_; }
    [[nodiscard]] std::size_t target_count() const { return params_.targets.size(); }
    [[nodiscard]] double log_prior() const { return log_prior_; }
    [[nodiscard]] double log_likelihood() const { return cache_.log_likelihood(); }
    [[nodiscard]] double log_posterior() const { return log_prior_ + cache_.log_likelihood(); }

    void insert(std::size_t pos, const TargetState& target, TargetTerms terms);
    void push_back(const TargetState& target, TargetTerms terms) { insert(target_count(), target, std::move(terms)); }
    void erase(std::size_t l, TargetState* removed = nullptr, TargetTerms* removed_terms = nullptr);
    void replace(std::size_t l, const TargetState& target, TargetTerms terms);
    void set_intensities(double lambda, double lambda_c);

private:
    const Observation* obs_;
    const PriorModel* prior_;
    ModelParams params_;
    ContributionCache cache_;
    double log_prior_;
};

/// b(theta, Xi) = lambda (1 + sum_k sum_m eta_k(p_km | Xi) / lambda_c).
double birth_rate(const ModelParams& params, const Observation& obs, const FlatMeasurements& flat,
                  const TargetState& candidate);

/// Log birth rate from a precomputed contribution total.
double log_birth_rate(double lambda, double lambda_c, double contribution_sum);

struct DeathRate {
    double log_rate = 0.0;
    /// Set when the configuration with the target has zero posterior mass
    /// while the one without it does not; removal is then always preferred.
    bool infinite = false;
};

/// d(theta, C_l) = b(theta \ C_l, C_l) Pi(theta \ C_l | Psi) / Pi(theta | Psi).
DeathRate death_rate(const ChainState& state, std::size_t l);

/// Death rates of every target in `state`, in log domain.
std::vector<double> log_death_rates(const ChainState& state);

/// Birth proposal built from the data.
///
/// Centers are thinned measurements; each center n is weighted by
/// sum_j b(c_n, e_j) over a set of prior extent draws e_j. Centers closer
/// than the hard-core radius to a target of the base configuration are
/// inactive, since births there have zero prior mass. A candidate center is
/// uniform in the radius ball around an active weighted center (or, with a
/// small probability, uniform on D); its extent is a fresh prior draw.
struct BirthProposalGrid {
    std::vector<Eigen::Vector3d> centers;
    std::vector<Extent> extents;
    /// Birth rate of node (n, j) at index n * extents.size() + j.
    std::vector<double> rates;
    /// Per-center rate sums.
    std::vector<double> center_weights;
    double radius = 0.2;
    double uniform_weight = 0.05;
    double exclusion_radius = 0.0;
    /// Lebesgue volume of the extent prior box.
    double extent_volume = 1.0;
    /// lambda |D| times the extent volume: the integral of b's lower bound.
    double floor_rate = 0.0;
    Domain domain;
    ExtentPrior extent_prior;

    [[nodiscard]] std::size_t node_count() const { return rates.size(); }
    [[nodiscard]] double ball_volume() const;
    /// Weight per center, zero for centers blocked by `base`.
    [[nodiscard]] std::vector<double> active_weights(const std::vector<TargetState>& base) const;
    /// B(base): the Monte Carlo integral of b over the active center balls
    /// and the extent box, divided by the grid share 1 - uniform_weight;
    /// floor_rate when no center is active.
    [[nodiscard]] double total_rate(const std::vector<TargetState>& base) const;
    /// Log proposal density (Lebesgue in center and extent parameters) of a
    /// birth from `base`.
    [[nodiscard]] double log_density(const TargetState& candidate, const std::vector<TargetState>& base) const;
};

BirthProposalGrid build_birth_grid(Rng& rng, const ModelParams& params, const Observation& obs,
                                   const FlatMeasurements& flat, const ChainConfig& config, const PriorModel& prior);

struct BirthDraw {
    TargetState candidate;
    double log_density = 0.0;
    /// Grid center that generated the candidate; centers.size() for the uniform component.
    std::size_t node = 0;
};

BirthDraw propose_birth(Rng& rng, const BirthProposalGrid& grid, const std::vector<TargetState>& base);

/// Source of birth candidates.
///
/// `refresh` may use the data and the intensities but not the target set.
/// The remaining queries take the configuration the birth starts from, so a
/// death move can evaluate its reverse birth against the reduced set.
class BirthProposal {
public:
    virtual ~BirthProposal() = default;
    virtual void refresh(Rng& rng, const ChainState& state) = 0;
    [[nodiscard]] virtual double log_total_rate(const std::vector<TargetState>& base) const = 0;
    [[nodiscard]] virtual TargetState sample(Rng& rng, const std::vector<TargetState>& base) const = 0;
    [[nodiscard]] virtual double log_density(const TargetState& candidate,
                                             const std::vector<TargetState>& base) const = 0;
};

class GridBirthProposal final : public BirthProposal {
public:
    explicit GridBirthProposal(ChainConfig config) : config_(config) {}
    void refresh(Rng& rng, const ChainState& state) override;
    [[nodiscard]] double log_total_rate(const std::vector<TargetState>& base) const override;
    [[nodiscard]] TargetState sample(Rng& rng, const std::vector<TargetState>& base) const override;
    [[nodiscard]] double log_density(const TargetState& candidate,
                                     const std::vector<TargetState>& base) const override;
    [[nodiscard]] const BirthProposalGrid& grid() const { return grid_; }

private:
    ChainConfig config_;
    BirthProposalGrid grid_;
};

struct MoveDraw {
    TargetState candidate;
    double log_forward = 0.0;
    double log_reverse = 0.0;
};

/// Single-target perturbation with a tunable scale.
class MoveProposal {
public:
    explicit MoveProposal(double scale) : scale_(scale) {}
    virtual ~MoveProposal() = default;
    [[nodiscard]] virtual MoveDraw propose(Rng& rng, const ChainState& state, std::size_t l) const = 0;
    [[nodiscard]] double scale() const { return scale_; }
    void set_scale(double scale) { scale_ = scale; }

private:
    double scale_;
};

/// theta * (sum_k Sigma~_k(C)^-1)^-1.
Eigen::Matrix3d center_move_covariance(const Observation& obs, const TargetState& target, double scale);

/// Gaussian center move with covariance center_move_covariance(C_l).
class GaussianCenterMove final : public MoveProposal {
public:
    using MoveProposal::MoveProposal;
    [[nodiscard]] MoveDraw propose(Rng& rng, const ChainState& state, std::size_t l) const override;
};

/// Gaussian extent move with covariance scale^2 diag(e_l^2).
class GaussianExtentMove final : public MoveProposal {
public:
    using MoveProposal::MoveProposal;
    [[nodiscard]] MoveDraw propose(Rng& rng, const ChainState& state, std::size_t l) const override;
    [[nodiscard]] static double log_density(const Vector6<double>& to, const Vector6<double>& from, double scale);
};

enum class ProposalKind : std::uint8_t { none, birth, death, move_center, move_extent };

std::string_view to_string(ProposalKind kind);

/// Pieces of one Metropolis-Hastings ratio, all in log domain.
struct TransitionTerms {
    double log_target_ratio = 0.0;  // log Pi(theta*) - log Pi(theta)
    double log_forward = 0.0;       // log q(theta -> theta*)
    double log_reverse = 0.0;       // log q(theta* -> theta)
    [[nodiscard]] double log_acceptance() const;
};

/// Birth of `candidate` from `state` under a refreshed proposal. The state is
/// restored before returning.
TransitionTerms birth_transition(ChainState& state, const BirthProposal& proposal, const TargetState& candidate);

/// Death of target l from `state` under a refreshed proposal. The state is
/// restored before returning.
TransitionTerms death_transition(ChainState& state, const BirthProposal& proposal, std::size_t l);

/// Move of target l to `candidate`; proposal densities supplied by the caller.
TransitionTerms move_transition(const ChainState& state, std::size_t l, const TargetState& candidate,
                                const TargetTerms& terms, double log_forward, double log_reverse);

struct StepOutcome {
    ProposalKind kind = ProposalKind::none;
    bool accepted = false;
};

/// Birth with probability B / (B + D), otherwise death of a target drawn by
/// death-rate weight; empty configurations always propose a birth.
StepOutcome step_birth_death(Rng& rng, ChainState& state, BirthProposal& proposal);

/// Perturbs target l with `proposal`; the caller labels the kind.
StepOutcome step_move(Rng& rng, ChainState& state, const MoveProposal& proposal, std::size_t l, ProposalKind kind);

/// Per-measurement labels: 0 clutter, 1 target-originated.
struct ClutterLabels {
    std::vector<std::uint8_t> labels;
    std::size_t clutter_count = 0;
};

/// Independent Bernoulli draws with P(clutter) = lambda_c / Z(p).
ClutterLabels sample_clutter_labels(Rng& rng, const ContributionCache& cache);

struct Intensities {
    double lambda = 0.0;
    double lambda_c = 0.0;
};

/// lambda = (|Psi| - M_c) L / (|D| sum_l sum_k rate_k(C_l)) and
/// lambda_c = M_c / (K |D|).
///
/// lambda keeps `current.lambda` when L = 0 or every measurement is clutter;
/// lambda_c is floored at 1 / (K |D|).
Intensities update_intensities(const Intensities& current, std::size_t clutter_count, std::size_t measurement_count,
                               std::size_t target_count, double total_rate, std::size_t sensor_states, double volume);

/// Multiplies by the adaptation factor above the acceptance band, divides
/// below it, and leaves the scale unchanged inside.
double adapt_scale(double scale, double acceptance_rate, const ChainConfig& config);

/// Windowed acceptance bookkeeping for one move kind.
class ScaleAdapter {
public:
    explicit ScaleAdapter(const ChainConfig& config) : config_(config) {}
    /// Returns the (possibly updated) scale after recording one proposal.
    double record(bool accepted, double scale);
    [[nodiscard]] std::size_t proposed_total() const { return proposed_total_; }
    [[nodiscard]] std::size_t accepted_total() const { return accepted_total_; }

private:
    ChainConfig config_;
    std::size_t proposed_ = 0;
    std::size_t accepted_ = 0;
    std::size_t proposed_total_ = 0;
    std::size_t accepted_total_ = 0;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double log_posterior = 0.0;
    std::size_t targets = 0;
    double lambda = 0.0;
    double lambda_c = 0.0;
    ProposalKind kind = ProposalKind::none;
    bool accepted = false;
};

/// Owns one chain and its proposal kernels. Kernels can be swapped, e.g. for
/// discretized state spaces.
class JumpSampler {
public:
    JumpSampler(const Observation& obs, const PriorModel& prior, const ChainConfig& config, ModelParams init);

    void set_birth_proposal(std::unique_ptr<BirthProposal> proposal) { birth_ = std::move(proposal); }
    void set_center_move(std::unique_ptr<MoveProposal> proposal) { center_ = std::move(proposal); }
    void set_extent_move(std::unique_ptr<MoveProposal> proposal) { extent_ = std::move(proposal); }

    /// One sweep: driving-process update, then clutter labels and intensities.
    /// With `burn_in` false only moves are proposed and scales stay frozen.
    StepOutcome iterate(Rng& rng, bool burn_in);
    /// Forces a birth/death step regardless of the move probability.
    StepOutcome birth_death(Rng& rng);

    [[nodiscard]] const ChainState& state() const { return state_; }
    [[nodiscard]] ChainState& state() { return state_; }
    [[nodiscard]] double center_scale() const { return center_->scale(); }
    [[nodiscard]] double extent_scale() const { return extent_->scale(); }
    [[nodiscard]] const ScaleAdapter& center_adapter() const { return center_adapt_; }
    [[nodiscard]] const ScaleAdapter& extent_adapter() const { return extent_adapt_; }

private:
    void update_intensity_parameters(Rng& rng);

    ChainConfig config_;
    ChainState state_;
    std::unique_ptr<BirthProposal> birth_;
    std::unique_ptr<MoveProposal> center_;
    std::unique_ptr<MoveProposal> extent_;
    ScaleAdapter center_adapt_;
    ScaleAdapter extent_adapt_;
};

struct ChainResult {
    /// Post-burn-in componentwise average of (c_l, e_l).
    std::vector<TargetState> estimate;
    ModelParams final_params;
    std::size_t burnin_iterations = 0;
    std::size_t total_iterations = 0;
    std::vector<IterationRecord> trace;
    double center_acceptance = 0.0;
    double extent_acceptance = 0.0;
    double birth_acceptance = 0.0;
    double death_acceptance = 0.0;
};

/// Drops targets outside D, outside the extent prior, or within R of an
/// earlier kept target.
std::vector<TargetState> repair_warm_start(const std::vector<TargetState>& targets, const PriorModel& prior);

/// Runs burn-in with patience-based early stopping, then `averaging` move-only
/// iterations whose samples are averaged into the estimate. An empty
/// `init.targets` starts from a birth step.
ChainResult run_chain(Rng& rng, const Observation& obs, const PriorModel& prior, const ChainConfig& config,
                      const ModelParams& init);

}  // namespace gsncp
