#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/types.hpp"

namespace mfg {

struct FixedPointOptions {
  int max_iters = 500;
  double mse_tol = 1e-10;
  /// Weight kept on the previous flow: mu <- (1-damping)*mu_new + damping*mu_old.
  double damping = 0.0;
  /// If set, best responses are Boltzmann with this inverse temperature
  /// instead of greedy.
  std::optional<double> beta_soft;

  void validate() const;
};

struct MfsoOptions {
  double learning_rate = 0.05;
  int max_steps = 5000;
  double grad_tol = 1e-7;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EquilibriumResult {
  MeanFieldFlow flow;
  TimeVaryingPolicy policy;
  double expected_return = 0.0;
  /// Absent when the solve ran against a societal-reward model, which gives
  /// no individual deviation value.
  std::optional<double> exploitability;
  int iterations = 0;
  bool converged = false;
};

/// Mean squared flow change over the interior steps,
///   sum_{t=1}^{T-1} sum_s (a_t(s) - b_t(s))^2 / ((T-1)|S|),
/// the stopping statistic of the fixed-point iteration. For T = 1 the single
/// t = 1 entry is used with divisor |S|.
double flow_iteration_mse(const MeanFieldFlow& a, const MeanFieldFlow& b);

/// Nash equilibrium by best-response / propagation alternation starting
/// from the uniform policy. Non-convergence within max_iters is reported
/// through `converged`, not an exception.
EquilibriumResult solve_mfne_fixed_point(const MfgSpec& spec,
                                         const FixedPointOptions& opts = {});

/// Per-step objective of the reduced MDP: a societal reward with exact
/// gradients w.r.t. the per-step policy entries and the mean field.
class SocietalObjective {
 public:
  virtual ~SocietalObjective() = default;
  virtual double value(const MeanField& mu, const PerStepPolicy& pi) const = 0;
  /// d_pi: |S| x |A| row-major, d_mu: |S|.
  virtual void gradients(const MeanField& mu, const PerStepPolicy& pi,
                         std::span<double> d_pi,
                         std::span<double> d_mu) const = 0;
  /// Fused evaluation; the default does two passes.
  virtual double value_and_gradients(const MeanField& mu,
                                     const PerStepPolicy& pi,
                                     std::span<double> d_pi,
                                     std::span<double> d_mu) const {
    gradients(mu, pi, d_pi, d_mu);
    return value(mu, pi);
  }
};

/// sum_s mu(s) sum_a pi(a|s) r(s,a,mu) for an individual reward oracle.
class GroundTruthSocietal final : public SocietalObjective {
 public:
  GroundTruthSocietal(const MfgSpec& spec, const RewardOracle& reward)
      : spec_(&spec), reward_(&reward) {}
  double value(const MeanField& mu, const PerStepPolicy& pi) const override;
  void gradients(const MeanField& mu, const PerStepPolicy& pi,
                 std::span<double> d_pi,
                 std::span<double> d_mu) const override;
  double value_and_gradients(const MeanField& mu, const PerStepPolicy& pi,
                             std::span<double> d_pi,
                             std::span<double> d_mu) const override;

 private:
  const MfgSpec* spec_;
  const RewardOracle* reward_;
};

/// Open-loop policy sequence parameterised by softmax scores,
/// shape (T+1) x |S| x |A| flat.
TimeVaryingPolicy policy_from_scores(std::span<const double> scores,
                                     int horizon, int num_states,
                                     int num_actions);

/// Objective J(scores) = sum_t gamma^t g(mu_t, pi_t) with mu = Phi(pi), and
/// its exact gradient via reverse accumulation through the MKV recursion.
std::pair<double, std::vector<double>> reduced_mdp_objective_grad(
    const MfgSpec& dynamics, const SocietalObjective& objective,
    std::span<const double> scores);

/// Forward value only; what the line search evaluates on trial points.
double reduced_mdp_objective_value(const MfgSpec& dynamics,
                                   const SocietalObjective& objective,
                                   std::span<const double> scores);

struct ReducedMdpSolution {
  std::vector<double> scores;
  TimeVaryingPolicy policy;
  MeanFieldFlow flow;
  double objective = 0.0;
  int steps = 0;
  bool converged = false;
  /// Objective after every accepted step (non-decreasing by construction).
  std::vector<double> objective_log;
};

/// Backtracking gradient ascent on the reduced MDP; scores start at zero
/// (uniform policies) unless warm-started.
ReducedMdpSolution solve_reduced_mdp(
    const MfgSpec& dynamics, const SocietalObjective& objective,
    const MfsoOptions& opts,
    const std::vector<double>* warm_start_scores = nullptr);

/// Social optimum under the spec's ground-truth reward.
EquilibriumResult solve_mfso(const MfgSpec& spec, const MfsoOptions& opts = {});

}  // namespace mfg
