#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfg/types.hpp"

namespace mfg {

/// One McKean-Vlasov step:
///   mu'(s') = sum_s mu(s) sum_a pi(a|s) P(s'|s,a,mu).
MeanField mkv_step(const MeanField& mu, const PerStepPolicy& pi,
                   const TransitionKernel& kernel);

/// Flow induced by everyone playing `policy` from the spec's mu0.
MeanFieldFlow propagate_flow(const MfgSpec& spec,
                             const TimeVaryingPolicy& policy);

/// Population-average per-step reward: sum_s mu(s) sum_a pi(a|s) r(s,a,mu).
double societal_reward(const MeanField& mu, const PerStepPolicy& pi,
                       const RewardOracle& reward);

/// Expected return of a representative agent started from mu0 and evolving
/// under (policy, kernel) while the environment follows `flow`. Computed by
/// exact dynamic programming over the agent's state-visitation distribution;
/// rewards accrue for t = 0..T-1 with the terminal step worth zero.
double expected_return(const MfgSpec& spec, const MeanFieldFlow& flow,
                       const TimeVaryingPolicy& policy,
                       const RewardOracle& reward);

/// Greedy backward induction against a fixed flow. Returns the optimal
/// action values (zero at t = T) and the best-response policy that mixes
/// uniformly over actions within `tie_tol` (relative) of each row max.
std::pair<ActionValueTable, TimeVaryingPolicy> q_backward_optimal(
    const MfgSpec& spec, const MeanFieldFlow& flow, const RewardOracle& reward,
    double tie_tol = 1e-9);

/// Soft backward induction: values back up the expectation under the
/// Boltzmann policy pi_t(a|s) = softmax_a(beta * Q(t,s,a)), computed with
/// max subtraction.
std::pair<ActionValueTable, TimeVaryingPolicy> boltzmann_backward(
    const MfgSpec& spec, const MeanFieldFlow& flow, const RewardOracle& reward,
    double beta);

/// max_pi' J(flow, pi') - J(flow, policy), the value a single deviator
/// could gain; zero (within tolerance) iff `policy` best-responds to `flow`.
double exploitability(const MfgSpec& spec, const MeanFieldFlow& flow,
                      const TimeVaryingPolicy& policy,
                      const RewardOracle& reward);

/// Empirical state distribution of `num_agents` agents simulated
/// independently under (policy, flow); entry [t] is the frequency vector at
/// step t. Each agent consumes its own seed-derived stream, so the result
/// does not depend on scheduling. OpenMP over agents.
std::vector<std::vector<double>> simulate_population(
    const MfgSpec& spec, const TimeVaryingPolicy& policy,
    const MeanFieldFlow& flow, int num_agents, std::uint64_t seed);

/// Plain-loop twin of simulate_population; must agree bit-for-bit.
std::vector<std::vector<double>> simulate_population_serial(
    const MfgSpec& spec, const TimeVaryingPolicy& policy,
    const MeanFieldFlow& flow, int num_agents, std::uint64_t seed);

/// Exact kernel rows evaluated once against every mean field of a fixed
/// flow; the lookup table behind every backward pass and sampler.
class FlowKernelCache {
 public:
  FlowKernelCache() = default;
  FlowKernelCache(const TransitionKernel& kernel, const MeanFieldFlow& flow);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  /// P(.|s,a,mu_t), length |S|.
  std::span<const double> row(int t, int s, int a) const {
    return {rows_.data() +
                ((static_cast<size_t>(t) * num_states_ + s) * num_actions_ + a) *
                    num_states_,
            static_cast<size_t>(num_states_)};
  }

 private:
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> rows_;
};

namespace detail {
/// softmax(beta * q) with max subtraction, written into `out`.
void stable_softmax(std::span<const double> q, double beta,
                    std::span<double> out);
}  // namespace detail

}  // namespace mfg
