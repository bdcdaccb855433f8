#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfg/types.hpp"

namespace mfg {

/// One agent's state-action record over the whole horizon (both sequences
/// have T+1 entries; the terminal action is structural and never rewarded).
struct Trajectory {
  std::vector<int> states;
  std::vector<int> actions;

  bool operator==(const Trajectory&) const = default;
};

struct DemoSet {
  std::vector<Trajectory> trajectories;
  std::string env_name;
  std::string variant;
  int horizon = 0;
  std::uint64_t seed = 0;
  int agents_per_play = 0;
  int plays = 0;

  int size() const { return static_cast<int>(trajectories.size()); }
  bool operator==(const DemoSet&) const = default;
};

/// Empirical quantities estimated from a DemoSet; the policy estimate feeds
/// the population-level baseline only.
struct EmpiricalEstimates {
  MeanFieldFlow mean_field_flow;
  TimeVaryingPolicy policy;
};

/// plays x agents independent trajectories of the expert: s0 ~ mu0,
/// a_t ~ pi_t(.|s_t), s_{t+1} ~ P(.|s_t,a_t,mu_t) with mu the given expert
/// flow (a single agent does not perturb it). Bit-reproducible from the
/// seed; agents draw from per-trajectory streams, OpenMP over trajectories.
DemoSet sample_trajectories(const MfgSpec& spec, const MeanFieldFlow& flow,
                            const TimeVaryingPolicy& policy, int plays,
                            int agents, std::uint64_t seed);

/// Plain-loop twin of sample_trajectories; must agree exactly.
DemoSet sample_trajectories_serial(const MfgSpec& spec,
                                   const MeanFieldFlow& flow,
                                   const TimeVaryingPolicy& policy, int plays,
                                   int agents, std::uint64_t seed);

/// mu_hat_t(s) = (1/M) sum_j 1{s_t^j = s}. `num_states` = 0 infers the
/// state count from the demos; pipelines pass the spec's count so states
/// the demos never reached still get (zero) entries.
MeanFieldFlow estimate_mean_field_flow(const DemoSet& demos,
                                       int num_states = 0);

/// pi_hat_t(a|s) = count(s,a at t) / count(s at t); uniform row when the
/// state was never visited at step t.
TimeVaryingPolicy estimate_empirical_policy(const DemoSet& demos,
                                            int num_actions,
                                            int num_states = 0);

EmpiricalEstimates estimate_all(const DemoSet& demos, int num_actions,
                                int num_states = 0);

/// Line-delimited JSON: metadata object first, then one {"s":[...],"a":[...]}
/// object per trajectory.
void save_demos(const DemoSet& demos, const std::string& path);
DemoSet load_demos(const std::string& path);

}  // namespace mfg
