#include "mfg/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/rng.hpp"

namespace mfg {

namespace detail {

void stable_softmax(std::span<const double> q, double beta,
                    std::span<double> out) {
  const double qmax = *std::max_element(q.begin(), q.end());
  double sum = 0.0;
  for (size_t a = 0; a < q.size(); ++a) {
    out[a] = std::exp(beta * (q[a] - qmax));
    sum += out[a];
  }
  for (size_t a = 0; a < q.size(); ++a) out[a] /= sum;
}

}  // namespace detail

MeanField mkv_step(const MeanField& mu, const PerStepPolicy& pi,
                   const TransitionKernel& kernel) {
  const int S = kernel.num_states();
  const int A = kernel.num_actions();
  if (mu.num_states() != S || pi.num_states() != S || pi.num_actions() != A) {
    throw ContractError("mkv_step: dimension mismatch");
  }
  std::vector<double> next(static_cast<size_t>(S), 0.0);
  for (int s = 0; s < S; ++s) {
    if (mu[s] == 0.0) continue;
    for (int a = 0; a < A; ++a) {
      const double w = mu[s] * pi.at(s, a);
      if (w == 0.0) continue;
      const std::vector<double> p = kernel.row(s, a, mu);
      for (int sn = 0; sn < S; ++sn) next[static_cast<size_t>(sn)] += w * p[sn];
    }
  }
  return MeanField(std::move(next));
}

MeanFieldFlow propagate_flow(const MfgSpec& spec,
                             const TimeVaryingPolicy& policy) {
  spec.validate();
  if (policy.horizon() != spec.horizon) {
    throw ContractError("propagate_flow: policy length != horizon + 1");
  }
  MeanFieldFlow flow;
  flow.fields.reserve(static_cast<size_t>(spec.horizon) + 1);
  flow.fields.push_back(spec.initial_mean_field);
  for (int t = 0; t < spec.horizon; ++t) {
    flow.fields.push_back(
        mkv_step(flow.fields.back(), policy.at(t), spec.transition));
  }
  return flow;
}

double societal_reward(const MeanField& mu, const PerStepPolicy& pi,
                       const RewardOracle& reward) {
  if (mu.num_states() != pi.num_states()) {
    throw ContractError("societal_reward: dimension mismatch");
  }
  double acc = 0.0;
  for (int s = 0; s < mu.num_states(); ++s) {
    if (mu[s] == 0.0) continue;
    double row = 0.0;
    for (int a = 0; a < pi.num_actions(); ++a) {
      if (pi.at(s, a) == 0.0) continue;
      row += pi.at(s, a) * reward.value(s, a, mu);
    }
    acc += mu[s] * row;
  }
  return acc;
}

double expected_return(const MfgSpec& spec, const MeanFieldFlow& flow,
                       const TimeVaryingPolicy& policy,
                       const RewardOracle& reward) {
  if (flow.horizon() != spec.horizon || policy.horizon() != spec.horizon) {
    throw ContractError("expected_return: flow/policy length mismatch");
  }
  const int S = spec.num_states;
  const int A = spec.num_actions;
  std::vector<double> visit = spec.initial_mean_field.probs();
  double total = 0.0;
  double disc = 1.0;
  for (int t = 0; t < spec.horizon; ++t) {
    const MeanField& mu = flow.at(t);
    const PerStepPolicy& pi = policy.at(t);
    double step = 0.0;
    std::vector<double> next(static_cast<size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      if (visit[static_cast<size_t>(s)] == 0.0) continue;
      double row = 0.0;
      for (int a = 0; a < A; ++a) {
        const double pa = pi.at(s, a);
        if (pa == 0.0) continue;
        row += pa * reward.value(s, a, mu);
        const std::vector<double> p = spec.transition.row(s, a, mu);
        const double w = visit[static_cast<size_t>(s)] * pa;
        for (int sn = 0; sn < S; ++sn) {
          next[static_cast<size_t>(sn)] += w * p[sn];
        }
      }
      step += visit[static_cast<size_t>(s)] * row;
    }
    total += disc * step;
    disc *= spec.discount;
    visit = std::move(next);
  }
  return total;
}

namespace {

// Shared backward-induction scaffold; `make_row_policy` turns a Q row into
// the per-state action distribution that values back up through.
template <typename RowPolicyFn>
std::pair<ActionValueTable, TimeVaryingPolicy> backward_induction(
    const MfgSpec& spec, const MeanFieldFlow& flow, const RewardOracle& reward,
    RowPolicyFn&& make_row_policy) {
  spec.validate();
  if (flow.horizon() != spec.horizon) {
    throw ContractError("backward induction: flow length != horizon + 1");
  }
  const int S = spec.num_states;
  const int A = spec.num_actions;
  const int T = spec.horizon;

  ActionValueTable q(T, S, A);
  std::vector<PerStepPolicy> steps(static_cast<size_t>(T) + 1);

  // t = T: zero values, all actions tied.
  {
    std::vector<double> row(static_cast<size_t>(A), 0.0);
    std::vector<double> probs(static_cast<size_t>(S) * A);
    std::vector<double> out(static_cast<size_t>(A));
    for (int s = 0; s < S; ++s) {
      make_row_policy(row, out);
      std::copy(out.begin(), out.end(),
                probs.begin() + static_cast<size_t>(s) * A);
    }
    steps[static_cast<size_t>(T)] = PerStepPolicy(S, A, std::move(probs));
  }

  std::vector<double> state_value(static_cast<size_t>(S), 0.0);
  for (int t = T - 1; t >= 0; --t) {
    // state_value[s'] = E_{a' ~ pi_{t+1}(.|s')} Q(t+1, s', a')
    const PerStepPolicy& next_pi = steps[static_cast<size_t>(t) + 1];
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < A; ++a) v += next_pi.at(s, a) * q.at(t + 1, s, a);
      state_value[static_cast<size_t>(s)] = v;
    }
    const MeanField& mu = flow.at(t);
    std::vector<double> probs(static_cast<size_t>(S) * A);
    std::vector<double> qrow(static_cast<size_t>(A));
    std::vector<double> out(static_cast<size_t>(A));
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const std::vector<double> p = spec.transition.row(s, a, mu);
        double cont = 0.0;
        for (int sn = 0; sn < S; ++sn) {
          cont += p[static_cast<size_t>(sn)] * state_value[static_cast<size_t>(sn)];
        }
        const double val = reward.value(s, a, mu) + spec.discount * cont;
        q.at(t, s, a) = val;
        qrow[static_cast<size_t>(a)] = val;
      }
      make_row_policy(qrow, out);
      std::copy(out.begin(), out.end(),
                probs.begin() + static_cast<size_t>(s) * A);
    }
    steps[static_cast<size_t>(t)] = PerStepPolicy(S, A, std::move(probs));
  }

  TimeVaryingPolicy policy;
  policy.steps = std::move(steps);
  return {std::move(q), std::move(policy)};
}

}  // namespace

std::pair<ActionValueTable, TimeVaryingPolicy> q_backward_optimal(
    const MfgSpec& spec, const MeanFieldFlow& flow, const RewardOracle& reward,
    double tie_tol) {
  return backward_induction(
      spec, flow, reward,
      [tie_tol](std::span<const double> qrow, std::span<double> out) {
        const double qmax = *std::max_element(qrow.begin(), qrow.end());
        const double cut = qmax - tie_tol * std::max(1.0, std::abs(qmax));
        int ties = 0;
        for (size_t a = 0; a < qrow.size(); ++a) {
          if (qrow[a] >= cut) ++ties;
        }
        for (size_t a = 0; a < qrow.size(); ++a) {
          out[a] = (qrow[a] >= cut) ? 1.0 / ties : 0.0;
        }
      });
}

std::pair<ActionValueTable, TimeVaryingPolicy> boltzmann_backward(
    const MfgSpec& spec, const MeanFieldFlow& flow, const RewardOracle& reward,
    double beta) {
  if (!(beta > 0.0)) {
    throw ArgumentError("boltzmann_backward: beta must be positive");
  }
  return backward_induction(
      spec, flow, reward,
      [beta](std::span<const double> qrow, std::span<double> out) {
        detail::stable_softmax(qrow, beta, out);
      });
}

double exploitability(const MfgSpec& spec, const MeanFieldFlow& flow,
                      const TimeVaryingPolicy& policy,
                      const RewardOracle& reward) {
  const auto [q, best] = q_backward_optimal(spec, flow, reward);
  const double j_best = expected_return(spec, flow, best, reward);
  const double j_policy = expected_return(spec, flow, policy, reward);
  return j_best - j_policy;
}

FlowKernelCache::FlowKernelCache(const TransitionKernel& kernel,
                                 const MeanFieldFlow& flow)
    : horizon_(flow.horizon()),
      num_states_(kernel.num_states()),
      num_actions_(kernel.num_actions()) {
  rows_.resize(static_cast<size_t>(horizon_ + 1) * num_states_ *
               num_actions_ * num_states_);
  for (int t = 0; t <= horizon_; ++t) {
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < num_actions_; ++a) {
        const std::vector<double> p = kernel.row(s, a, flow.at(t));
        double* dst =
            rows_.data() +
            ((static_cast<size_t>(t) * num_states_ + s) * num_actions_ + a) *
                num_states_;
        std::copy(p.begin(), p.end(), dst);
      }
    }
  }
}

namespace {

std::vector<std::vector<double>> simulate_population_impl(
    const MfgSpec& spec, const TimeVaryingPolicy& policy,
    const MeanFieldFlow& flow, int num_agents, std::uint64_t seed,
    bool parallel) {
  spec.validate();
  if (policy.horizon() != spec.horizon || flow.horizon() != spec.horizon) {
    throw ContractError("simulate_population: length mismatch");
  }
  if (num_agents <= 0) {
    throw ArgumentError("simulate_population: need at least one agent");
  }
  const int S = spec.num_states;
  const int T = spec.horizon;
  const FlowKernelCache kernels(spec.transition, flow);

  std::vector<std::vector<long>> counts(
      static_cast<size_t>(T) + 1, std::vector<long>(static_cast<size_t>(S), 0));

#pragma omp parallel if (parallel)
  {
    std::vector<std::vector<long>> local(
        static_cast<size_t>(T) + 1,
        std::vector<long>(static_cast<size_t>(S), 0));
#pragma omp for nowait
    for (int agent = 0; agent < num_agents; ++agent) {
      std::mt19937_64 rng =
          make_stream(seed, static_cast<std::uint64_t>(agent));
      int s = sample_categorical(spec.initial_mean_field.probs(), rng);
      local[0][static_cast<size_t>(s)]++;
      for (int t = 0; t < T; ++t) {
        const int a = sample_categorical(policy.at(t).row(s), rng);
        s = sample_categorical(kernels.row(t, s, a), rng);
        local[static_cast<size_t>(t) + 1][static_cast<size_t>(s)]++;
      }
    }
#pragma omp critical
    {
      for (int t = 0; t <= T; ++t) {
        for (int s = 0; s < S; ++s) {
          counts[static_cast<size_t>(t)][static_cast<size_t>(s)] +=
              local[static_cast<size_t>(t)][static_cast<size_t>(s)];
        }
      }
    }
  }

  std::vector<std::vector<double>> freq(
      static_cast<size_t>(T) + 1, std::vector<double>(static_cast<size_t>(S)));
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      freq[static_cast<size_t>(t)][static_cast<size_t>(s)] =
          static_cast<double>(counts[static_cast<size_t>(t)][static_cast<size_t>(s)]) /
          num_agents;
    }
  }
  return freq;
}

}  // namespace

std::vector<std::vector<double>> simulate_population(
    const MfgSpec& spec, const TimeVaryingPolicy& policy,
    const MeanFieldFlow& flow, int num_agents, std::uint64_t seed) {
  return simulate_population_impl(spec, policy, flow, num_agents, seed, true);
}

std::vector<std::vector<double>> simulate_population_serial(
    const MfgSpec& spec, const TimeVaryingPolicy& policy,
    const MeanFieldFlow& flow, int num_agents, std::uint64_t seed) {
  return simulate_population_impl(spec, policy, flow, num_agents, seed, false);
}

}  // namespace mfg
