#include "mfg/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfg {

void FixedPointOptions::validate() const {
  if (max_iters < 1) throw ArgumentError("FixedPointOptions: max_iters >= 1");
  if (!(mse_tol > 0.0)) throw ArgumentError("FixedPointOptions: mse_tol > 0");
  if (!(damping >= 0.0 && damping < 1.0)) {
    throw ArgumentError("FixedPointOptions: damping must lie in [0,1)");
  }
  if (beta_soft.has_value() && !(*beta_soft > 0.0)) {
    throw ArgumentError("FixedPointOptions: beta_soft must be positive");
  }
}

void MfsoOptions::validate() const {
  if (!(learning_rate > 0.0)) {
    throw ArgumentError("MfsoOptions: learning_rate must be positive");
  }
  if (max_steps < 1) throw ArgumentError("MfsoOptions: max_steps >= 1");
}

double flow_iteration_mse(const MeanFieldFlow& a, const MeanFieldFlow& b) {
  if (a.horizon() != b.horizon()) {
    throw ContractError("flow_iteration_mse: length mismatch");
  }
  const int T = a.horizon();
  const int S = a.at(0).num_states();
  const int t_end = std::max(T - 1, 1);
  double acc = 0.0;
  for (int t = 1; t <= t_end; ++t) {
    for (int s = 0; s < S; ++s) {
      const double d = a.at(t)[s] - b.at(t)[s];
      acc += d * d;
    }
  }
  return acc / (static_cast<double>(t_end) * S);
}

EquilibriumResult solve_mfne_fixed_point(const MfgSpec& spec,
                                         const FixedPointOptions& opts) {
  spec.validate();
  opts.validate();
  const RewardOracle& reward = spec.reward_or_throw();

  TimeVaryingPolicy policy =
      TimeVaryingPolicy::uniform(spec.horizon, spec.num_states,
                                 spec.num_actions);
  MeanFieldFlow flow = propagate_flow(spec, policy);

  bool converged = false;
  int iterations = 0;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    iterations = iter;
    if (opts.beta_soft.has_value()) {
      policy = boltzmann_backward(spec, flow, reward, *opts.beta_soft).second;
    } else {
      policy = q_backward_optimal(spec, flow, reward).second;
    }
    MeanFieldFlow next = propagate_flow(spec, policy);
    if (opts.damping > 0.0) {
      for (size_t t = 0; t < next.fields.size(); ++t) {
        std::vector<double> mixed(static_cast<size_t>(spec.num_states));
        for (int s = 0; s < spec.num_states; ++s) {
          mixed[static_cast<size_t>(s)] = opts.damping * flow.fields[t][s] +
                                          (1.0 - opts.damping) * next.fields[t][s];
        }
        next.fields[t] = MeanField(std::move(mixed));
      }
    }
    const double mse = flow_iteration_mse(next, flow);
    flow = std::move(next);
    if (mse <= opts.mse_tol) {
      converged = true;
      break;
    }
  }

  EquilibriumResult result;
  result.policy = std::move(policy);
  result.flow = propagate_flow(spec, result.policy);
  result.expected_return =
      expected_return(spec, result.flow, result.policy, reward);
  result.exploitability =
      exploitability(spec, result.flow, result.policy, reward);
  result.iterations = iterations;
  result.converged = converged;
  return result;
}

double GroundTruthSocietal::value(const MeanField& mu,
                                  const PerStepPolicy& pi) const {
  return societal_reward(mu, pi, *reward_);
}

void GroundTruthSocietal::gradients(const MeanField& mu,
                                    const PerStepPolicy& pi,
                                    std::span<double> d_pi,
                                    std::span<double> d_mu) const {
  value_and_gradients(mu, pi, d_pi, d_mu);
}

double GroundTruthSocietal::value_and_gradients(const MeanField& mu,
                                                const PerStepPolicy& pi,
                                                std::span<double> d_pi,
                                                std::span<double> d_mu) const {
  const int S = spec_->num_states;
  const int A = spec_->num_actions;
  double total = 0.0;
  std::fill(d_mu.begin(), d_mu.end(), 0.0);
  for (int s = 0; s < S; ++s) {
    double row_value = 0.0;
    for (int a = 0; a < A; ++a) {
      const double r = reward_->value(s, a, mu);
      d_pi[static_cast<size_t>(s) * A + a] = mu[s] * r;
      row_value += pi.at(s, a) * r;
      if (mu[s] != 0.0 && pi.at(s, a) != 0.0) {
        const std::vector<double> rg = reward_->mu_grad(s, a, mu);
        const double w = mu[s] * pi.at(s, a);
        for (int k = 0; k < S; ++k) d_mu[static_cast<size_t>(k)] += w * rg[k];
      }
    }
    d_mu[static_cast<size_t>(s)] += row_value;
    total += mu[s] * row_value;
  }
  return total;
}

TimeVaryingPolicy policy_from_scores(std::span<const double> scores,
                                     int horizon, int num_states,
                                     int num_actions) {
  if (scores.size() != static_cast<size_t>(horizon + 1) * num_states *
                           static_cast<size_t>(num_actions)) {
    throw ContractError("policy_from_scores: score length mismatch");
  }
  TimeVaryingPolicy policy;
  policy.steps.reserve(static_cast<size_t>(horizon) + 1);
  std::vector<double> probs;
  for (int t = 0; t <= horizon; ++t) {
    probs.assign(static_cast<size_t>(num_states) * num_actions, 0.0);
    for (int s = 0; s < num_states; ++s) {
      const size_t off =
          (static_cast<size_t>(t) * num_states + s) * num_actions;
      detail::stable_softmax(scores.subspan(off, num_actions), 1.0,
                             std::span<double>(probs).subspan(
                                 static_cast<size_t>(s) * num_actions,
                                 num_actions));
    }
    policy.steps.emplace_back(num_states, num_actions, probs);
  }
  return policy;
}

std::pair<double, std::vector<double>> reduced_mdp_objective_grad(
    const MfgSpec& dynamics, const SocietalObjective& objective,
    std::span<const double> scores) {
  const int S = dynamics.num_states;
  const int A = dynamics.num_actions;
  const int T = dynamics.horizon;
  const TimeVaryingPolicy policy = policy_from_scores(scores, T, S, A);
  const MeanFieldFlow flow = propagate_flow(dynamics, policy);
  const bool kernel_mu_dep = dynamics.transition.has_mu_jacobian();

  // forward value and per-step partials
  double j_value = 0.0;
  std::vector<double> d_pi(static_cast<size_t>(T) * S * A);
  std::vector<double> d_mu(static_cast<size_t>(T) * S);
  {
    double disc = 1.0;
    for (int t = 0; t < T; ++t) {
      j_value += disc * objective.value_and_gradients(
                            flow.at(t), policy.at(t),
                            std::span<double>(d_pi).subspan(
                                static_cast<size_t>(t) * S * A,
                                static_cast<size_t>(S) * A),
                            std::span<double>(d_mu).subspan(
                                static_cast<size_t>(t) * S,
                                static_cast<size_t>(S)));
      disc *= dynamics.discount;
    }
  }

  // reverse sweep: lambda_t = dJ/dmu_t, then the policy-entry gradient
  std::vector<double> grad_pi_total(static_cast<size_t>(T + 1) * S * A, 0.0);
  std::vector<double> lambda(static_cast<size_t>(S), 0.0);  // lambda_{t+1}
  std::vector<double> lambda_prev(static_cast<size_t>(S), 0.0);
  double disc_t = std::pow(dynamics.discount, std::max(T - 1, 0));
  for (int t = T - 1; t >= 0; --t) {
    const MeanField& mu = flow.at(t);
    const PerStepPolicy& pi = policy.at(t);
    std::fill(lambda_prev.begin(), lambda_prev.end(), 0.0);
    for (int k = 0; k < S; ++k) {
      lambda_prev[static_cast<size_t>(k)] =
          disc_t * d_mu[static_cast<size_t>(t) * S + k];
    }
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const std::vector<double> p = dynamics.transition.row(s, a, mu);
        double lam_dot_p = 0.0;
        for (int sn = 0; sn < S; ++sn) {
          lam_dot_p += lambda[static_cast<size_t>(sn)] * p[sn];
        }
        grad_pi_total[(static_cast<size_t>(t) * S + s) * A + a] =
            disc_t * d_pi[(static_cast<size_t>(t) * S + s) * A + a] +
            mu[s] * lam_dot_p;
        // lambda flows back through the occupancy weight
        lambda_prev[static_cast<size_t>(s)] += pi.at(s, a) * lam_dot_p;
        if (kernel_mu_dep && mu[s] * pi.at(s, a) != 0.0) {
          const std::vector<double> jac =
              dynamics.transition.mu_jacobian(s, a, mu);
          const double w = mu[s] * pi.at(s, a);
          for (int sn = 0; sn < S; ++sn) {
            const double lw = w * lambda[static_cast<size_t>(sn)];
            if (lw == 0.0) continue;
            for (int k = 0; k < S; ++k) {
              lambda_prev[static_cast<size_t>(k)] +=
                  lw * jac[static_cast<size_t>(sn) * S + k];
            }
          }
        }
      }
    }
    lambda.swap(lambda_prev);
    disc_t /= dynamics.discount;
  }

  // chain through the per-row softmax
  std::vector<double> grad(scores.size(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      const size_t off = (static_cast<size_t>(t) * S + s) * A;
      double mean = 0.0;
      for (int a = 0; a < A; ++a) {
        mean += policy.at(t).at(s, a) * grad_pi_total[off + a];
      }
      for (int b = 0; b < A; ++b) {
        grad[off + b] =
            policy.at(t).at(s, b) * (grad_pi_total[off + b] - mean);
      }
    }
  }
  return {j_value, std::move(grad)};
}

double reduced_mdp_objective_value(const MfgSpec& dynamics,
                                   const SocietalObjective& objective,
                                   std::span<const double> scores) {
  const TimeVaryingPolicy policy = policy_from_scores(
      scores, dynamics.horizon, dynamics.num_states, dynamics.num_actions);
  const MeanFieldFlow flow = propagate_flow(dynamics, policy);
  double j_value = 0.0;
  double disc = 1.0;
  for (int t = 0; t < dynamics.horizon; ++t) {
    j_value += disc * objective.value(flow.at(t), policy.at(t));
    disc *= dynamics.discount;
  }
  return j_value;
}

ReducedMdpSolution solve_reduced_mdp(
    const MfgSpec& dynamics, const SocietalObjective& objective,
    const MfsoOptions& opts, const std::vector<double>* warm_start_scores) {
  dynamics.validate();
  opts.validate();
  const int S = dynamics.num_states;
  const int A = dynamics.num_actions;
  const int T = dynamics.horizon;
  const size_t n = static_cast<size_t>(T + 1) * S * A;

  std::vector<double> scores(n, 0.0);
  if (warm_start_scores != nullptr) {
    if (warm_start_scores->size() != n) {
      throw ContractError("solve_reduced_mdp: warm start shape mismatch");
    }
    scores = *warm_start_scores;
  }

  auto [j_value, grad] = reduced_mdp_objective_grad(dynamics, objective, scores);
  bool converged = false;
  int steps = 0;
  std::vector<double> trial(n);
  std::vector<double> sol_log;
  for (int step = 1; step <= opts.max_steps; ++step) {
    steps = step;
    double gnorm = 0.0;
    for (double g : grad) {
      if (!std::isfinite(g)) {
        throw DivergenceError("solve_reduced_mdp: non-finite gradient at step " +
                              std::to_string(step));
      }
      gnorm = std::max(gnorm, std::abs(g));
    }
    if (gnorm <= opts.grad_tol) {
      converged = true;
      break;
    }
    double alpha = opts.learning_rate;
    bool accepted = false;
    for (int halving = 0; halving <= 20; ++halving) {
      for (size_t i = 0; i < n; ++i) trial[i] = scores[i] + alpha * grad[i];
      const double j_trial =
          reduced_mdp_objective_value(dynamics, objective, trial);
      if (j_trial >= j_value) {
        scores.swap(trial);
        j_value = j_trial;
        accepted = true;
        sol_log.push_back(j_value);
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // objective cannot be improved along the gradient at float resolution
      converged = true;
      break;
    }
    grad = reduced_mdp_objective_grad(dynamics, objective, scores).second;
  }

  ReducedMdpSolution sol;
  sol.objective_log = std::move(sol_log);
  sol.policy = policy_from_scores(scores, T, S, A);
  sol.flow = propagate_flow(dynamics, sol.policy);
  sol.objective = j_value;
  sol.scores = std::move(scores);
  sol.steps = steps;
  sol.converged = converged;
  return sol;
}

EquilibriumResult solve_mfso(const MfgSpec& spec, const MfsoOptions& opts) {
  spec.validate();
  const RewardOracle& reward = spec.reward_or_throw();
  const GroundTruthSocietal objective(spec, reward);
  ReducedMdpSolution sol = solve_reduced_mdp(spec, objective, opts);

  EquilibriumResult result;
  result.flow = std::move(sol.flow);
  result.policy = std::move(sol.policy);
  result.expected_return =
      expected_return(spec, result.flow, result.policy, reward);
  result.exploitability =
      exploitability(spec, result.flow, result.policy, reward);
  result.iterations = sol.steps;
  result.converged = sol.converged;
  return result;
}

}  // namespace mfg
