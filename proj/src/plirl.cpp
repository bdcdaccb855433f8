#include "mfg/plirl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mfg/errors.hpp"
#include "mfg/reward_model.hpp"

namespace mfg {

namespace {

std::vector<double> model_input(const SocietalRewardModel& model,
                                const MeanField& mu, const PerStepPolicy& pi) {
  const int S = model.num_states;
  const int A = model.num_actions;
  if (mu.num_states() != S || pi.num_states() != S || pi.num_actions() != A) {
    throw ContractError("societal model: dimension mismatch");
  }
  std::vector<double> x(static_cast<size_t>(model.input_dim()));
  std::copy(mu.probs().begin(), mu.probs().end(), x.begin());
  std::copy(pi.data().begin(), pi.data().end(), x.begin() + S);
  return x;
}

}  // namespace

SocietalRewardModel init_societal_model(int num_states, int num_actions,
                                        std::uint64_t seed) {
  if (num_states <= 0 || num_actions <= 0) {
    throw ArgumentError("init_societal_model: dimensions must be positive");
  }
  SocietalRewardModel model;
  model.num_states = num_states;
  model.num_actions = num_actions;
  model.theta = model.net().init_params(seed);
  return model;
}

double societal_model_value(const SocietalRewardModel& model,
                            const MeanField& mu, const PerStepPolicy& pi) {
  thread_local Mlp::Workspace ws;
  return model.net().forward(model.theta, model_input(model, mu, pi), ws);
}

double ModelSocietal::value(const MeanField& mu,
                            const PerStepPolicy& pi) const {
  return societal_model_value(*model_, mu, pi);
}

void ModelSocietal::gradients(const MeanField& mu, const PerStepPolicy& pi,
                              std::span<double> d_pi,
                              std::span<double> d_mu) const {
  value_and_gradients(mu, pi, d_pi, d_mu);
}

double ModelSocietal::value_and_gradients(const MeanField& mu,
                                          const PerStepPolicy& pi,
                                          std::span<double> d_pi,
                                          std::span<double> d_mu) const {
  const int S = model_->num_states;
  thread_local Mlp::Workspace ws;
  thread_local std::vector<double> input_grad;
  input_grad.resize(static_cast<size_t>(model_->input_dim()));
  const double out = model_->net().forward_backward(
      model_->theta, model_input(*model_, mu, pi), {}, input_grad, ws);
  std::copy(input_grad.begin(), input_grad.begin() + S, d_mu.begin());
  std::copy(input_grad.begin() + S, input_grad.end(), d_pi.begin());
  return out;
}

void PlirlOptions::validate() const {
  if (outer_epochs < 1) {
    throw ArgumentError("PlirlOptions: outer_epochs must be >= 1");
  }
  if (!(outer_lr > 0.0)) {
    throw ArgumentError("PlirlOptions: outer_lr must be positive");
  }
  inner.validate();
}

namespace {

/// Softmax scores whose policy reproduces `policy` up to probability
/// clamping; gives the inner solver a start at the projected expert.
std::vector<double> scores_from_policy(const TimeVaryingPolicy& policy) {
  const int T = policy.horizon();
  const int S = policy.at(0).num_states();
  const int A = policy.at(0).num_actions();
  std::vector<double> scores(static_cast<size_t>(T + 1) * S * A);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        scores[(static_cast<size_t>(t) * S + s) * A + a] =
            std::log(std::max(policy.at(t).at(s, a), 1e-12));
      }
    }
  }
  return scores;
}

/// J_E(theta) = sum_t gamma^t rbar_theta(mu_hat_t, pi_hat_t) and d/dtheta.
std::pair<double, std::vector<double>> expert_value_and_grad(
    const SocietalRewardModel& model, const MfgSpec& dynamics,
    const EmpiricalEstimates& estimates) {
  const Mlp net = model.net();
  Mlp::Workspace ws;
  std::vector<double> pg(static_cast<size_t>(net.param_count()));
  std::vector<double> grad(static_cast<size_t>(net.param_count()), 0.0);
  double value = 0.0;
  double disc = 1.0;
  for (int t = 0; t < dynamics.horizon; ++t) {
    const std::vector<double> x = model_input(
        model, estimates.mean_field_flow.at(t), estimates.policy.at(t));
    value += disc * net.forward_backward(model.theta, x, pg, {}, ws);
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += disc * pg[i];
    disc *= dynamics.discount;
  }
  return {value, std::move(grad)};
}

/// Same discounted sum along an arbitrary (flow, policy) pair.
std::pair<double, std::vector<double>> pair_value_and_grad(
    const SocietalRewardModel& model, const MfgSpec& dynamics,
    const MeanFieldFlow& flow, const TimeVaryingPolicy& policy) {
  const Mlp net = model.net();
  Mlp::Workspace ws;
  std::vector<double> pg(static_cast<size_t>(net.param_count()));
  std::vector<double> grad(static_cast<size_t>(net.param_count()), 0.0);
  double value = 0.0;
  double disc = 1.0;
  for (int t = 0; t < dynamics.horizon; ++t) {
    const std::vector<double> x =
        model_input(model, flow.at(t), policy.at(t));
    value += disc * net.forward_backward(model.theta, x, pg, {}, ws);
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += disc * pg[i];
    disc *= dynamics.discount;
  }
  return {value, std::move(grad)};
}

}  // namespace

PlirlTrainResult plirl_train(const EmpiricalEstimates& estimates,
                             const MfgSpec& dynamics,
                             const PlirlOptions& opts) {
  dynamics.validate();
  opts.validate();
  if (estimates.mean_field_flow.horizon() != dynamics.horizon ||
      estimates.policy.horizon() != dynamics.horizon) {
    throw ContractError("plirl_train: estimate length mismatch");
  }

  PlirlTrainResult result;
  result.model =
      init_societal_model(dynamics.num_states, dynamics.num_actions,
                          opts.seed);
  AdamState adam;

  const std::vector<double> expert_scores =
      scores_from_policy(estimates.policy);
  const TimeVaryingPolicy expert_feasible_policy = policy_from_scores(
      expert_scores, dynamics.horizon, dynamics.num_states,
      dynamics.num_actions);
  const MeanFieldFlow expert_feasible_flow =
      propagate_flow(dynamics, expert_feasible_policy);
  std::vector<double> warm = expert_scores;

  for (int epoch = 0; epoch < opts.outer_epochs; ++epoch) {
    const ModelSocietal objective(result.model);
    ReducedMdpSolution sol;
    const double j_feasible =
        pair_value_and_grad(result.model, dynamics, expert_feasible_flow,
                            expert_feasible_policy)
            .first;
    try {
      sol = solve_reduced_mdp(dynamics, objective, opts.inner, &warm);
      // If the projected expert beats the warm-started optimum, the ascent
      // got trapped; restart it from the expert scores (the probe starts at
      // exactly j_feasible and only accepts improvements).
      if (j_feasible > sol.objective) {
        const auto probe =
            solve_reduced_mdp(dynamics, objective, opts.inner, &expert_scores);
        if (probe.objective > sol.objective) sol = probe;
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (outer epoch " +
                            std::to_string(epoch) + ")");
    }
    warm = sol.scores;

    const auto [j_expert, g_expert] =
        expert_value_and_grad(result.model, dynamics, estimates);
    const auto [j_inner, g_inner] =
        pair_value_and_grad(result.model, dynamics, sol.flow, sol.policy);

    const double margin = j_expert - j_inner;
    if (!std::isfinite(margin)) {
      throw DivergenceError("plirl_train: non-finite margin at outer epoch " +
                            std::to_string(epoch));
    }
    result.margin_log.push_back(margin);
    result.feasible_margin_log.push_back(j_feasible - sol.objective);
    result.inner_value_log.push_back(j_inner);

    std::vector<double> grad(g_expert.size());
    for (size_t i = 0; i < grad.size(); ++i) grad[i] = g_expert[i] - g_inner[i];
    adam_step(result.model.theta, grad, adam, opts.outer_lr);
  }
  return result;
}

EquilibriumResult plirl_equilibrium(const SocietalRewardModel& model,
                                    const MfgSpec& dynamics,
                                    const MfsoOptions& opts) {
  dynamics.validate();
  const ModelSocietal objective(model);
  ReducedMdpSolution sol = solve_reduced_mdp(dynamics, objective, opts);
  EquilibriumResult result;
  result.flow = std::move(sol.flow);
  result.policy = std::move(sol.policy);
  result.expected_return = sol.objective;
  result.exploitability.reset();
  result.iterations = sol.steps;
  result.converged = sol.converged;
  return result;
}

void save_societal_model(const std::string& path,
                         const SocietalRewardModel& model,
                         const nlohmann::json& metadata) {
  nlohmann::json j{
      {"num_states", model.num_states},
      {"num_actions", model.num_actions},
      {"hidden_dim", model.hidden_dim},
      {"params", model.theta},
      {"metadata", metadata},
  };
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

SocietalRewardModel load_societal_model(const std::string& path,
                                        nlohmann::json* metadata) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid societal reward file: ") + e.what(),
                     1);
  }
  SocietalRewardModel model;
  model.num_states = j.at("num_states").get<int>();
  model.num_actions = j.at("num_actions").get<int>();
  model.hidden_dim = j.at("hidden_dim").get<int>();
  model.theta = j.at("params").get<std::vector<double>>();
  if (model.theta.size() != static_cast<size_t>(model.net().param_count())) {
    throw IntegrityError("societal reward file: parameter count mismatch");
  }
  if (metadata != nullptr && j.contains("metadata")) *metadata = j["metadata"];
  return model;
}

}  // namespace mfg
