#include "mfg/reward_model.hpp"

#include <cmath>
#include <fstream>
#include <memory>

#include "mfg/envs.hpp"
#include "mfg/errors.hpp"

namespace mfg {

std::string to_string(RewardArchKind kind) {
  return kind == RewardArchKind::kLinear ? "linear" : "mlp";
}

RewardArchKind parse_reward_arch(const std::string& text) {
  if (text == "linear") return RewardArchKind::kLinear;
  if (text == "mlp") return RewardArchKind::kMlp;
  throw ArgumentError("unknown reward architecture: " + text);
}

int RewardArchitecture::param_count() const {
  if (kind == RewardArchKind::kLinear) return input_dim;
  return Mlp(input_dim, hidden_dim).param_count();
}

RewardArchitecture RewardArchitecture::for_spec(const MfgSpec& spec,
                                                RewardArchKind kind) {
  return RewardArchitecture{kind, 2 * spec.num_states + spec.num_actions, 64};
}

RewardParams init_reward_params(const RewardArchitecture& arch,
                                std::uint64_t seed) {
  if (arch.input_dim <= 0) {
    throw ArgumentError("RewardArchitecture: input_dim must be positive");
  }
  RewardParams params;
  params.arch = arch;
  if (arch.kind == RewardArchKind::kLinear) {
    params.theta.assign(static_cast<size_t>(arch.input_dim), 0.0);
  } else {
    params.theta = Mlp(arch.input_dim, arch.hidden_dim).init_params(seed);
  }
  return params;
}

double reward_eval(const RewardParams& params,
                   std::span<const double> features, int num_states,
                   std::span<double> param_grad, std::span<double> mu_grad,
                   Mlp::Workspace& ws) {
  const size_t n = features.size();
  if (n != static_cast<size_t>(params.arch.input_dim)) {
    throw ContractError("reward_eval: feature length mismatch");
  }
  if (params.arch.kind == RewardArchKind::kLinear) {
    double out = 0.0;
    for (size_t i = 0; i < n; ++i) out += params.theta[i] * features[i];
    if (!param_grad.empty()) {
      std::copy(features.begin(), features.end(), param_grad.begin());
    }
    if (!mu_grad.empty()) {
      // the mean field occupies the trailing |S| feature slots
      std::copy(params.theta.end() - num_states, params.theta.end(),
                mu_grad.begin());
    }
    return out;
  }
  const Mlp net(params.arch.input_dim, params.arch.hidden_dim);
  if (mu_grad.empty()) {
    return net.forward_backward(params.theta, features, param_grad, {}, ws);
  }
  std::vector<double> input_grad(n);
  const double out =
      net.forward_backward(params.theta, features, param_grad, input_grad, ws);
  std::copy(input_grad.end() - num_states, input_grad.end(), mu_grad.begin());
  return out;
}

double reward_forward(const RewardParams& params, const MfgSpec& spec, int s,
                      int a, const MeanField& mu) {
  const std::vector<double> f = encode_features(spec, s, a, mu);
  Mlp::Workspace ws;
  return reward_eval(params, f, spec.num_states, {}, {}, ws);
}

std::vector<double> reward_grad(const RewardParams& params,
                                const MfgSpec& spec, int s, int a,
                                const MeanField& mu) {
  const std::vector<double> f = encode_features(spec, s, a, mu);
  std::vector<double> grad(static_cast<size_t>(params.arch.param_count()));
  Mlp::Workspace ws;
  reward_eval(params, f, spec.num_states, grad, {}, ws);
  return grad;
}

RewardOracle make_reward_oracle(const MfgSpec& spec, RewardParams params) {
  const int S = spec.num_states;
  const int A = spec.num_actions;
  auto shared = std::make_shared<RewardParams>(std::move(params));
  auto fill_features = [S, A](int s, int a, const MeanField& mu,
                              std::vector<double>& f) {
    f.assign(static_cast<size_t>(2 * S + A), 0.0);
    f[static_cast<size_t>(s)] = 1.0;
    f[static_cast<size_t>(S + a)] = 1.0;
    std::copy(mu.probs().begin(), mu.probs().end(), f.begin() + S + A);
  };
  auto value_fn = [shared, S, fill_features](int s, int a,
                                             const MeanField& mu) {
    thread_local Mlp::Workspace ws;
    thread_local std::vector<double> f;
    fill_features(s, a, mu, f);
    return reward_eval(*shared, f, S, {}, {}, ws);
  };
  auto grad_fn = [shared, S, fill_features](int s, int a,
                                            const MeanField& mu) {
    thread_local Mlp::Workspace ws;
    thread_local std::vector<double> f;
    fill_features(s, a, mu, f);
    std::vector<double> mu_grad(static_cast<size_t>(S));
    reward_eval(*shared, f, S, {}, mu_grad, ws);
    return mu_grad;
  };
  return RewardOracle(std::move(value_fn), std::move(grad_fn));
}

void adam_step(std::vector<double>& theta, std::span<const double> grad,
               AdamState& state, double lr) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (grad.size() != theta.size()) {
    throw ContractError("adam_step: gradient dimension mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
    state.step = 0;
  }
  if (state.m.size() != theta.size()) {
    throw ContractError("adam_step: optimizer state dimension mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * grad[i];
    state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    theta[i] += lr * mhat / (std::sqrt(vhat) + kEps);
  }
}

void save_reward_params(const std::string& path, const RewardParams& params,
                        const nlohmann::json& metadata) {
  nlohmann::json j{
      {"architecture",
       {{"kind", to_string(params.arch.kind)},
        {"input_dim", params.arch.input_dim},
        {"hidden_dim", params.arch.hidden_dim}}},
      {"params", params.theta},
      {"metadata", metadata},
  };
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

RewardParams load_reward_params(const std::string& path,
                                nlohmann::json* metadata) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid reward file: ") + e.what(), 1);
  }
  RewardParams params;
  params.arch.kind = parse_reward_arch(j.at("architecture").at("kind"));
  params.arch.input_dim = j.at("architecture").at("input_dim");
  params.arch.hidden_dim = j.at("architecture").at("hidden_dim");
  params.theta = j.at("params").get<std::vector<double>>();
  if (params.theta.size() !=
      static_cast<size_t>(params.arch.param_count())) {
    throw IntegrityError("reward file: parameter count does not match " +
                         std::string("the declared architecture"));
  }
  if (metadata != nullptr && j.contains("metadata")) *metadata = j["metadata"];
  return params;
}

}  // namespace mfg
