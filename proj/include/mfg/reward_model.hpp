#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/mlp.hpp"
#include "mfg/types.hpp"

namespace mfg {

enum class RewardArchKind { kLinear, kMlp };

std::string to_string(RewardArchKind kind);
RewardArchKind parse_reward_arch(const std::string& text);

/// Shape of a parameterised reward r_omega(s,a,mu): either a linear map on
/// the feature encoding or the two-hidden-layer perceptron.
struct RewardArchitecture {
  RewardArchKind kind = RewardArchKind::kLinear;
  int input_dim = 0;  // 2|S| + |A|
  int hidden_dim = 64;

  int param_count() const;
  static RewardArchitecture for_spec(const MfgSpec& spec, RewardArchKind kind);
};

struct RewardParams {
  RewardArchitecture arch;
  std::vector<double> theta;
};

/// Linear: zeros. MLP: Glorot-uniform weights, zero biases, from the seed.
RewardParams init_reward_params(const RewardArchitecture& arch,
                                std::uint64_t seed);

double reward_forward(const RewardParams& params, const MfgSpec& spec, int s,
                      int a, const MeanField& mu);

/// Exact d r / d theta, length param_count.
std::vector<double> reward_grad(const RewardParams& params,
                                const MfgSpec& spec, int s, int a,
                                const MeanField& mu);

/// Value + parameter gradient + gradient w.r.t. the mean-field slice of the
/// input, in one pass over precomputed features. The workhorse behind the
/// training loops; `param_grad` has param_count entries, `mu_grad` |S|.
double reward_eval(const RewardParams& params, std::span<const double> features,
                   int num_states, std::span<double> param_grad,
                   std::span<double> mu_grad, Mlp::Workspace& ws);

/// Learned reward packaged behind the oracle interface (with exact
/// mu-gradients), so solvers and metrics treat it like ground truth.
RewardOracle make_reward_oracle(const MfgSpec& spec, RewardParams params);

/// First-moment/second-moment state for Adam.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;
};

/// One Adam update ascending along `grad` (beta1=0.9, beta2=0.999, eps=1e-8).
void adam_step(std::vector<double>& theta, std::span<const double> grad,
               AdamState& state, double lr);

void save_reward_params(const std::string& path, const RewardParams& params,
                        const nlohmann::json& metadata);
RewardParams load_reward_params(const std::string& path,
                                nlohmann::json* metadata = nullptr);

}  // namespace mfg
