#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfg/demos.hpp"
#include "mfg/reward_model.hpp"
#include "mfg/types.hpp"

namespace mfg {

enum class DynamicsMode { kExact, kMonteCarlo };

struct MfirlOptions {
  double beta = 1.0;
  int epochs = 500;
  double lr = 1e-4;
  /// Gradient recursion depth H: levels 0..H are recomputed each epoch,
  /// deeper gradient tables are substituted from the previous epoch's cache
  /// (zeros on the first epoch). Unset means the full recursion.
  std::optional<int> truncation_horizon;
  DynamicsMode dynamics_mode = DynamicsMode::kExact;
  int mc_samples = 32;
  std::uint64_t seed = 0;

  void validate(int horizon) const;
};

/// Parameter gradients of the soft backward pass:
/// grad_q holds d Qtilde(t,s,a) / d omega, grad_pi holds
/// d pitilde_t(a|s) / d omega; both (T+1) x |S| x |A| arrays of d-vectors.
class GradientTables {
 public:
  GradientTables() = default;
  GradientTables(int horizon, int num_states, int num_actions, int param_dim);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int param_dim() const { return param_dim_; }

  std::span<double> grad_q(int t, int s, int a) {
    return {grad_q_.data() + index(t, s, a), static_cast<size_t>(param_dim_)};
  }
  std::span<const double> grad_q(int t, int s, int a) const {
    return {grad_q_.data() + index(t, s, a), static_cast<size_t>(param_dim_)};
  }
  std::span<double> grad_pi(int t, int s, int a) {
    return {grad_pi_.data() + index(t, s, a), static_cast<size_t>(param_dim_)};
  }
  std::span<const double> grad_pi(int t, int s, int a) const {
    return {grad_pi_.data() + index(t, s, a), static_cast<size_t>(param_dim_)};
  }

  bool same_shape(const GradientTables& other) const {
    return horizon_ == other.horizon_ && num_states_ == other.num_states_ &&
           num_actions_ == other.num_actions_ &&
           param_dim_ == other.param_dim_;
  }
  const std::vector<double>& grad_q_data() const { return grad_q_; }
  const std::vector<double>& grad_pi_data() const { return grad_pi_; }

 private:
  size_t index(int t, int s, int a) const {
    return ((static_cast<size_t>(t) * num_states_ + s) * num_actions_ + a) *
           param_dim_;
  }
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  int param_dim_ = 0;
  std::vector<double> grad_q_, grad_pi_;
};

struct SoftBackwardResult {
  ActionValueTable q;
  TimeVaryingPolicy policy;
  GradientTables grads;
};

/// Joint backward pass: soft action values, Boltzmann policy, and their
/// parameter gradients
///   grad_pi_t(a|s) = pi * beta * (grad_q(t,s,a) - E_{a'~pi} grad_q(t,s,a')),
///   grad_q(t,s,a)  = grad_r + gamma E_{s'~P}[ sum_a' Q grad_pi
///                                             + E_{a'~pi} grad_q ],
/// with zero tables at t = T. Exact mode sums the categorical kernel;
/// Monte-Carlo mode replaces E_{s'~P} in both the value and gradient
/// backups by an average over mc_samples next states drawn per (t,s,a)
/// from a fresh (epoch, t, s, a)-derived stream. OpenMP over (s,a) rows.
SoftBackwardResult soft_best_response_with_grads(
    const MfgSpec& dynamics, const MeanFieldFlow& mu_hat,
    const RewardParams& params, const MfirlOptions& opts,
    const GradientTables* prev_epoch_tables = nullptr,
    std::uint64_t epoch = 0);

/// Plain-loop twin; must agree bit-for-bit with the parallel kernel.
SoftBackwardResult soft_best_response_with_grads_serial(
    const MfgSpec& dynamics, const MeanFieldFlow& mu_hat,
    const RewardParams& params, const MfirlOptions& opts,
    const GradientTables* prev_epoch_tables = nullptr,
    std::uint64_t epoch = 0);

struct ValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// (1/M) sum_j sum_{t<T} gamma^t r_omega(s_t^j, a_t^j, mu_hat_t) and its
/// parameter gradient.
ValueGrad empirical_expert_term(const MfgSpec& dynamics, const DemoSet& demos,
                                const MeanFieldFlow& mu_hat,
                                const RewardParams& params);

struct MfirlObjective {
  double value = 0.0;           // L(omega)
  std::vector<double> grad;     // dL/domega
  SoftBackwardResult backward;  // tables, reusable as the truncation cache
};

/// L = expert term - J(mu_hat, pitilde) with
/// J = E_{s~mu_hat_0} sum_a pitilde_0(a|s) Qtilde(0,s,a), and its gradient.
MfirlObjective objective_and_grad(const MfgSpec& dynamics,
                                  const DemoSet& demos,
                                  const MeanFieldFlow& mu_hat,
                                  const RewardParams& params,
                                  const MfirlOptions& opts,
                                  const GradientTables* prev_epoch_tables =
                                      nullptr,
                                  std::uint64_t epoch = 0);

struct MfirlTrainResult {
  RewardParams params;
  std::vector<double> objective_log;
  std::vector<double> grad_norm_log;
};

/// Full training loop: estimate mu_hat once, then per epoch compute the
/// backward tables and the empirical gradient and take an Adam ascent step.
MfirlTrainResult mfirl_train(const MfgSpec& dynamics, const DemoSet& demos,
                             const RewardArchitecture& arch,
                             const MfirlOptions& opts);

}  // namespace mfg
