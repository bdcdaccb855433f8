#pragma once

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

inline constexpr double kSimplexTol = 1e-9;

/// Probability distribution over the state space at one time step.
class MeanField {
 public:
  MeanField() = default;
  explicit MeanField(std::vector<double> probs);

  static MeanField uniform(int num_states);
  static MeanField delta(int num_states, int state);

  int num_states() const { return static_cast<int>(probs_.size()); }
  double operator[](int s) const { return probs_[static_cast<size_t>(s)]; }
  const std::vector<double>& probs() const { return probs_; }

  bool operator==(const MeanField&) const = default;

 private:
  std::vector<double> probs_;
};

/// Sum_s s * mu(s); the scalar population statistic several models couple
/// their dynamics and rewards through.
double average_state(const MeanField& mu);

/// Sequence of T+1 mean fields, index t = 0..T.
struct MeanFieldFlow {
  std::vector<MeanField> fields;

  int horizon() const { return static_cast<int>(fields.size()) - 1; }
  const MeanField& at(int t) const { return fields[static_cast<size_t>(t)]; }
  bool operator==(const MeanFieldFlow&) const = default;
};

/// Row-stochastic |S| x |A| matrix; row s is the action distribution in s.
class PerStepPolicy {
 public:
  PerStepPolicy() = default;
  PerStepPolicy(int num_states, int num_actions, std::vector<double> probs);

  static PerStepPolicy uniform(int num_states, int num_actions);
  /// All rows put probability one on `action`.
  static PerStepPolicy pure(int num_states, int num_actions, int action);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double at(int s, int a) const {
    return probs_[static_cast<size_t>(s) * num_actions_ + a];
  }
  std::span<const double> row(int s) const {
    return {probs_.data() + static_cast<size_t>(s) * num_actions_,
            static_cast<size_t>(num_actions_)};
  }
  const std::vector<double>& data() const { return probs_; }

  bool operator==(const PerStepPolicy&) const = default;

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> probs_;
};

/// Sequence of T+1 per-step policies. The entry at t = T is structural:
/// returns never account rewards at the terminal step, but the index range
/// mirrors the flow's.
struct TimeVaryingPolicy {
  std::vector<PerStepPolicy> steps;

  static TimeVaryingPolicy uniform(int horizon, int num_states,
                                   int num_actions);

  int horizon() const { return static_cast<int>(steps.size()) - 1; }
  const PerStepPolicy& at(int t) const { return steps[static_cast<size_t>(t)]; }
  bool operator==(const TimeVaryingPolicy&) const = default;
};

/// Categorical next-state law P(s'|s,a,mu). Deterministic in its inputs;
/// sampling is a thin inverse-CDF layer over the exact row.
class TransitionKernel {
 public:
  using RowFn =
      std::function<std::vector<double>(int s, int a, const MeanField& mu)>;
  /// d P(s'|s,a,mu) / d mu(k), |S| x |S| row-major (s' rows, k columns).
  using MuJacobianFn =
      std::function<std::vector<double>(int s, int a, const MeanField& mu)>;

  TransitionKernel() = default;
  TransitionKernel(int num_states, int num_actions, RowFn row,
                   MuJacobianFn mu_jacobian = nullptr);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  /// Validated next-state distribution.
  std::vector<double> row(int s, int a, const MeanField& mu) const;
  int sample(int s, int a, const MeanField& mu, std::mt19937_64& rng) const;

  /// Kernels that do not depend on mu report an all-zero jacobian.
  bool has_mu_jacobian() const { return static_cast<bool>(mu_jacobian_); }
  std::vector<double> mu_jacobian(int s, int a, const MeanField& mu) const;

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  RowFn row_;
  MuJacobianFn mu_jacobian_;
};

/// Per-step reward r(s,a,mu). The terminal step t = T is never evaluated;
/// operations hard-code the zero terminal convention instead.
class RewardOracle {
 public:
  using Fn = std::function<double(int s, int a, const MeanField& mu)>;
  /// d r(s,a,mu) / d mu(k), length |S|.
  using MuGradFn =
      std::function<std::vector<double>(int s, int a, const MeanField& mu)>;

  RewardOracle() = default;
  explicit RewardOracle(Fn fn, MuGradFn mu_grad = nullptr);

  double value(int s, int a, const MeanField& mu) const;
  bool has_mu_grad() const { return static_cast<bool>(mu_grad_); }
  std::vector<double> mu_grad(int s, int a, const MeanField& mu) const;

 private:
  Fn fn_;
  MuGradFn mu_grad_;
};

/// Full environment definition.
struct MfgSpec {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  double discount = 1.0;
  MeanField initial_mean_field;
  TransitionKernel transition;
  std::optional<RewardOracle> reward;

  void validate() const;
  const RewardOracle& reward_or_throw() const;
  /// Dynamics-only copy, as handed to the IRL side.
  MfgSpec without_reward() const;
};

/// (T+1) x |S| x |A| action values; the t = T slice is identically zero.
class ActionValueTable {
 public:
  ActionValueTable() = default;
  ActionValueTable(int horizon, int num_states, int num_actions);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double at(int t, int s, int a) const { return values_[index(t, s, a)]; }
  double& at(int t, int s, int a) { return values_[index(t, s, a)]; }
  std::span<const double> row(int t, int s) const {
    return {values_.data() + index(t, s, 0), static_cast<size_t>(num_actions_)};
  }
  const std::vector<double>& data() const { return values_; }

 private:
  size_t index(int t, int s, int a) const {
    return (static_cast<size_t>(t) * num_states_ + s) * num_actions_ + a;
  }
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

namespace detail {
void check_distribution(std::span<const double> p, const char* what);
}  // namespace detail

}  // namespace mfg
