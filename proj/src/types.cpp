#include "mfg/types.hpp"

#include <cmath>
#include <numeric>

#include "mfg/rng.hpp"

namespace mfg {

namespace detail {

void check_distribution(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) {
      throw ContractError(std::string(what) +
                          ": negative or non-finite probability entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    throw ContractError(std::string(what) + ": entries sum to " +
                        std::to_string(sum) + ", expected 1");
  }
}

}  // namespace detail

MeanField::MeanField(std::vector<double> probs) : probs_(std::move(probs)) {
  detail::check_distribution(probs_, "MeanField");
}

MeanField MeanField::uniform(int num_states) {
  return MeanField(
      std::vector<double>(static_cast<size_t>(num_states), 1.0 / num_states));
}

MeanField MeanField::delta(int num_states, int state) {
  if (state < 0 || state >= num_states) {
    throw ArgumentError("MeanField::delta: state out of range");
  }
  std::vector<double> p(static_cast<size_t>(num_states), 0.0);
  p[static_cast<size_t>(state)] = 1.0;
  return MeanField(std::move(p));
}

double average_state(const MeanField& mu) {
  double acc = 0.0;
  for (int s = 0; s < mu.num_states(); ++s) acc += s * mu[s];
  return acc;
}

PerStepPolicy::PerStepPolicy(int num_states, int num_actions,
                             std::vector<double> probs)
    : num_states_(num_states),
      num_actions_(num_actions),
      probs_(std::move(probs)) {
  if (num_states_ <= 0 || num_actions_ <= 0 ||
      probs_.size() != static_cast<size_t>(num_states_) * num_actions_) {
    throw ContractError("PerStepPolicy: shape mismatch");
  }
  for (int s = 0; s < num_states_; ++s) {
    detail::check_distribution(row(s), "PerStepPolicy row");
  }
}

PerStepPolicy PerStepPolicy::uniform(int num_states, int num_actions) {
  return PerStepPolicy(
      num_states, num_actions,
      std::vector<double>(static_cast<size_t>(num_states) * num_actions,
                          1.0 / num_actions));
}

PerStepPolicy PerStepPolicy::pure(int num_states, int num_actions,
                                  int action) {
  if (action < 0 || action >= num_actions) {
    throw ArgumentError("PerStepPolicy::pure: action out of range");
  }
  std::vector<double> p(static_cast<size_t>(num_states) * num_actions, 0.0);
  for (int s = 0; s < num_states; ++s) {
    p[static_cast<size_t>(s) * num_actions + action] = 1.0;
  }
  return PerStepPolicy(num_states, num_actions, std::move(p));
}

TimeVaryingPolicy TimeVaryingPolicy::uniform(int horizon, int num_states,
                                             int num_actions) {
  TimeVaryingPolicy policy;
  policy.steps.assign(static_cast<size_t>(horizon) + 1,
                      PerStepPolicy::uniform(num_states, num_actions));
  return policy;
}

TransitionKernel::TransitionKernel(int num_states, int num_actions, RowFn row,
                                   MuJacobianFn mu_jacobian)
    : num_states_(num_states),
      num_actions_(num_actions),
      row_(std::move(row)),
      mu_jacobian_(std::move(mu_jacobian)) {}

std::vector<double> TransitionKernel::row(int s, int a,
                                          const MeanField& mu) const {
  if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_) {
    throw ContractError("TransitionKernel: state/action index out of range");
  }
  if (mu.num_states() != num_states_) {
    throw ContractError("TransitionKernel: mean field dimension mismatch");
  }
  std::vector<double> out = row_(s, a, mu);
  if (out.size() != static_cast<size_t>(num_states_)) {
    throw KernelIntegrityError("kernel row has wrong length");
  }
  double sum = 0.0;
  for (double v : out) {
    if (!(v >= 0.0)) {
      throw KernelIntegrityError("kernel row has a negative entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    throw KernelIntegrityError("kernel row sums to " + std::to_string(sum));
  }
  return out;
}

int TransitionKernel::sample(int s, int a, const MeanField& mu,
                             std::mt19937_64& rng) const {
  const std::vector<double> p = row(s, a, mu);
  return sample_categorical(p, rng);
}

std::vector<double> TransitionKernel::mu_jacobian(int s, int a,
                                                  const MeanField& mu) const {
  if (!mu_jacobian_) {
    return std::vector<double>(
        static_cast<size_t>(num_states_) * num_states_, 0.0);
  }
  std::vector<double> jac = mu_jacobian_(s, a, mu);
  if (jac.size() != static_cast<size_t>(num_states_) * num_states_) {
    throw KernelIntegrityError("kernel mu-jacobian has wrong shape");
  }
  return jac;
}

RewardOracle::RewardOracle(Fn fn, MuGradFn mu_grad)
    : fn_(std::move(fn)), mu_grad_(std::move(mu_grad)) {}

double RewardOracle::value(int s, int a, const MeanField& mu) const {
  const double r = fn_(s, a, mu);
  if (!std::isfinite(r)) {
    throw ContractError("RewardOracle produced a non-finite value");
  }
  return r;
}

std::vector<double> RewardOracle::mu_grad(int s, int a,
                                          const MeanField& mu) const {
  if (!mu_grad_) {
    return std::vector<double>(static_cast<size_t>(mu.num_states()), 0.0);
  }
  std::vector<double> g = mu_grad_(s, a, mu);
  if (g.size() != static_cast<size_t>(mu.num_states())) {
    throw ContractError("RewardOracle mu-gradient has wrong length");
  }
  return g;
}

void MfgSpec::validate() const {
  if (num_states <= 0 || num_actions <= 0) {
    throw ContractError("MfgSpec: state/action counts must be positive");
  }
  if (horizon < 1) throw ContractError("MfgSpec: horizon must be >= 1");
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw ContractError("MfgSpec: discount must lie in (0,1]");
  }
  if (initial_mean_field.num_states() != num_states) {
    throw ContractError("MfgSpec: initial mean field dimension mismatch");
  }
  if (transition.num_states() != num_states ||
      transition.num_actions() != num_actions) {
    throw ContractError("MfgSpec: transition kernel dimension mismatch");
  }
}

const RewardOracle& MfgSpec::reward_or_throw() const {
  if (!reward.has_value()) {
    throw ContractError("MfgSpec: operation requires a ground-truth reward");
  }
  return *reward;
}

MfgSpec MfgSpec::without_reward() const {
  MfgSpec copy = *this;
  copy.reward.reset();
  return copy;
}

ActionValueTable::ActionValueTable(int horizon, int num_states,
                                   int num_actions)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      values_(static_cast<size_t>(horizon + 1) * num_states * num_actions,
              0.0) {
  if (horizon < 0 || num_states <= 0 || num_actions <= 0) {
    throw ContractError("ActionValueTable: invalid shape");
  }
}

}  // namespace mfg
