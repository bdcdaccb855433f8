#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/demos.hpp"
#include "mfg/mlp.hpp"
#include "mfg/solvers.hpp"
#include "mfg/types.hpp"

namespace mfg {

/// Learned societal reward rbar_theta(mu, pi): a perceptron over the
/// concatenation [mu | flattened pi], scalar out.
struct SocietalRewardModel {
  int num_states = 0;
  int num_actions = 0;
  int hidden_dim = 64;
  std::vector<double> theta;

  int input_dim() const { return num_states + num_states * num_actions; }
  Mlp net() const { return Mlp(input_dim(), hidden_dim); }
};

SocietalRewardModel init_societal_model(int num_states, int num_actions,
                                        std::uint64_t seed);

double societal_model_value(const SocietalRewardModel& model,
                            const MeanField& mu, const PerStepPolicy& pi);

/// Reduced-MDP objective adapter with exact input gradients.
class ModelSocietal final : public SocietalObjective {
 public:
  explicit ModelSocietal(const SocietalRewardModel& model) : model_(&model) {}
  double value(const MeanField& mu, const PerStepPolicy& pi) const override;
  void gradients(const MeanField& mu, const PerStepPolicy& pi,
                 std::span<double> d_pi,
                 std::span<double> d_mu) const override;
  double value_and_gradients(const MeanField& mu, const PerStepPolicy& pi,
                             std::span<double> d_pi,
                             std::span<double> d_mu) const override;

 private:
  const SocietalRewardModel* model_;
};

struct PlirlOptions {
  int outer_epochs = 60;
  double outer_lr = 1e-3;
  /// Warm-started every outer epoch, so far fewer steps than a cold solve.
  MfsoOptions inner{0.05, 300, 1e-7, 0};
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlirlTrainResult {
  SocietalRewardModel model;
  /// Per outer epoch: J_E(theta) - J_theta(mu*, pi*), the training margin
  /// evaluated at the (estimated, generally inconsistent) expert pair.
  std::vector<double> margin_log;
  /// Same margin with the expert projected onto the feasible set
  /// (policy from clamped log-probabilities, flow propagated from it);
  /// non-positive by construction of the inner solver.
  std::vector<double> feasible_margin_log;
  std::vector<double> inner_value_log;
};

/// Margin-based bilevel training: the lower level re-solves the reduced MDP
/// under the current rbar_theta (warm-started, with an extra start at the
/// projected expert policy); the upper level ascends theta on the margin
/// between the estimated expert value and the solved optimum, holding the
/// lower solution fixed.
PlirlTrainResult plirl_train(const EmpiricalEstimates& estimates,
                             const MfgSpec& dynamics,
                             const PlirlOptions& opts);

/// Reduced-MDP optimum under the learned societal reward; `expected_return`
/// is the societal objective value and no exploitability is reported (the
/// model carries no individual reward).
EquilibriumResult plirl_equilibrium(const SocietalRewardModel& model,
                                    const MfgSpec& dynamics,
                                    const MfsoOptions& opts);

void save_societal_model(const std::string& path,
                         const SocietalRewardModel& model,
                         const nlohmann::json& metadata);
SocietalRewardModel load_societal_model(const std::string& path,
                                        nlohmann::json* metadata = nullptr);

}  // namespace mfg
