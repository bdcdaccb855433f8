#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/envs.hpp"
#include "mfg/metrics.hpp"
#include "mfg/mfirl.hpp"
#include "mfg/plirl.hpp"
#include "mfg/solvers.hpp"

namespace mfg {

/// Equilibrium persisted with enough context to replay it (expert.json).
struct ExpertFile {
  std::string env;
  std::string variant;
  std::string solver;  // "mfne" or "mfso"
  int horizon = 50;
  double discount = 0.99;
  std::uint64_t seed = 0;
  EquilibriumResult result;
};

void save_expert(const std::string& path, const ExpertFile& expert);
ExpertFile load_expert(const std::string& path);

/// Sweep description; one JSON document drives the whole pipeline.
struct ExperimentConfig {
  std::vector<EnvName> envs;
  std::vector<EnvVariant> variants{EnvVariant::kOriginal};
  /// "mfirl", "plirl", or "oracle" (ground-truth reward fed straight into
  /// the evaluation stage; a self-check).
  std::vector<std::string> algorithms{"mfirl"};
  std::vector<int> plays{10};
  int agents = 100;
  std::vector<std::uint64_t> seeds{1};
  int horizon = 50;
  double discount = 0.99;

  /// "auto" routes cooperative models to MFSO experts and the rest to the
  /// soft fixed point; "mfne"/"mfso" force one solver for every model.
  std::string expert_solver = "auto";
  FixedPointOptions expert_fixed_point{1000, 1e-10, 0.5, 1.0};
  MfsoOptions mfso{};

  RewardArchKind mfirl_arch = RewardArchKind::kMlp;
  MfirlOptions mfirl{};
  PlirlOptions plirl{};

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

/// Expert equilibrium for one environment under this config's routing.
ExpertFile solve_expert(const ExperimentConfig& config, EnvName env);

/// Re-solve the social optimum under a learned individual reward and score
/// it against the ground-truth social optimum of `spec_eval`.
MetricsReport evaluate_individual_reward(const MfgSpec& spec_eval,
                                         const RewardOracle& learned,
                                         const EquilibriumResult& expert_ref,
                                         const MfsoOptions& opts);

/// Same, for a learned societal reward model.
MetricsReport evaluate_societal_reward(const MfgSpec& spec_eval,
                                       const SocietalRewardModel& model,
                                       const EquilibriumResult& expert_ref,
                                       const MfsoOptions& opts);

struct ExperimentOutcome {
  std::vector<MetricsReport> reports;  // config order, resumed rows included
  bool any_error = false;
};

/// Runs every (env, algorithm, plays, seed, variant) cell, appending one CSV
/// row each to `out_csv`. Rows already present in the file are skipped, so
/// an interrupted sweep resumes where it stopped. Failures are recorded in
/// the row's error column and the sweep continues.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::string& out_csv,
                                 std::ostream* progress = nullptr);

/// Shortest round-trip decimal rendering used for all persisted floats.
std::string format_double(double v);

inline constexpr const char* kResultsCsvHeader =
    "env,variant,algorithm,plays,seed,dev_policy,dev_mf,return_learned,"
    "return_expert,error";

std::string metrics_to_csv_row(const MetricsReport& report);

}  // namespace mfg
