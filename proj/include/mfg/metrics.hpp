#pragma once

#include <span>
#include <string>

#include "mfg/types.hpp"

namespace mfg {

/// KL(p || q) with both distributions floored at eps and renormalised
/// before the log ratio, so hard zeros on either side stay finite.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps = 1e-10);

/// sum_{t=0}^{T} sum_s KL(expert_t(.|s) || learned_t(.|s)).
double dev_policy(const TimeVaryingPolicy& expert,
                  const TimeVaryingPolicy& learned);

/// sum_{t=0}^{T} KL(expert_t || learned_t).
double dev_mf(const MeanFieldFlow& expert, const MeanFieldFlow& learned);

/// One row of experiment output.
struct MetricsReport {
  std::string env;
  std::string variant;
  std::string algorithm;
  int plays = 0;
  std::uint64_t seed = 0;
  double dev_policy = 0.0;
  double dev_mf = 0.0;
  double expected_return_learned = 0.0;
  double expected_return_expert = 0.0;
  std::string error;  // empty when the row succeeded
};

}  // namespace mfg
