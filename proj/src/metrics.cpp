#include "mfg/metrics.hpp"

#include <cmath>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps) {
  if (p.size() != q.size() || p.empty()) {
    throw ContractError("kl_divergence: shape mismatch");
  }
  const size_t n = p.size();
  std::vector<double> pf(n), qf(n);
  double psum = 0.0, qsum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    pf[i] = std::max(p[i], eps);
    qf[i] = std::max(q[i], eps);
    psum += pf[i];
    qsum += qf[i];
  }
  double kl = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double pi = pf[i] / psum;
    const double qi = qf[i] / qsum;
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

double dev_policy(const TimeVaryingPolicy& expert,
                  const TimeVaryingPolicy& learned) {
  if (expert.horizon() != learned.horizon()) {
    throw ContractError("dev_policy: horizon mismatch");
  }
  double total = 0.0;
  for (int t = 0; t <= expert.horizon(); ++t) {
    const PerStepPolicy& pe = expert.at(t);
    const PerStepPolicy& pl = learned.at(t);
    if (pe.num_states() != pl.num_states() ||
        pe.num_actions() != pl.num_actions()) {
      throw ContractError("dev_policy: shape mismatch at step " +
                          std::to_string(t));
    }
    for (int s = 0; s < pe.num_states(); ++s) {
      total += kl_divergence(pe.row(s), pl.row(s));
    }
  }
  return total;
}

double dev_mf(const MeanFieldFlow& expert, const MeanFieldFlow& learned) {
  if (expert.horizon() != learned.horizon()) {
    throw ContractError("dev_mf: horizon mismatch");
  }
  double total = 0.0;
  for (int t = 0; t <= expert.horizon(); ++t) {
    if (expert.at(t).num_states() != learned.at(t).num_states()) {
      throw ContractError("dev_mf: shape mismatch at step " +
                          std::to_string(t));
    }
    total += kl_divergence(expert.at(t).probs(), learned.at(t).probs());
  }
  return total;
}

}  // namespace mfg
