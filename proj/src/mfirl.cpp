#include "mfg/mfirl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/core.hpp"
#include "mfg/envs.hpp"
#include "mfg/rng.hpp"

namespace mfg {

void MfirlOptions::validate(int horizon) const {
  if (!(beta > 0.0)) throw ArgumentError("MfirlOptions: beta must be positive");
  if (epochs < 1) throw ArgumentError("MfirlOptions: epochs must be >= 1");
  if (!(lr > 0.0)) throw ArgumentError("MfirlOptions: lr must be positive");
  if (truncation_horizon.has_value() &&
      (*truncation_horizon < 1 || *truncation_horizon > horizon)) {
    throw ArgumentError(
        "MfirlOptions: truncation horizon must lie in [1, horizon]");
  }
  if (dynamics_mode == DynamicsMode::kMonteCarlo && mc_samples < 1) {
    throw ArgumentError("MfirlOptions: mc_samples must be >= 1");
  }
}

GradientTables::GradientTables(int horizon, int num_states, int num_actions,
                               int param_dim)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      param_dim_(param_dim),
      grad_q_(static_cast<size_t>(horizon + 1) * num_states * num_actions *
                  param_dim,
              0.0),
      grad_pi_(grad_q_.size(), 0.0) {}

namespace {

SoftBackwardResult soft_backward_impl(const MfgSpec& dynamics,
                                      const MeanFieldFlow& mu_hat,
                                      const RewardParams& params,
                                      const MfirlOptions& opts,
                                      const GradientTables* prev,
                                      std::uint64_t epoch, bool parallel) {
  dynamics.validate();
  opts.validate(dynamics.horizon);
  if (mu_hat.horizon() != dynamics.horizon) {
    throw ContractError("soft backward pass: flow length != horizon + 1");
  }
  const int S = dynamics.num_states;
  const int A = dynamics.num_actions;
  const int T = dynamics.horizon;
  const int d = params.arch.param_count();
  if (params.theta.size() != static_cast<size_t>(d)) {
    throw ContractError("soft backward pass: parameter size mismatch");
  }
  const int fresh_depth = opts.truncation_horizon.value_or(T);
  const bool monte_carlo = opts.dynamics_mode == DynamicsMode::kMonteCarlo;

  SoftBackwardResult res;
  res.q = ActionValueTable(T, S, A);
  res.grads = GradientTables(T, S, A, d);
  if (prev != nullptr && !prev->same_shape(res.grads)) {
    throw ContractError("soft backward pass: cached table shape mismatch");
  }
  // Levels beyond the fresh window carry the previous epoch's gradients.
  if (fresh_depth < T && prev != nullptr) {
    for (int t = fresh_depth + 1; t <= T; ++t) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          std::copy(prev->grad_q(t, s, a).begin(), prev->grad_q(t, s, a).end(),
                    res.grads.grad_q(t, s, a).begin());
          std::copy(prev->grad_pi(t, s, a).begin(),
                    prev->grad_pi(t, s, a).end(),
                    res.grads.grad_pi(t, s, a).begin());
        }
      }
    }
  }

  const FlowKernelCache kernels(dynamics.transition, mu_hat);

  res.policy.steps.assign(static_cast<size_t>(T) + 1,
                          PerStepPolicy::uniform(S, A));

  // gv_next[s'] = sum_a' (Q grad_pi + pi grad_q) at level t+1; v_next the
  // scalar counterpart.
  std::vector<double> v_next(static_cast<size_t>(S));
  std::vector<double> gv_next(static_cast<size_t>(S) * d);
  // exceptions must not unwind through the omp region; failures are
  // flagged and rethrown outside
  long bad_cell = -1;

  for (int t = T - 1; t >= 0; --t) {
    const int tn = t + 1;
    const PerStepPolicy& pi_next = res.policy.at(tn);
    const bool fresh = t <= fresh_depth;

#pragma omp parallel if (parallel)
    {
#pragma omp for
      for (int sn = 0; sn < S; ++sn) {
        double v = 0.0;
        double* gv = gv_next.data() + static_cast<size_t>(sn) * d;
        std::fill(gv, gv + d, 0.0);
        for (int an = 0; an < A; ++an) {
          const double p = pi_next.at(sn, an);
          const double qn = res.q.at(tn, sn, an);
          v += p * qn;
          const std::span<const double> gq = res.grads.grad_q(tn, sn, an);
          const std::span<const double> gp = res.grads.grad_pi(tn, sn, an);
          for (int i = 0; i < d; ++i) gv[i] += qn * gp[i] + p * gq[i];
        }
        v_next[static_cast<size_t>(sn)] = v;
      }

      Mlp::Workspace ws;
      std::vector<double> pgrad(static_cast<size_t>(d));
#pragma omp for
      for (int row = 0; row < S * A; ++row) {
        {
          const int s = row / A;
          const int a = row % A;
          const std::vector<double> f =
              encode_features(dynamics, s, a, mu_hat.at(t));
          const double r = reward_eval(params, f, S, pgrad, {}, ws);
          const std::span<double> gq = res.grads.grad_q(t, s, a);
          double value;
          if (!monte_carlo) {
            const std::span<const double> p = kernels.row(t, s, a);
            double cont = 0.0;
            for (int sn = 0; sn < S; ++sn) {
              cont += p[static_cast<size_t>(sn)] * v_next[static_cast<size_t>(sn)];
            }
            value = r + dynamics.discount * cont;
            if (fresh) {
              for (int i = 0; i < d; ++i) gq[static_cast<size_t>(i)] = pgrad[static_cast<size_t>(i)];
              for (int sn = 0; sn < S; ++sn) {
                const double w =
                    dynamics.discount * p[static_cast<size_t>(sn)];
                if (w == 0.0) continue;
                const double* gv = gv_next.data() + static_cast<size_t>(sn) * d;
                for (int i = 0; i < d; ++i) gq[static_cast<size_t>(i)] += w * gv[i];
              }
            }
          } else {
            std::mt19937_64 rng = make_stream(
                opts.seed,
                ((epoch * static_cast<std::uint64_t>(T + 1) + t) * S + s) * A +
                    a);
            const std::span<const double> p = kernels.row(t, s, a);
            // aggregate draws into per-state counts; point-mass kernels then
            // reproduce the exact expectation
            std::vector<int> hits(static_cast<size_t>(S), 0);
            for (int k = 0; k < opts.mc_samples; ++k) {
              hits[static_cast<size_t>(sample_categorical(p, rng))]++;
            }
            double cont = 0.0;
            if (fresh) std::copy(pgrad.begin(), pgrad.end(), gq.begin());
            for (int sn = 0; sn < S; ++sn) {
              if (hits[static_cast<size_t>(sn)] == 0) continue;
              const double frac = static_cast<double>(hits[static_cast<size_t>(sn)]) /
                                  opts.mc_samples;
              cont += frac * v_next[static_cast<size_t>(sn)];
              if (fresh) {
                const double w = dynamics.discount * frac;
                const double* gv = gv_next.data() + static_cast<size_t>(sn) * d;
                for (int i = 0; i < d; ++i) gq[static_cast<size_t>(i)] += w * gv[i];
              }
            }
            value = r + dynamics.discount * cont;
          }
          if (!std::isfinite(value)) {
#pragma omp critical
            {
              if (bad_cell < 0) {
                bad_cell = (static_cast<long>(t) * S + s) * A + a;
              }
            }
          }
          res.q.at(t, s, a) = value;
        }
      }
    }  // omp parallel
    if (bad_cell >= 0) {
      const int bt = static_cast<int>(bad_cell / (S * A));
      const int bs = static_cast<int>((bad_cell / A) % S);
      const int ba = static_cast<int>(bad_cell % A);
      throw DivergenceError("soft backward pass: non-finite value at (t=" +
                            std::to_string(bt) + ", s=" + std::to_string(bs) +
                            ", a=" + std::to_string(ba) + ")");
    }

    // Boltzmann rows and their gradients from the freshly filled level.
    std::vector<double> probs(static_cast<size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      detail::stable_softmax(res.q.row(t, s), opts.beta,
                             std::span<double>(probs).subspan(
                                 static_cast<size_t>(s) * A, A));
    }
    res.policy.steps[static_cast<size_t>(t)] = PerStepPolicy(S, A, probs);
    const PerStepPolicy& pi_t = res.policy.at(t);

    if (fresh) {
#pragma omp parallel for if (parallel)
      for (int s = 0; s < S; ++s) {
        std::vector<double> mean(static_cast<size_t>(d), 0.0);
        for (int a = 0; a < A; ++a) {
          const double p = pi_t.at(s, a);
          const std::span<const double> gq = res.grads.grad_q(t, s, a);
          for (int i = 0; i < d; ++i) mean[static_cast<size_t>(i)] += p * gq[static_cast<size_t>(i)];
        }
        for (int a = 0; a < A; ++a) {
          const double p = pi_t.at(s, a);
          const std::span<const double> gq = res.grads.grad_q(t, s, a);
          const std::span<double> gp = res.grads.grad_pi(t, s, a);
          for (int i = 0; i < d; ++i) {
            gp[static_cast<size_t>(i)] =
                p * opts.beta *
                (gq[static_cast<size_t>(i)] - mean[static_cast<size_t>(i)]);
          }
        }
      }
    }
  }
  return res;
}

}  // namespace

SoftBackwardResult soft_best_response_with_grads(
    const MfgSpec& dynamics, const MeanFieldFlow& mu_hat,
    const RewardParams& params, const MfirlOptions& opts,
    const GradientTables* prev_epoch_tables, std::uint64_t epoch) {
  return soft_backward_impl(dynamics, mu_hat, params, opts, prev_epoch_tables,
                            epoch, true);
}

SoftBackwardResult soft_best_response_with_grads_serial(
    const MfgSpec& dynamics, const MeanFieldFlow& mu_hat,
    const RewardParams& params, const MfirlOptions& opts,
    const GradientTables* prev_epoch_tables, std::uint64_t epoch) {
  return soft_backward_impl(dynamics, mu_hat, params, opts, prev_epoch_tables,
                            epoch, false);
}

ValueGrad empirical_expert_term(const MfgSpec& dynamics, const DemoSet& demos,
                                const MeanFieldFlow& mu_hat,
                                const RewardParams& params) {
  if (demos.trajectories.empty()) {
    throw ArgumentError("empirical_expert_term: empty demo set");
  }
  if (demos.horizon != dynamics.horizon ||
      mu_hat.horizon() != dynamics.horizon) {
    throw ContractError("empirical_expert_term: horizon mismatch");
  }
  const int S = dynamics.num_states;
  const int A = dynamics.num_actions;
  const int T = dynamics.horizon;
  const int M = demos.size();
  const int d = params.arch.param_count();

  // visit counts per (t,s,a); the demos revisit few distinct triples, so
  // one reward evaluation per triple replaces one per (trajectory, step)
  std::vector<long> counts(static_cast<size_t>(T) * S * A, 0);
  for (const Trajectory& tau : demos.trajectories) {
    for (int t = 0; t < T; ++t) {
      const int s = tau.states[static_cast<size_t>(t)];
      const int a = tau.actions[static_cast<size_t>(t)];
      if (s < 0 || s >= S || a < 0 || a >= A) {
        throw ContractError("empirical_expert_term: index out of range");
      }
      counts[(static_cast<size_t>(t) * S + s) * A + a]++;
    }
  }

  ValueGrad out;
  out.grad.assign(static_cast<size_t>(d), 0.0);
  Mlp::Workspace ws;
  std::vector<double> pgrad(static_cast<size_t>(d));
  double disc = 1.0;
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const long c = counts[(static_cast<size_t>(t) * S + s) * A + a];
        if (c == 0) continue;
        const std::vector<double> f = encode_features(dynamics, s, a, mu_hat.at(t));
        const double r = reward_eval(params, f, S, pgrad, {}, ws);
        const double w = disc * static_cast<double>(c) / M;
        out.value += w * r;
        for (int i = 0; i < d; ++i) {
          out.grad[static_cast<size_t>(i)] += w * pgrad[static_cast<size_t>(i)];
        }
      }
    }
    disc *= dynamics.discount;
  }
  return out;
}

MfirlObjective objective_and_grad(const MfgSpec& dynamics, const DemoSet& demos,
                                  const MeanFieldFlow& mu_hat,
                                  const RewardParams& params,
                                  const MfirlOptions& opts,
                                  const GradientTables* prev_epoch_tables,
                                  std::uint64_t epoch) {
  MfirlObjective out;
  out.backward = soft_best_response_with_grads(dynamics, mu_hat, params, opts,
                                               prev_epoch_tables, epoch);
  const ValueGrad expert =
      empirical_expert_term(dynamics, demos, mu_hat, params);

  const int S = dynamics.num_states;
  const int A = dynamics.num_actions;
  const int d = params.arch.param_count();
  const MeanField& mu0 = mu_hat.at(0);
  const PerStepPolicy& pi0 = out.backward.policy.at(0);

  double soft_return = 0.0;
  std::vector<double> soft_grad(static_cast<size_t>(d), 0.0);
  for (int s = 0; s < S; ++s) {
    if (mu0[s] == 0.0) continue;
    for (int a = 0; a < A; ++a) {
      const double q0 = out.backward.q.at(0, s, a);
      const double p0 = pi0.at(s, a);
      soft_return += mu0[s] * p0 * q0;
      const std::span<const double> gq = out.backward.grads.grad_q(0, s, a);
      const std::span<const double> gp = out.backward.grads.grad_pi(0, s, a);
      for (int i = 0; i < d; ++i) {
        soft_grad[static_cast<size_t>(i)] +=
            mu0[s] * (q0 * gp[static_cast<size_t>(i)] +
                      p0 * gq[static_cast<size_t>(i)]);
      }
    }
  }

  out.value = expert.value - soft_return;
  out.grad.assign(static_cast<size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    out.grad[static_cast<size_t>(i)] =
        expert.grad[static_cast<size_t>(i)] - soft_grad[static_cast<size_t>(i)];
  }
  return out;
}

MfirlTrainResult mfirl_train(const MfgSpec& dynamics, const DemoSet& demos,
                             const RewardArchitecture& arch,
                             const MfirlOptions& opts) {
  dynamics.validate();
  opts.validate(dynamics.horizon);
  if (demos.trajectories.empty()) {
    throw ArgumentError("mfirl_train: empty demo set");
  }
  if (demos.horizon != dynamics.horizon) {
    throw ArgumentError("mfirl_train: demo horizon does not match the spec");
  }
  if (arch.input_dim != 2 * dynamics.num_states + dynamics.num_actions) {
    throw ArgumentError("mfirl_train: architecture input dim mismatch");
  }

  const MeanFieldFlow mu_hat =
      estimate_mean_field_flow(demos, dynamics.num_states);

  MfirlTrainResult result;
  result.params = init_reward_params(arch, opts.seed);
  AdamState adam;
  GradientTables cache;
  bool have_cache = false;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    MfirlObjective obj;
    try {
      obj = objective_and_grad(dynamics, demos, mu_hat, result.params, opts,
                               have_cache ? &cache : nullptr,
                               static_cast<std::uint64_t>(epoch));
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (epoch " +
                            std::to_string(epoch) + ")");
    }
    if (!std::isfinite(obj.value)) {
      throw DivergenceError("mfirl_train: non-finite objective at epoch " +
                            std::to_string(epoch));
    }
    double norm = 0.0;
    for (double g : obj.grad) norm += g * g;
    result.objective_log.push_back(obj.value);
    result.grad_norm_log.push_back(std::sqrt(norm));

    adam_step(result.params.theta, obj.grad, adam, opts.lr);
    cache = std::move(obj.backward.grads);
    have_cache = true;
  }
  return result;
}

}  // namespace mfg
