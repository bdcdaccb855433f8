// Times the OpenMP kernels against their serial reference twins:
// the soft backward gradient pass (the training hot loop) and the
// N-agent population simulation. Results must agree bitwise; the
// benchmark reports the speedup.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mfg/core.hpp"
#include "mfg/demos.hpp"
#include "mfg/envs.hpp"
#include "mfg/mfirl.hpp"
#include "mfg/solvers.hpp"

using namespace mfg;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void bench_backward_pass() {
  const MfgSpec spec = make_env(EnvName::kMalware, EnvVariant::kOriginal);
  FixedPointOptions fp;
  fp.beta_soft = 1.0;
  fp.damping = 0.5;
  const EquilibriumResult expert = solve_mfne_fixed_point(spec, fp);
  const DemoSet demos =
      sample_trajectories(spec, expert.flow, expert.policy, 10, 100, 1);
  const MeanFieldFlow mu_hat =
      estimate_mean_field_flow(demos, spec.num_states);
  const RewardParams params = init_reward_params(
      RewardArchitecture::for_spec(spec, RewardArchKind::kMlp), 1);
  MfirlOptions opts;

  const int reps = 20;
  auto t0 = clock_type::now();
  SoftBackwardResult serial;
  for (int i = 0; i < reps; ++i) {
    serial = soft_best_response_with_grads_serial(spec.without_reward(),
                                                  mu_hat, params, opts);
  }
  const double t_serial = seconds_since(t0) / reps;

  t0 = clock_type::now();
  SoftBackwardResult parallel;
  for (int i = 0; i < reps; ++i) {
    parallel = soft_best_response_with_grads(spec.without_reward(), mu_hat,
                                             params, opts);
  }
  const double t_parallel = seconds_since(t0) / reps;

  const bool identical =
      serial.q.data() == parallel.q.data() &&
      serial.grads.grad_q_data() == parallel.grads.grad_q_data() &&
      serial.grads.grad_pi_data() == parallel.grads.grad_pi_data();
  std::printf(
      "backward gradient pass (MALWARE mlp, T=50, d=%d)\n"
      "  serial   %8.2f ms/pass\n"
      "  openmp   %8.2f ms/pass   speedup %.2fx   bitwise %s\n",
      params.arch.param_count(), 1e3 * t_serial, 1e3 * t_parallel,
      t_serial / t_parallel, identical ? "equal" : "DIFFERENT");
}

void bench_population() {
  const MfgSpec spec = make_env(EnvName::kVirus, EnvVariant::kOriginal);
  FixedPointOptions fp;
  fp.damping = 0.5;
  const EquilibriumResult expert = solve_mfne_fixed_point(spec, fp);
  const int agents = 200'000;

  auto t0 = clock_type::now();
  const auto serial = simulate_population_serial(spec, expert.policy,
                                                 expert.flow, agents, 7);
  const double t_serial = seconds_since(t0);

  t0 = clock_type::now();
  const auto parallel =
      simulate_population(spec, expert.policy, expert.flow, agents, 7);
  const double t_parallel = seconds_since(t0);

  std::printf(
      "population simulation (VIRUS, %d agents, T=50)\n"
      "  serial   %8.2f ms\n"
      "  openmp   %8.2f ms   speedup %.2fx   bitwise %s\n",
      agents, 1e3 * t_serial, 1e3 * t_parallel, t_serial / t_parallel,
      serial == parallel ? "equal" : "DIFFERENT");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n\n", omp_get_max_threads());
#else
  std::printf("built without openmp; both columns run serially\n\n");
#endif
  bench_backward_pass();
  std::printf("\n");
  bench_population();
  return 0;
}
