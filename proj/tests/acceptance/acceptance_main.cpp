// Acceptance suite: one pass/fail line per criterion, exit code 0 only if
// every criterion holds. Each criterion pins its tolerances in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/demos.hpp"
#include "mfg/envs.hpp"
#include "mfg/experiment.hpp"
#include "mfg/metrics.hpp"
#include "mfg/mfirl.hpp"
#include "mfg/plirl.hpp"
#include "mfg/reward_model.hpp"
#include "mfg/rng.hpp"
#include "mfg/solvers.hpp"

using namespace mfg;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass,
            const std::string& detail, double seconds) {
  std::printf("[%s] %d. %s  (%s; %.1fs)\n", pass ? "PASS" : "FAIL", index,
              name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

/// Fixed-point options the experiment pipeline uses for Nash experts:
/// greedy responses with damping; the iteration may legitimately stop
/// unconverged on cycling models (recorded, not hidden).
FixedPointOptions nash_expert_options() {
  FixedPointOptions fp;
  fp.damping = 0.5;
  fp.max_iters = 1000;
  return fp;
}

// ---------------------------------------------------------------------------

void criterion_1_mkv_fidelity() {
  const auto t0 = clock_type::now();
  bool pass = true;
  std::ostringstream detail;
  for (EnvName name : all_env_names()) {
    const auto env_t0 = clock_type::now();
    const MfgSpec spec = make_env(name, EnvVariant::kOriginal);
    const EquilibriumResult expert =
        solve_mfne_fixed_point(spec, nash_expert_options());
    const auto freq =
        simulate_population(spec, expert.policy, expert.flow, 10'000, 4242);
    double worst = 0.0;
    for (int t = 0; t <= spec.horizon; ++t) {
      worst = std::max(worst, total_variation(freq[static_cast<size_t>(t)],
                                              expert.flow.at(t).probs()));
    }
    const double secs =
        std::chrono::duration<double>(clock_type::now() - env_t0).count();
    if (worst > 0.02 || secs > 60.0) pass = false;
    detail << to_string(name) << " tv=" << std::round(worst * 1e4) / 1e4
           << " ";
  }
  report(1, "MKV fidelity (10k agents vs flow, TV <= 0.02)", pass,
         detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

void criterion_2_return_calculus() {
  const auto t0 = clock_type::now();
  std::mt19937_64 rng = make_stream(20260809, 2);
  bool pass = true;
  double worst_identity = 0.0;
  int mc_failures = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int S = 2 + static_cast<int>(rng() % 4);
    const int A = 1 + static_cast<int>(rng() % 3);
    const int T = 1 + static_cast<int>(rng() % 5);

    MfgSpec spec;
    spec.num_states = S;
    spec.num_actions = A;
    spec.horizon = T;
    spec.discount = 0.9 + 0.1 * uniform01(rng);
    {
      std::vector<double> w(static_cast<size_t>(S));
      double sum = 0.0;
      for (double& x : w) {
        x = -std::log(1.0 - uniform01(rng));
        sum += x;
      }
      for (double& x : w) x /= sum;
      spec.initial_mean_field = MeanField(std::move(w));
    }
    {
      auto table = std::make_shared<std::vector<std::vector<double>>>();
      for (int i = 0; i < S * A; ++i) {
        std::vector<double> row(static_cast<size_t>(S));
        double sum = 0.0;
        for (double& x : row) {
          x = -std::log(1.0 - uniform01(rng));
          sum += x;
        }
        for (double& x : row) x /= sum;
        table->push_back(std::move(row));
      }
      spec.transition = TransitionKernel(
          S, A, [table, A](int s, int a, const MeanField&) {
            return (*table)[static_cast<size_t>(s) * A + a];
          });
    }
    {
      auto base = std::make_shared<std::vector<double>>();
      for (int i = 0; i < S * A; ++i) {
        base->push_back(2.0 * uniform01(rng) - 1.0);
      }
      spec.reward = RewardOracle([base, A](int s, int a, const MeanField& mu) {
        return (*base)[static_cast<size_t>(s) * A + a] + 0.25 * mu[0];
      });
    }

    TimeVaryingPolicy policy;
    for (int t = 0; t <= T; ++t) {
      std::vector<double> probs(static_cast<size_t>(S) * A);
      for (int s = 0; s < S; ++s) {
        double sum = 0.0;
        for (int a = 0; a < A; ++a) {
          probs[static_cast<size_t>(s) * A + a] =
              -std::log(1.0 - uniform01(rng));
          sum += probs[static_cast<size_t>(s) * A + a];
        }
        for (int a = 0; a < A; ++a) probs[static_cast<size_t>(s) * A + a] /= sum;
      }
      policy.steps.emplace_back(S, A, std::move(probs));
    }

    const MeanFieldFlow flow = propagate_flow(spec, policy);
    const double dp = expected_return(spec, flow, policy, *spec.reward);
    double societal_sum = 0.0;
    double disc = 1.0;
    for (int t = 0; t < T; ++t) {
      societal_sum +=
          disc * societal_reward(flow.at(t), policy.at(t), *spec.reward);
      disc *= spec.discount;
    }
    worst_identity = std::max(worst_identity, std::abs(dp - societal_sum));

    // Monte-Carlo rollout oracle
    const int rollouts = 100'000;
    double sum = 0.0, sumsq = 0.0;
    const FlowKernelCache kernels(spec.transition, flow);
    for (int i = 0; i < rollouts; ++i) {
      int s = sample_categorical(spec.initial_mean_field.probs(), rng);
      double ret = 0.0;
      double d = 1.0;
      for (int t = 0; t < T; ++t) {
        const int a = sample_categorical(policy.at(t).row(s), rng);
        ret += d * spec.reward->value(s, a, flow.at(t));
        d *= spec.discount;
        s = sample_categorical(kernels.row(t, s, a), rng);
      }
      sum += ret;
      sumsq += ret * ret;
    }
    const double mean = sum / rollouts;
    const double se =
        std::sqrt(std::max(sumsq / rollouts - mean * mean, 0.0) / rollouts);
    if (std::abs(dp - mean) > 3.0 * se + 1e-12) ++mc_failures;
  }
  // 100 draws at 3 standard errors: a couple of statistical misses are
  // within the test's own error budget, systematic failure is not
  if (worst_identity > 1e-9 || mc_failures > 3) pass = false;
  std::ostringstream detail;
  detail << "max |Eq.2-Eq.6| = " << worst_identity << ", MC misses "
         << mc_failures << "/100";
  report(2, "return-calculus consistency", pass, detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

void criterion_3_equilibrium_quality() {
  const auto t0 = clock_type::now();
  bool pass = true;
  std::ostringstream detail;

  // LR and VIRUS: converged greedy fixed points with zero exploitability
  for (EnvName name : {EnvName::kLr, EnvName::kVirus}) {
    const MfgSpec spec = make_env(name, EnvVariant::kOriginal);
    const EquilibriumResult ne =
        solve_mfne_fixed_point(spec, nash_expert_options());
    if (!ne.converged || !(*ne.exploitability <= 1e-6)) pass = false;
    detail << to_string(name) << " conv=" << ne.converged
           << " expl=" << *ne.exploitability << " ";
  }

  // social optimum dominates the fixed point everywhere
  for (EnvName name : all_env_names()) {
    const MfgSpec spec = make_env(name, EnvVariant::kOriginal);
    const EquilibriumResult ne =
        solve_mfne_fixed_point(spec, nash_expert_options());
    const EquilibriumResult so = solve_mfso(spec);
    if (!(so.expected_return >= ne.expected_return - 1e-6)) {
      pass = false;
      detail << to_string(name) << " MFSO<MFNE! ";
    }
  }

  // LR T=3: exhaustive enumeration over the 2^(3*3) deterministic choices
  {
    const MfgSpec lr3 = make_env(EnvName::kLr, EnvVariant::kOriginal, 3, 1.0);
    const EquilibriumResult so = solve_mfso(lr3);
    double best = -1e300;
    for (int combo = 0; combo < 512; ++combo) {
      TimeVaryingPolicy policy;
      for (int t = 0; t <= 3; ++t) {
        std::vector<double> probs(6, 0.0);
        for (int s = 0; s < 3; ++s) {
          const int bit = t < 3 ? (combo >> (t * 3 + s)) & 1 : 0;
          probs[static_cast<size_t>(s) * 2 + bit] = 1.0;
        }
        policy.steps.emplace_back(3, 2, std::move(probs));
      }
      const MeanFieldFlow flow = propagate_flow(lr3, policy);
      best = std::max(best,
                      expected_return(lr3, flow, policy, *lr3.reward));
    }
    if (std::abs(so.expected_return - best) > 1e-6) pass = false;
    detail << "LR3 mfso=" << so.expected_return << " enum=" << best;
  }

  report(3, "equilibrium quality (fixed point + MFSO dominance)", pass,
         detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

double guarded_rel_err(double fd, double grad) {
  const double diff = std::abs(fd - grad);
  if (diff <= 1e-8) return 0.0;
  return diff / std::max(std::abs(fd), std::abs(grad));
}

void criterion_4_gradients() {
  const auto t0 = clock_type::now();
  bool pass = true;
  std::ostringstream detail;

  // (a) reward-model gradients vs central differences
  {
    double worst = 0.0;
    for (EnvName name : {EnvName::kVirus, EnvName::kRps}) {
      const MfgSpec spec = make_env(name, EnvVariant::kOriginal, 5);
      std::mt19937_64 rng = make_stream(4, 1);
      for (RewardArchKind kind :
           {RewardArchKind::kLinear, RewardArchKind::kMlp}) {
        const RewardArchitecture arch =
            RewardArchitecture::for_spec(spec, kind);
        RewardParams params = init_reward_params(arch, rng());
        if (kind == RewardArchKind::kLinear) {
          for (double& th : params.theta) th = 2.0 * uniform01(rng) - 1.0;
        }
        const int d = arch.param_count();
        for (int probe = 0; probe < 40; ++probe) {
          std::vector<double> w(static_cast<size_t>(spec.num_states));
          double sum = 0.0;
          for (double& x : w) {
            x = -std::log(1.0 - uniform01(rng));
            sum += x;
          }
          for (double& x : w) x /= sum;
          const MeanField mu(w);
          const int s = static_cast<int>(rng() % spec.num_states);
          const int a = static_cast<int>(rng() % spec.num_actions);
          const auto grad = reward_grad(params, spec, s, a, mu);
          const int i = static_cast<int>(rng() % static_cast<unsigned>(d));
          const double h = 1e-6;
          RewardParams plus = params, minus = params;
          plus.theta[static_cast<size_t>(i)] += h;
          minus.theta[static_cast<size_t>(i)] -= h;
          const double fd = (reward_forward(plus, spec, s, a, mu) -
                             reward_forward(minus, spec, s, a, mu)) /
                            (2.0 * h);
          worst = std::max(worst,
                           guarded_rel_err(fd, grad[static_cast<size_t>(i)]));
        }
      }
    }
    if (worst > 1e-5) pass = false;
    detail << "reward " << worst << "; ";
  }

  // (b) full objective gradient vs finite differences of L
  {
    double worst = 0.0;
    for (EnvName name : {EnvName::kLr, EnvName::kVirus}) {
      const MfgSpec spec = make_env(name, EnvVariant::kOriginal, 5);
      const MfgSpec dyn = spec.without_reward();
      const EquilibriumResult eq =
          solve_mfne_fixed_point(spec, nash_expert_options());
      const DemoSet demos =
          sample_trajectories(spec, eq.flow, eq.policy, 3, 30, 4);
      const MeanFieldFlow mu_hat =
          estimate_mean_field_flow(demos, spec.num_states);
      RewardParams params = init_reward_params(
          RewardArchitecture::for_spec(spec, RewardArchKind::kLinear), 0);
      std::mt19937_64 rng = make_stream(4, 2);
      for (double& th : params.theta) th = 2.0 * uniform01(rng) - 1.0;
      MfirlOptions opts;
      const MfirlObjective base =
          objective_and_grad(dyn, demos, mu_hat, params, opts);
      const double h = 1e-5;
      for (size_t i = 0; i < params.theta.size(); ++i) {
        RewardParams plus = params, minus = params;
        plus.theta[i] += h;
        minus.theta[i] -= h;
        const double lp =
            objective_and_grad(dyn, demos, mu_hat, plus, opts).value;
        const double lm =
            objective_and_grad(dyn, demos, mu_hat, minus, opts).value;
        worst = std::max(worst,
                         guarded_rel_err((lp - lm) / (2.0 * h), base.grad[i]));
      }
    }
    if (worst > 1e-4) pass = false;
    detail << "mfirl L " << worst << "; ";
  }

  // (c) reduced-MDP dynamics gradient vs finite differences
  {
    double worst = 0.0;
    for (EnvName name : {EnvName::kLr, EnvName::kVirus}) {
      const MfgSpec spec = make_env(name, EnvVariant::kOriginal, 5);
      const GroundTruthSocietal obj(spec, *spec.reward);
      const int n = (spec.horizon + 1) * spec.num_states * spec.num_actions;
      std::mt19937_64 rng = make_stream(4, 3);
      std::vector<double> scores(static_cast<size_t>(n));
      for (double& z : scores) z = 0.8 * (2.0 * uniform01(rng) - 1.0);
      const auto [j0, grad] = reduced_mdp_objective_grad(spec, obj, scores);
      const double h = 1e-5;
      for (int i = 0; i < n; ++i) {
        std::vector<double> plus = scores, minus = scores;
        plus[static_cast<size_t>(i)] += h;
        minus[static_cast<size_t>(i)] -= h;
        const double jp = reduced_mdp_objective_grad(spec, obj, plus).first;
        const double jm = reduced_mdp_objective_grad(spec, obj, minus).first;
        worst = std::max(worst, guarded_rel_err((jp - jm) / (2.0 * h),
                                                grad[static_cast<size_t>(i)]));
      }
    }
    if (worst > 1e-4) pass = false;
    detail << "mfso dynamics " << worst;
  }

  report(4, "gradient correctness (reward, MFIRL L, MFSO)", pass,
         detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

void criterion_5_consistency_trend() {
  const auto t0 = clock_type::now();

  const MfgSpec lr = make_env(EnvName::kLr, EnvVariant::kOriginal);
  const EquilibriumResult expert = solve_mfso(lr);
  RewardParams theta_star = init_reward_params(
      RewardArchitecture::for_spec(lr, RewardArchKind::kLinear), 0);
  // the LR ground truth restricted to its equilibrium flow: a pure
  // state-cost of -1/2 at the two crowded positions
  theta_star.theta = {0.0, -0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0};

  std::vector<double> med_abs;
  std::ostringstream detail;
  for (int m : {100, 1000, 10'000}) {
    std::vector<double> vals;
    for (int resample = 0; resample < 10; ++resample) {
      const DemoSet demos = sample_trajectories(
          lr, expert.flow, expert.policy, 1, m,
          777 + static_cast<std::uint64_t>(resample));
      const MeanFieldFlow mu_hat = estimate_mean_field_flow(demos, 3);
      MfirlOptions opts;
      const MfirlObjective obj = objective_and_grad(
          lr.without_reward(), demos, mu_hat, theta_star, opts);
      vals.push_back(std::abs(obj.value));
    }
    med_abs.push_back(median(vals));
    detail << "M=" << m << ": " << med_abs.back() << "  ";
  }
  const bool pass =
      med_abs[1] <= med_abs[0] + 1e-12 && med_abs[2] <= med_abs[1] + 1e-12;
  report(5, "Theorem-1 consistency trend |L(w*)| non-increasing in M", pass,
         detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

void criterion_6_cooperative_recovery() {
  const auto t0 = clock_type::now();
  bool pass = true;
  std::ostringstream detail;
  struct Setting {
    EnvName env;
    int epochs;
    double lr;
  };
  // budgets from the pilot sweeps: LR needs only the small paper rate,
  // VIRUS is run to its converged optimum
  const Setting settings[] = {{EnvName::kLr, 500, 1e-4},
                              {EnvName::kVirus, 4000, 1e-3}};
  for (const Setting& setting : settings) {
    const MfgSpec spec = make_env(setting.env, EnvVariant::kOriginal);
    const EquilibriumResult expert = solve_mfso(spec);
    std::vector<double> devs, gaps;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const DemoSet demos = sample_trajectories(spec, expert.flow,
                                                expert.policy, 10, 100, seed);
      MfirlOptions opts;
      opts.epochs = setting.epochs;
      opts.lr = setting.lr;
      opts.seed = seed;
      const MfirlTrainResult trained = mfirl_train(
          spec.without_reward(), demos,
          RewardArchitecture::for_spec(spec, RewardArchKind::kLinear), opts);
      const MetricsReport rep = evaluate_individual_reward(
          spec, make_reward_oracle(spec, trained.params), expert,
          MfsoOptions{});
      devs.push_back(rep.dev_mf);
      gaps.push_back(
          std::abs(rep.expected_return_learned - rep.expected_return_expert) /
          std::abs(rep.expected_return_expert));
    }
    const double dev_med = median(devs);
    const double gap_med = median(gaps);
    const bool env_pass = dev_med <= 0.1 && gap_med <= 0.05;
    if (!env_pass) pass = false;
    detail << to_string(setting.env) << " dev_mf=" << dev_med
           << " gap=" << gap_med * 100 << "% ";
  }
  report(6, "cooperative reward recovery (LR, VIRUS; MFSO demos)", pass,
         detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

struct OrderingOutcome {
  double mfirl_dev, plirl_dev, mfirl_gap, plirl_gap;
};

OrderingOutcome bias_ordering(EnvName env, EnvVariant eval_variant,
                              int mfirl_epochs, double mfirl_lr) {
  const MfgSpec orig = make_env(env, EnvVariant::kOriginal);
  // Boltzmann responses make the fixed point converge on these models; the
  // demos then come from an actual (quantal) equilibrium
  FixedPointOptions fp = nash_expert_options();
  fp.beta_soft = 1.0;
  const EquilibriumResult expert_ne = solve_mfne_fixed_point(orig, fp);
  MfsoOptions eval_opts;
  eval_opts.max_steps = 2000;  // learned models are perceptrons; bound cost
  const MfgSpec eval_spec = make_env(env, eval_variant);
  const EquilibriumResult reference = solve_mfso(eval_spec, eval_opts);

  std::vector<double> mf_m, mf_p, gap_m, gap_p;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DemoSet demos = sample_trajectories(orig, expert_ne.flow,
                                              expert_ne.policy, 10, 100, seed);
    MfirlOptions mo;
    mo.epochs = mfirl_epochs;
    mo.lr = mfirl_lr;
    mo.seed = seed;
    const MfirlTrainResult mres = mfirl_train(
        orig.without_reward(), demos,
        RewardArchitecture::for_spec(orig, RewardArchKind::kLinear), mo);
    const MetricsReport mrep = evaluate_individual_reward(
        eval_spec, make_reward_oracle(eval_spec, mres.params), reference,
        eval_opts);

    PlirlOptions po;
    po.seed = seed;
    po.outer_epochs = 30;
    const EmpiricalEstimates est =
        estimate_all(demos, orig.num_actions, orig.num_states);
    const PlirlTrainResult pres =
        plirl_train(est, orig.without_reward(), po);
    const MetricsReport prep =
        evaluate_societal_reward(eval_spec, pres.model, reference, eval_opts);

    mf_m.push_back(mrep.dev_mf);
    mf_p.push_back(prep.dev_mf);
    gap_m.push_back(std::abs(mrep.expected_return_learned -
                             mrep.expected_return_expert));
    gap_p.push_back(std::abs(prep.expected_return_learned -
                             prep.expected_return_expert));
  }
  return {median(mf_m), median(mf_p), median(gap_m), median(gap_p)};
}

void criterion_7_bias_ordering() {
  const auto t0 = clock_type::now();
  const OrderingOutcome rps =
      bias_ordering(EnvName::kRps, EnvVariant::kOriginal, 2000, 1e-3);
  const bool pass = rps.mfirl_dev < rps.plirl_dev &&
                    rps.mfirl_gap < rps.plirl_gap;
  std::ostringstream detail;
  detail << "RPS dev " << rps.mfirl_dev << " vs " << rps.plirl_dev << ", gap "
         << rps.mfirl_gap << " vs " << rps.plirl_gap;
  report(7, "bias ordering on RPS (MFIRL < PLIRL)", pass, detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

void criterion_8_new_dynamics_ordering() {
  const auto t0 = clock_type::now();
  const OrderingOutcome rps =
      bias_ordering(EnvName::kRps, EnvVariant::kNew, 2000, 1e-3);
  const OrderingOutcome mal =
      bias_ordering(EnvName::kMalware, EnvVariant::kNew, 2000, 1e-3);
  const bool pass =
      rps.mfirl_dev < rps.plirl_dev && mal.mfirl_dev < mal.plirl_dev;
  std::ostringstream detail;
  detail << "RPS-new dev " << rps.mfirl_dev << " vs " << rps.plirl_dev
         << "; MALWARE-new dev " << mal.mfirl_dev << " vs " << mal.plirl_dev;
  report(8, "robustness ordering under new dynamics", pass, detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

void criterion_9_determinism_persistence() {
  const auto t0 = clock_type::now();
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mfg_acceptance";
  fs::create_directories(dir);
  bool pass = true;
  std::ostringstream detail;

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };

  // byte-identical demo files
  {
    const MfgSpec lr = make_env(EnvName::kLr, EnvVariant::kOriginal, 20);
    const EquilibriumResult expert = solve_mfso(lr);
    for (int run = 0; run < 2; ++run) {
      DemoSet demos = sample_trajectories(lr, expert.flow, expert.policy, 3,
                                          40, 99);
      demos.env_name = "LR";
      demos.variant = "original";
      save_demos(demos, (dir / ("demos" + std::to_string(run) + ".jsonl"))
                            .string());
    }
    if (slurp(dir / "demos0.jsonl") != slurp(dir / "demos1.jsonl")) {
      pass = false;
      detail << "demo bytes differ! ";
    }
    const DemoSet reloaded = load_demos((dir / "demos0.jsonl").string());
    DemoSet expected = sample_trajectories(lr, expert.flow, expert.policy, 3,
                                           40, 99);
    expected.env_name = "LR";
    expected.variant = "original";
    if (!(reloaded == expected)) {
      pass = false;
      detail << "demo round trip differs! ";
    }
  }

  // byte-identical experiment CSVs
  {
    ExperimentConfig cfg;
    cfg.envs = {EnvName::kLr};
    cfg.algorithms = {"mfirl"};
    cfg.plays = {1};
    cfg.agents = 20;
    cfg.seeds = {1};
    cfg.horizon = 8;
    cfg.mfirl_arch = RewardArchKind::kLinear;
    cfg.mfirl.epochs = 40;
    cfg.mfirl.lr = 1e-3;
    run_experiment(cfg, (dir / "a.csv").string());
    run_experiment(cfg, (dir / "b.csv").string());
    if (slurp(dir / "a.csv") != slurp(dir / "b.csv")) {
      pass = false;
      detail << "experiment bytes differ! ";
    }
  }

  // reward / societal / expert round trips
  {
    const MfgSpec rps = make_env(EnvName::kRps, EnvVariant::kOriginal, 10);
    const RewardParams params = init_reward_params(
        RewardArchitecture::for_spec(rps, RewardArchKind::kMlp), 3);
    save_reward_params((dir / "r.json").string(), params, {{"env", "RPS"}});
    if (load_reward_params((dir / "r.json").string()).theta != params.theta) {
      pass = false;
      detail << "reward round trip differs! ";
    }
    const SocietalRewardModel model = init_societal_model(3, 3, 4);
    save_societal_model((dir / "s.json").string(), model, {});
    if (load_societal_model((dir / "s.json").string()).theta != model.theta) {
      pass = false;
      detail << "societal round trip differs! ";
    }
    ExpertFile expert;
    expert.env = "RPS";
    expert.variant = "original";
    expert.solver = "mfne";
    expert.horizon = 10;
    expert.discount = 0.99;
    expert.result = solve_mfne_fixed_point(rps, nash_expert_options());
    save_expert((dir / "e.json").string(), expert);
    const ExpertFile back = load_expert((dir / "e.json").string());
    if (back.result.flow.fields != expert.result.flow.fields ||
        back.result.policy.steps != expert.result.policy.steps) {
      pass = false;
      detail << "expert round trip differs! ";
    }
  }

  fs::remove_all(dir);
  if (pass) detail << "all byte-stable";
  report(9, "determinism & persistence", pass, detail.str(),
         std::chrono::duration<double>(clock_type::now() - t0).count());
}

}  // namespace

int main() {
  const auto t0 = clock_type::now();
  criterion_1_mkv_fidelity();
  criterion_2_return_calculus();
  criterion_3_equilibrium_quality();
  criterion_4_gradients();
  criterion_5_consistency_trend();
  criterion_6_cooperative_recovery();
  criterion_7_bias_ordering();
  criterion_8_new_dynamics_ordering();
  criterion_9_determinism_persistence();
  std::printf("%d criteria failed; total %.1fs\n", g_failures,
              std::chrono::duration<double>(clock_type::now() - t0).count());
  return g_failures == 0 ? 0 : 1;
}
