#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mfg/core.hpp"
#include "mfg/demos.hpp"
#include "mfg/envs.hpp"
#include "mfg/plirl.hpp"
#include "mfg/rng.hpp"
#include "test_util.hpp"

using namespace mfg;
namespace tu = mfg::testutil;

namespace {

EmpiricalEstimates mfso_estimates(const MfgSpec& spec, int plays, int agents,
                                  std::uint64_t seed) {
  const EquilibriumResult expert = solve_mfso(spec);
  const DemoSet demos =
      sample_trajectories(spec, expert.flow, expert.policy, plays, agents,
                          seed);
  return estimate_all(demos, spec.num_actions, spec.num_states);
}

}  // namespace

TEST_CASE("societal model: input layout and seeded initialisation") {
  const SocietalRewardModel a = init_societal_model(3, 2, 7);
  CHECK(a.input_dim() == 3 + 6);
  CHECK(a.theta.size() ==
        static_cast<size_t>(a.net().param_count()));
  const SocietalRewardModel b = init_societal_model(3, 2, 7);
  CHECK(a.theta == b.theta);
  CHECK_THROWS_AS(init_societal_model(0, 2, 7), ArgumentError);
}

TEST_CASE("model societal objective: gradient matches finite differences") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 5);
  const SocietalRewardModel model = init_societal_model(2, 2, 13);
  const ModelSocietal objective(model);
  const MfgSpec dyn = virus.without_reward();

  const int n = (virus.horizon + 1) * 2 * 2;
  std::mt19937_64 rng = make_stream(301, 0);
  std::vector<double> scores(static_cast<size_t>(n));
  for (double& z : scores) z = 0.6 * (2.0 * uniform01(rng) - 1.0);

  const auto [j0, grad] = reduced_mdp_objective_grad(dyn, objective, scores);
  const double h = 1e-5;
  double max_rel = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> plus = scores, minus = scores;
    plus[static_cast<size_t>(i)] += h;
    minus[static_cast<size_t>(i)] -= h;
    const double jp = reduced_mdp_objective_grad(dyn, objective, plus).first;
    const double jm = reduced_mdp_objective_grad(dyn, objective, minus).first;
    const double fd = (jp - jm) / (2.0 * h);
    const double diff = std::abs(fd - grad[static_cast<size_t>(i)]);
    if (diff > 1e-8) {
      max_rel = std::max(
          max_rel,
          diff / std::max(std::abs(fd), std::abs(grad[static_cast<size_t>(i)])));
    }
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("plirl_equilibrium: constant societal reward") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 10);
  SocietalRewardModel model = init_societal_model(2, 2, 0);
  std::fill(model.theta.begin(), model.theta.end(), 0.0);
  model.theta.back() = 2.0;  // output bias: rbar == 2 everywhere
  const EquilibriumResult eq =
      plirl_equilibrium(model, virus.without_reward(), MfsoOptions{});
  double expect = 0.0;
  double disc = 1.0;
  for (int t = 0; t < 10; ++t) {
    expect += disc * 2.0;
    disc *= virus.discount;
  }
  CHECK(std::abs(eq.expected_return - expect) <= 1e-9);
  CHECK_FALSE(eq.exploitability.has_value());
  const MeanFieldFlow replay =
      propagate_flow(virus.without_reward(), eq.policy);
  for (int t = 0; t <= 10; ++t) {
    for (int s = 0; s < 2; ++s) {
      CHECK(std::abs(replay.at(t)[s] - eq.flow.at(t)[s]) <= 1e-8);
    }
  }
}

TEST_CASE("ground-truth societal objective reproduces solve_mfso") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 15);
  const GroundTruthSocietal objective(virus, *virus.reward);
  const ReducedMdpSolution sol =
      solve_reduced_mdp(virus.without_reward(), objective, MfsoOptions{});
  const EquilibriumResult mfso = solve_mfso(virus);
  CHECK(std::abs(sol.objective - mfso.expected_return) <= 1e-4);
}

TEST_CASE("plirl_train: margins, determinism, cooperative recovery") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 15);
  const EmpiricalEstimates est = mfso_estimates(virus, 10, 100, 5);
  PlirlOptions opts;
  opts.outer_epochs = 25;
  opts.seed = 5;
  const PlirlTrainResult res = plirl_train(est, virus.without_reward(), opts);

  REQUIRE(res.margin_log.size() == 25);
  // the feasible-expert margin can never be positive: the inner solver is
  // warm-startable at the projected expert itself
  for (double m : res.feasible_margin_log) CHECK(m <= 1e-9);
  for (double m : res.margin_log) CHECK(std::isfinite(m));

  const PlirlTrainResult again =
      plirl_train(est, virus.without_reward(), opts);
  CHECK(again.model.theta == res.model.theta);
}

TEST_CASE("plirl_train: LR cooperative case closes the margin") {
  const MfgSpec lr = make_env(EnvName::kLr, EnvVariant::kOriginal, 20);
  const EmpiricalEstimates est = mfso_estimates(lr, 10, 100, 3);
  PlirlOptions opts;
  opts.outer_epochs = 40;
  opts.inner.max_steps = 200;
  opts.seed = 3;
  const PlirlTrainResult res = plirl_train(est, lr.without_reward(), opts);
  const double j_expert =
      res.margin_log.back() + res.inner_value_log.back();
  CHECK(std::abs(res.margin_log.back()) <=
        0.05 * std::max(std::abs(j_expert), 1.0));
}

TEST_CASE("societal model: save/load round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mfg_plirl_test";
  fs::create_directories(dir);
  const std::string path = (dir / "societal_reward.json").string();

  const SocietalRewardModel model = init_societal_model(3, 3, 11);
  save_societal_model(path, model, {{"env", "RPS"}});
  nlohmann::json meta;
  const SocietalRewardModel loaded = load_societal_model(path, &meta);
  CHECK(loaded.theta == model.theta);
  CHECK(loaded.num_states == 3);
  CHECK(meta.at("env") == "RPS");
  fs::remove_all(dir);
}
