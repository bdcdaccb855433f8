#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mfg/core.hpp"
#include "mfg/demos.hpp"
#include "mfg/envs.hpp"
#include "mfg/rng.hpp"
#include "test_util.hpp"

using namespace mfg;
namespace tu = mfg::testutil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mfg_demos_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

DemoSet lr_demos(int plays, int agents, std::uint64_t seed, int horizon = 6) {
  const MfgSpec lr = make_env(EnvName::kLr, EnvVariant::kOriginal, horizon);
  TimeVaryingPolicy all_left;
  all_left.steps.assign(static_cast<size_t>(horizon) + 1,
                        PerStepPolicy::pure(3, 2, 0));
  const MeanFieldFlow flow = propagate_flow(lr, all_left);
  DemoSet demos =
      sample_trajectories(lr, flow, all_left, plays, agents, seed);
  demos.env_name = "LR";
  demos.variant = "original";
  return demos;
}

}  // namespace

TEST_CASE("sample_trajectories: deterministic spec gives two distinct paths") {
  const DemoSet demos = lr_demos(2, 50, 7);
  std::set<std::vector<int>> unique_states;
  for (const Trajectory& tau : demos.trajectories) {
    unique_states.insert(tau.states);
    for (int a : tau.actions) CHECK(a == 0);
    for (size_t t = 1; t < tau.states.size(); ++t) CHECK(tau.states[t] == 1);
  }
  CHECK(unique_states.size() == 2);  // the two starting positions
}

TEST_CASE("sample_trajectories: bit-identical for equal seeds") {
  const DemoSet a = lr_demos(3, 20, 42);
  const DemoSet b = lr_demos(3, 20, 42);
  CHECK(a == b);
  const DemoSet c = lr_demos(3, 20, 43);
  CHECK(a.trajectories != c.trajectories);
}

TEST_CASE("sample_trajectories: parallel equals serial") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 12);
  const TimeVaryingPolicy uniform = TimeVaryingPolicy::uniform(12, 2, 2);
  const MeanFieldFlow flow = propagate_flow(virus, uniform);
  const DemoSet par = sample_trajectories(virus, flow, uniform, 5, 200, 99);
  const DemoSet ser =
      sample_trajectories_serial(virus, flow, uniform, 5, 200, 99);
  CHECK(par == ser);
}

TEST_CASE("sample_trajectories: state frequencies track the flow") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 10);
  const TimeVaryingPolicy uniform = TimeVaryingPolicy::uniform(10, 2, 2);
  const MeanFieldFlow flow = propagate_flow(virus, uniform);
  const DemoSet demos =
      sample_trajectories(virus, flow, uniform, 100, 1000, 11);
  const MeanFieldFlow mu_hat = estimate_mean_field_flow(demos, 2);
  for (int t = 0; t <= 10; ++t) {
    CHECK(tu::total_variation(mu_hat.at(t).probs(), flow.at(t).probs()) <=
          0.02);
  }
}

TEST_CASE("estimate_mean_field_flow: hand-counted values") {
  DemoSet demos;
  demos.horizon = 1;
  demos.plays = 1;
  demos.agents_per_play = 2;
  demos.trajectories = {Trajectory{{1, 1}, {0, 0}}, Trajectory{{1, 0}, {0, 0}}};
  const MeanFieldFlow flow = estimate_mean_field_flow(demos, 3);
  CHECK(flow.at(0)[1] == doctest::Approx(1.0));
  CHECK(flow.at(1)[0] == doctest::Approx(0.5));
  CHECK(flow.at(1)[1] == doctest::Approx(0.5));
  CHECK(flow.at(1)[2] == doctest::Approx(0.0));

  CHECK_THROWS_AS(estimate_mean_field_flow(DemoSet{}), ArgumentError);
}

TEST_CASE("estimate_empirical_policy: recovery and the uniform fallback") {
  const DemoSet demos = lr_demos(5, 40, 3);
  const TimeVaryingPolicy pi_hat = estimate_empirical_policy(demos, 2, 3);
  for (int t = 0; t <= demos.horizon; ++t) {
    // visited states recover the pure expert exactly
    CHECK(pi_hat.at(t).at(1, 0) == doctest::Approx(1.0));
    // center is never visited: uniform by convention
    CHECK(pi_hat.at(t).at(0, 0) == doctest::Approx(0.5));
    CHECK(pi_hat.at(t).at(0, 1) == doctest::Approx(0.5));
  }
}

TEST_CASE("estimate_empirical_policy: consistency on well-visited states") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 8);
  std::mt19937_64 rng = make_stream(4, 0);
  const TimeVaryingPolicy policy = tu::random_policy(8, 2, 2, rng);
  const MeanFieldFlow flow = propagate_flow(virus, policy);
  const DemoSet demos =
      sample_trajectories(virus, flow, policy, 1000, 100, 21);
  const TimeVaryingPolicy pi_hat = estimate_empirical_policy(demos, 2, 2);
  for (int t = 0; t <= 8; ++t) {
    for (int s = 0; s < 2; ++s) {
      if (flow.at(t)[s] < 0.05) continue;
      CHECK(tu::total_variation(pi_hat.at(t).row(s), policy.at(t).row(s)) <=
            0.03);
    }
  }
}

TEST_CASE("property: unbiasedness of the flow estimator at desk scale") {
  const MfgSpec virus = make_env(EnvName::kVirus, EnvVariant::kOriginal, 6);
  const TimeVaryingPolicy uniform = TimeVaryingPolicy::uniform(6, 2, 2);
  const MeanFieldFlow flow = propagate_flow(virus, uniform);
  const int sets = 200;
  const int m = 100;
  std::vector<std::vector<double>> mean(
      7, std::vector<double>(2, 0.0));
  for (int k = 0; k < sets; ++k) {
    const DemoSet demos = sample_trajectories(virus, flow, uniform, 1, m,
                                              1000 + static_cast<std::uint64_t>(k));
    const MeanFieldFlow mu_hat = estimate_mean_field_flow(demos, 2);
    for (int t = 0; t <= 6; ++t) {
      for (int s = 0; s < 2; ++s) mean[static_cast<size_t>(t)][static_cast<size_t>(s)] += mu_hat.at(t)[s];
    }
  }
  for (int t = 0; t <= 6; ++t) {
    for (int s = 0; s < 2; ++s) {
      const double p = flow.at(t)[s];
      const double se =
          std::sqrt(std::max(p * (1.0 - p), 1e-12) / (sets * m));
      CHECK(std::abs(mean[static_cast<size_t>(t)][static_cast<size_t>(s)] / sets - p) <=
            3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("save/load: lossless round trip on randomized demo sets") {
  TempDir dir;
  std::mt19937_64 rng = make_stream(5, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const int plays = 1 + static_cast<int>(rng() % 4);
    const int agents = 1 + static_cast<int>(rng() % 30);
    DemoSet demos = lr_demos(plays, agents, rng());
    const std::string path = dir.file("demos.jsonl");
    save_demos(demos, path);
    const DemoSet loaded = load_demos(path);
    CHECK(loaded == demos);
  }
}

TEST_CASE("save/load: file format is metadata line plus s/a lines") {
  TempDir dir;
  const DemoSet demos = lr_demos(1, 2, 9, 2);
  const std::string path = dir.file("demos.jsonl");
  save_demos(demos, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("\"env\":\"LR\"") != std::string::npos);
  REQUIRE(std::getline(in, line));
  CHECK(line.find("\"s\":[") != std::string::npos);
  CHECK(line.find("\"a\":[") != std::string::npos);
}

TEST_CASE("load_demos: malformed and truncated files are rejected") {
  TempDir dir;
  const DemoSet demos = lr_demos(2, 3, 12, 3);
  const std::string path = dir.file("demos.jsonl");
  save_demos(demos, path);

  SUBCASE("malformed line reports its number") {
    std::ifstream in(path);
    std::string all, line;
    int n = 0;
    while (std::getline(in, line)) {
      all += (++n == 3) ? "{not json}\n" : line + "\n";
    }
    const std::string bad = dir.file("bad.jsonl");
    std::ofstream(bad) << all;
    try {
      load_demos(bad);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing trajectories are an integrity error") {
    std::ifstream in(path);
    std::string all, line;
    int n = 0;
    while (std::getline(in, line) && ++n <= 4) all += line + "\n";
    const std::string cut = dir.file("cut.jsonl");
    std::ofstream(cut) << all;
    CHECK_THROWS_AS(load_demos(cut), IntegrityError);
  }
  SUBCASE("trajectory/horizon mismatch is an integrity error") {
    std::ofstream out(dir.file("mismatch.jsonl"));
    out << R"({"env":"LR","variant":"original","horizon":3,"seed":1,)"
        << R"("agents_per_play":1,"plays":1})" << "\n";
    out << R"({"s":[1,1],"a":[0,0]})" << "\n";
    out.close();
    CHECK_THROWS_AS(load_demos(dir.file("mismatch.jsonl")), IntegrityError);
  }
}

TEST_CASE("load_demos: 10 plays x 100 agents x T=50 parses quickly") {
  TempDir dir;
  const MfgSpec lr = make_env(EnvName::kLr, EnvVariant::kOriginal, 50);
  const TimeVaryingPolicy uniform = TimeVaryingPolicy::uniform(50, 3, 2);
  const MeanFieldFlow flow = propagate_flow(lr, uniform);
  DemoSet demos = sample_trajectories(lr, flow, uniform, 10, 100, 1);
  demos.env_name = "LR";
  demos.variant = "original";
  const std::string path = dir.file("big.jsonl");
  save_demos(demos, path);
  const auto t0 = std::chrono::steady_clock::now();
  const DemoSet loaded = load_demos(path);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(loaded.size() == 1000);
  CHECK(secs < 1.0);
}
