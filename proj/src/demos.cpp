#include "mfg/demos.hpp"

#include <fstream>

#include <json.hpp>

#include "mfg/core.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {

DemoSet sample_impl(const MfgSpec& spec, const MeanFieldFlow& flow,
                    const TimeVaryingPolicy& policy, int plays, int agents,
                    std::uint64_t seed, bool parallel) {
  spec.validate();
  if (flow.horizon() != spec.horizon || policy.horizon() != spec.horizon) {
    throw ArgumentError("sample_trajectories: flow/policy length mismatch");
  }
  if (plays < 1 || agents < 1) {
    throw ArgumentError("sample_trajectories: plays and agents must be >= 1");
  }
  const int T = spec.horizon;
  const int M = plays * agents;
  const FlowKernelCache kernels(spec.transition, flow);

  DemoSet demos;
  demos.trajectories.resize(static_cast<size_t>(M));
  demos.horizon = T;
  demos.seed = seed;
  demos.agents_per_play = agents;
  demos.plays = plays;

#pragma omp parallel for if (parallel) schedule(static)
  for (int j = 0; j < M; ++j) {
    std::mt19937_64 rng = make_stream(seed, static_cast<std::uint64_t>(j));
    Trajectory& tau = demos.trajectories[static_cast<size_t>(j)];
    tau.states.resize(static_cast<size_t>(T) + 1);
    tau.actions.resize(static_cast<size_t>(T) + 1);
    int s = sample_categorical(spec.initial_mean_field.probs(), rng);
    for (int t = 0; t <= T; ++t) {
      const int a = sample_categorical(policy.at(t).row(s), rng);
      tau.states[static_cast<size_t>(t)] = s;
      tau.actions[static_cast<size_t>(t)] = a;
      if (t < T) s = sample_categorical(kernels.row(t, s, a), rng);
    }
  }
  return demos;
}

}  // namespace

DemoSet sample_trajectories(const MfgSpec& spec, const MeanFieldFlow& flow,
                            const TimeVaryingPolicy& policy, int plays,
                            int agents, std::uint64_t seed) {
  return sample_impl(spec, flow, policy, plays, agents, seed, true);
}

DemoSet sample_trajectories_serial(const MfgSpec& spec,
                                   const MeanFieldFlow& flow,
                                   const TimeVaryingPolicy& policy, int plays,
                                   int agents, std::uint64_t seed) {
  return sample_impl(spec, flow, policy, plays, agents, seed, false);
}

namespace {
int observed_state_count(const DemoSet& demos, int num_states) {
  int max_seen = 0;
  for (const Trajectory& tau : demos.trajectories) {
    for (int s : tau.states) max_seen = std::max(max_seen, s + 1);
  }
  if (num_states == 0) return max_seen;
  if (max_seen > num_states) {
    throw ContractError("demo states exceed the declared state count");
  }
  return num_states;
}
}  // namespace

MeanFieldFlow estimate_mean_field_flow(const DemoSet& demos, int num_states) {
  if (demos.trajectories.empty()) {
    throw ArgumentError("estimate_mean_field_flow: empty demo set");
  }
  const int T = demos.horizon;
  const int M = demos.size();
  num_states = observed_state_count(demos, num_states);
  MeanFieldFlow flow;
  flow.fields.reserve(static_cast<size_t>(T) + 1);
  std::vector<double> freq;
  for (int t = 0; t <= T; ++t) {
    freq.assign(static_cast<size_t>(num_states), 0.0);
    for (const Trajectory& tau : demos.trajectories) {
      freq[static_cast<size_t>(tau.states[static_cast<size_t>(t)])] += 1.0;
    }
    for (double& f : freq) f /= M;
    flow.fields.emplace_back(std::move(freq));
    freq = {};
  }
  return flow;
}

TimeVaryingPolicy estimate_empirical_policy(const DemoSet& demos,
                                            int num_actions, int num_states) {
  if (demos.trajectories.empty()) {
    throw ArgumentError("estimate_empirical_policy: empty demo set");
  }
  num_states = observed_state_count(demos, num_states);
  const int T = demos.horizon;
  TimeVaryingPolicy policy;
  policy.steps.reserve(static_cast<size_t>(T) + 1);
  std::vector<double> counts(static_cast<size_t>(num_states) * num_actions);
  for (int t = 0; t <= T; ++t) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (const Trajectory& tau : demos.trajectories) {
      const int s = tau.states[static_cast<size_t>(t)];
      const int a = tau.actions[static_cast<size_t>(t)];
      if (a < 0 || a >= num_actions) {
        throw ContractError("estimate_empirical_policy: action out of range");
      }
      counts[static_cast<size_t>(s) * num_actions + a] += 1.0;
    }
    std::vector<double> probs(static_cast<size_t>(num_states) * num_actions);
    for (int s = 0; s < num_states; ++s) {
      double total = 0.0;
      for (int a = 0; a < num_actions; ++a) {
        total += counts[static_cast<size_t>(s) * num_actions + a];
      }
      for (int a = 0; a < num_actions; ++a) {
        probs[static_cast<size_t>(s) * num_actions + a] =
            total > 0.0
                ? counts[static_cast<size_t>(s) * num_actions + a] / total
                : 1.0 / num_actions;
      }
    }
    policy.steps.emplace_back(num_states, num_actions, std::move(probs));
  }
  return policy;
}

EmpiricalEstimates estimate_all(const DemoSet& demos, int num_actions,
                                int num_states) {
  return EmpiricalEstimates{
      estimate_mean_field_flow(demos, num_states),
      estimate_empirical_policy(demos, num_actions, num_states)};
}

void save_demos(const DemoSet& demos, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open " + path + " for writing");
  nlohmann::json meta{
      {"env", demos.env_name},          {"variant", demos.variant},
      {"horizon", demos.horizon},       {"seed", demos.seed},
      {"agents_per_play", demos.agents_per_play},
      {"plays", demos.plays},
  };
  out << meta.dump() << "\n";
  for (const Trajectory& tau : demos.trajectories) {
    nlohmann::json line{{"s", tau.states}, {"a", tau.actions}};
    out << line.dump() << "\n";
  }
  if (!out) throw IntegrityError("failed while writing " + path);
}

DemoSet load_demos(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open " + path);
  std::string line;
  long line_no = 0;

  auto parse_line = [&](const std::string& text) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
  };

  if (!std::getline(in, line)) {
    throw IntegrityError(path + ": missing metadata line");
  }
  ++line_no;
  const nlohmann::json meta = parse_line(line);

  DemoSet demos;
  try {
    demos.env_name = meta.at("env").get<std::string>();
    demos.variant = meta.at("variant").get<std::string>();
    demos.horizon = meta.at("horizon").get<int>();
    demos.seed = meta.at("seed").get<std::uint64_t>();
    demos.agents_per_play = meta.at("agents_per_play").get<int>();
    demos.plays = meta.at("plays").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad metadata: ") + e.what(), line_no);
  }

  const size_t expected_len = static_cast<size_t>(demos.horizon) + 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const nlohmann::json j = parse_line(line);
    Trajectory tau;
    try {
      tau.states = j.at("s").get<std::vector<int>>();
      tau.actions = j.at("a").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad trajectory: ") + e.what(), line_no);
    }
    if (tau.states.size() != expected_len ||
        tau.actions.size() != expected_len) {
      throw IntegrityError(path + ": trajectory at line " +
                           std::to_string(line_no) +
                           " does not match the declared horizon");
    }
    demos.trajectories.push_back(std::move(tau));
  }

  const long expected_m =
      static_cast<long>(demos.plays) * demos.agents_per_play;
  if (static_cast<long>(demos.trajectories.size()) != expected_m) {
    throw IntegrityError(path + ": expected " + std::to_string(expected_m) +
                         " trajectories, found " +
                         std::to_string(demos.trajectories.size()));
  }
  return demos;
}

}  // namespace mfg
