#include "mfg/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mfg/core.hpp"
#include "mfg/demos.hpp"
#include "mfg/reward_model.hpp"

namespace mfg {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::json flow_to_json(const MeanFieldFlow& flow) {
  nlohmann::json j = nlohmann::json::array();
  for (const MeanField& mu : flow.fields) j.push_back(mu.probs());
  return j;
}

MeanFieldFlow flow_from_json(const nlohmann::json& j) {
  MeanFieldFlow flow;
  for (const auto& row : j) {
    flow.fields.emplace_back(row.get<std::vector<double>>());
  }
  return flow;
}

nlohmann::json policy_to_json(const TimeVaryingPolicy& policy) {
  nlohmann::json j = nlohmann::json::array();
  for (const PerStepPolicy& step : policy.steps) {
    nlohmann::json rows = nlohmann::json::array();
    for (int s = 0; s < step.num_states(); ++s) {
      rows.push_back(std::vector<double>(step.row(s).begin(),
                                         step.row(s).end()));
    }
    j.push_back(rows);
  }
  return j;
}

TimeVaryingPolicy policy_from_json(const nlohmann::json& j) {
  TimeVaryingPolicy policy;
  for (const auto& rows : j) {
    const int S = static_cast<int>(rows.size());
    const int A = static_cast<int>(rows.at(0).size());
    std::vector<double> probs;
    probs.reserve(static_cast<size_t>(S) * A);
    for (const auto& row : rows) {
      for (double v : row) probs.push_back(v);
    }
    policy.steps.emplace_back(S, A, std::move(probs));
  }
  return policy;
}

}  // namespace

void save_expert(const std::string& path, const ExpertFile& expert) {
  nlohmann::json j{
      {"env", expert.env},
      {"variant", expert.variant},
      {"solver", expert.solver},
      {"horizon", expert.horizon},
      {"discount", expert.discount},
      {"seed", expert.seed},
      {"flow", flow_to_json(expert.result.flow)},
      {"policy", policy_to_json(expert.result.policy)},
      {"expected_return", expert.result.expected_return},
      {"iterations", expert.result.iterations},
      {"converged", expert.result.converged},
  };
  if (expert.result.exploitability.has_value()) {
    j["exploitability"] = *expert.result.exploitability;
  } else {
    j["exploitability"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

ExpertFile load_expert(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid expert file: ") + e.what(), 1);
  }
  ExpertFile expert;
  try {
    expert.env = j.at("env").get<std::string>();
    expert.variant = j.at("variant").get<std::string>();
    expert.solver = j.at("solver").get<std::string>();
    expert.horizon = j.at("horizon").get<int>();
    expert.discount = j.at("discount").get<double>();
    expert.seed = j.value("seed", static_cast<std::uint64_t>(0));
    expert.result.flow = flow_from_json(j.at("flow"));
    expert.result.policy = policy_from_json(j.at("policy"));
    expert.result.expected_return = j.at("expected_return").get<double>();
    expert.result.iterations = j.at("iterations").get<int>();
    expert.result.converged = j.at("converged").get<bool>();
    if (!j.at("exploitability").is_null()) {
      expert.result.exploitability = j.at("exploitability").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(path + ": " + e.what());
  }
  if (expert.result.flow.horizon() != expert.horizon ||
      expert.result.policy.horizon() != expert.horizon) {
    throw IntegrityError(path + ": flow/policy length does not match horizon");
  }
  return expert;
}

void ExperimentConfig::validate() const {
  if (envs.empty()) throw ArgumentError("experiment config: empty env list");
  if (variants.empty()) {
    throw ArgumentError("experiment config: empty variant list");
  }
  if (algorithms.empty()) {
    throw ArgumentError("experiment config: empty algorithm list");
  }
  for (const std::string& a : algorithms) {
    if (a != "mfirl" && a != "plirl" && a != "oracle") {
      throw ArgumentError("experiment config: unknown algorithm " + a);
    }
  }
  if (plays.empty()) throw ArgumentError("experiment config: empty plays list");
  for (int p : plays) {
    if (p < 1) throw ArgumentError("experiment config: plays must be >= 1");
  }
  if (agents < 1) throw ArgumentError("experiment config: agents must be >= 1");
  if (seeds.empty()) throw ArgumentError("experiment config: empty seed list");
  if (expert_solver != "auto" && expert_solver != "mfne" &&
      expert_solver != "mfso") {
    throw ArgumentError("experiment config: unknown expert solver " +
                        expert_solver);
  }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.envs.clear();
  for (const auto& e : j.at("envs")) {
    cfg.envs.push_back(parse_env_name(e.get<std::string>()));
  }
  if (j.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : j["variants"]) {
      cfg.variants.push_back(parse_env_variant(v.get<std::string>()));
    }
  }
  if (j.contains("algorithms")) {
    cfg.algorithms = j["algorithms"].get<std::vector<std::string>>();
  }
  if (j.contains("plays")) cfg.plays = j["plays"].get<std::vector<int>>();
  cfg.agents = j.value("agents", cfg.agents);
  if (j.contains("seeds")) {
    cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.discount = j.value("discount", cfg.discount);
  cfg.expert_solver = j.value("expert_solver", cfg.expert_solver);

  if (j.contains("expert_fixed_point")) {
    const auto& f = j["expert_fixed_point"];
    cfg.expert_fixed_point.max_iters =
        f.value("max_iters", cfg.expert_fixed_point.max_iters);
    cfg.expert_fixed_point.mse_tol =
        f.value("mse_tol", cfg.expert_fixed_point.mse_tol);
    cfg.expert_fixed_point.damping =
        f.value("damping", cfg.expert_fixed_point.damping);
    if (f.contains("beta_soft")) {
      if (f["beta_soft"].is_null()) {
        cfg.expert_fixed_point.beta_soft.reset();
      } else {
        cfg.expert_fixed_point.beta_soft = f["beta_soft"].get<double>();
      }
    }
  }
  if (j.contains("mfso")) {
    const auto& f = j["mfso"];
    cfg.mfso.learning_rate = f.value("learning_rate", cfg.mfso.learning_rate);
    cfg.mfso.max_steps = f.value("max_steps", cfg.mfso.max_steps);
    cfg.mfso.grad_tol = f.value("grad_tol", cfg.mfso.grad_tol);
  }
  if (j.contains("mfirl")) {
    const auto& f = j["mfirl"];
    if (f.contains("arch")) {
      cfg.mfirl_arch = parse_reward_arch(f["arch"].get<std::string>());
    }
    cfg.mfirl.beta = f.value("beta", cfg.mfirl.beta);
    cfg.mfirl.epochs = f.value("epochs", cfg.mfirl.epochs);
    cfg.mfirl.lr = f.value("lr", cfg.mfirl.lr);
    if (f.contains("trunc") && !f["trunc"].is_null()) {
      cfg.mfirl.truncation_horizon = f["trunc"].get<int>();
    }
    if (f.contains("mode")) {
      const std::string mode = f["mode"].get<std::string>();
      if (mode == "exact") {
        cfg.mfirl.dynamics_mode = DynamicsMode::kExact;
      } else if (mode == "mc") {
        cfg.mfirl.dynamics_mode = DynamicsMode::kMonteCarlo;
      } else {
        throw ArgumentError("experiment config: unknown mfirl mode " + mode);
      }
    }
    cfg.mfirl.mc_samples = f.value("mc_samples", cfg.mfirl.mc_samples);
  }
  if (j.contains("plirl")) {
    const auto& f = j["plirl"];
    cfg.plirl.outer_epochs = f.value("outer_epochs", cfg.plirl.outer_epochs);
    cfg.plirl.outer_lr = f.value("outer_lr", cfg.plirl.outer_lr);
    cfg.plirl.inner.learning_rate =
        f.value("inner_learning_rate", cfg.plirl.inner.learning_rate);
    cfg.plirl.inner.max_steps =
        f.value("inner_max_steps", cfg.plirl.inner.max_steps);
    cfg.plirl.inner.grad_tol =
        f.value("inner_grad_tol", cfg.plirl.inner.grad_tol);
  }
  cfg.validate();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json envs_j = nlohmann::json::array();
  for (EnvName e : envs) envs_j.push_back(to_string(e));
  nlohmann::json variants_j = nlohmann::json::array();
  for (EnvVariant v : variants) variants_j.push_back(to_string(v));
  nlohmann::json j{
      {"envs", envs_j},
      {"variants", variants_j},
      {"algorithms", algorithms},
      {"plays", plays},
      {"agents", agents},
      {"seeds", seeds},
      {"horizon", horizon},
      {"discount", discount},
      {"expert_solver", expert_solver},
      {"expert_fixed_point",
       {{"max_iters", expert_fixed_point.max_iters},
        {"mse_tol", expert_fixed_point.mse_tol},
        {"damping", expert_fixed_point.damping}}},
      {"mfso",
       {{"learning_rate", mfso.learning_rate},
        {"max_steps", mfso.max_steps},
        {"grad_tol", mfso.grad_tol}}},
      {"mfirl",
       {{"arch", to_string(mfirl_arch)},
        {"beta", mfirl.beta},
        {"epochs", mfirl.epochs},
        {"lr", mfirl.lr},
        {"mode",
         mfirl.dynamics_mode == DynamicsMode::kExact ? "exact" : "mc"},
        {"mc_samples", mfirl.mc_samples}}},
      {"plirl",
       {{"outer_epochs", plirl.outer_epochs},
        {"outer_lr", plirl.outer_lr},
        {"inner_learning_rate", plirl.inner.learning_rate},
        {"inner_max_steps", plirl.inner.max_steps},
        {"inner_grad_tol", plirl.inner.grad_tol}}},
  };
  if (expert_fixed_point.beta_soft.has_value()) {
    j["expert_fixed_point"]["beta_soft"] = *expert_fixed_point.beta_soft;
  }
  if (mfirl.truncation_horizon.has_value()) {
    j["mfirl"]["trunc"] = *mfirl.truncation_horizon;
  }
  return j;
}

ExpertFile solve_expert(const ExperimentConfig& config, EnvName env) {
  const MfgSpec spec =
      make_env(env, EnvVariant::kOriginal, config.horizon, config.discount);
  const bool use_mfso = config.expert_solver == "mfso" ||
                        (config.expert_solver == "auto" && is_cooperative(env));
  ExpertFile expert;
  expert.env = to_string(env);
  expert.variant = to_string(EnvVariant::kOriginal);
  expert.horizon = config.horizon;
  expert.discount = config.discount;
  if (use_mfso) {
    expert.solver = "mfso";
    expert.result = solve_mfso(spec, config.mfso);
  } else {
    expert.solver = "mfne";
    expert.result = solve_mfne_fixed_point(spec, config.expert_fixed_point);
  }
  return expert;
}

namespace {

MetricsReport compare_to_reference(const MfgSpec& spec_eval,
                                   const EquilibriumResult& expert_ref,
                                   const EquilibriumResult& learned) {
  MetricsReport report;
  report.dev_policy = dev_policy(expert_ref.policy, learned.policy);
  report.dev_mf = dev_mf(expert_ref.flow, learned.flow);
  const RewardOracle& truth = spec_eval.reward_or_throw();
  report.expected_return_learned =
      expected_return(spec_eval, learned.flow, learned.policy, truth);
  report.expected_return_expert =
      expected_return(spec_eval, expert_ref.flow, expert_ref.policy, truth);
  return report;
}

}  // namespace

MetricsReport evaluate_individual_reward(const MfgSpec& spec_eval,
                                         const RewardOracle& learned,
                                         const EquilibriumResult& expert_ref,
                                         const MfsoOptions& opts) {
  MfgSpec spec_learned = spec_eval;
  spec_learned.reward = learned;
  const EquilibriumResult learned_eq = solve_mfso(spec_learned, opts);
  return compare_to_reference(spec_eval, expert_ref, learned_eq);
}

MetricsReport evaluate_societal_reward(const MfgSpec& spec_eval,
                                       const SocietalRewardModel& model,
                                       const EquilibriumResult& expert_ref,
                                       const MfsoOptions& opts) {
  const EquilibriumResult learned_eq =
      plirl_equilibrium(model, spec_eval.without_reward(), opts);
  return compare_to_reference(spec_eval, expert_ref, learned_eq);
}

std::string metrics_to_csv_row(const MetricsReport& r) {
  std::ostringstream out;
  out << r.env << ',' << r.variant << ',' << r.algorithm << ',' << r.plays
      << ',' << r.seed << ',' << format_double(r.dev_policy) << ','
      << format_double(r.dev_mf) << ','
      << format_double(r.expected_return_learned) << ','
      << format_double(r.expected_return_expert) << ',' << r.error;
  return out.str();
}

namespace {

std::string row_key(const std::string& env, const std::string& variant,
                    const std::string& algorithm, int plays,
                    std::uint64_t seed) {
  return env + '|' + variant + '|' + algorithm + '|' + std::to_string(plays) +
         '|' + std::to_string(seed);
}

/// Keys of completed rows (error rows count as completed) plus their raw
/// lines, in file order.
std::set<std::string> read_existing_rows(const std::string& path,
                                         std::vector<MetricsReport>* existing) {
  std::set<std::string> keys;
  std::ifstream in(path);
  if (!in) return keys;
  std::string line;
  if (!std::getline(in, line)) return keys;  // empty file
  if (line != kResultsCsvHeader) {
    throw IntegrityError(path + ": unexpected CSV header");
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string col;
    std::istringstream ls(line);
    while (std::getline(ls, col, ',')) cols.push_back(col);
    while (cols.size() < 10) cols.push_back("");
    if (cols.size() != 10) {
      throw ParseError(path + ": malformed results row", line_no);
    }
    MetricsReport r;
    r.env = cols[0];
    r.variant = cols[1];
    r.algorithm = cols[2];
    r.plays = std::stoi(cols[3]);
    r.seed = std::stoull(cols[4]);
    r.dev_policy = std::stod(cols[5]);
    r.dev_mf = std::stod(cols[6]);
    r.expected_return_learned = std::stod(cols[7]);
    r.expected_return_expert = std::stod(cols[8]);
    r.error = cols[9];
    keys.insert(row_key(r.env, r.variant, r.algorithm, r.plays, r.seed));
    if (existing != nullptr) existing->push_back(std::move(r));
  }
  return keys;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::string& out_csv,
                                 std::ostream* progress) {
  config.validate();
  ExperimentOutcome outcome;
  std::set<std::string> done = read_existing_rows(out_csv, &outcome.reports);
  for (const MetricsReport& r : outcome.reports) {
    if (!r.error.empty()) outcome.any_error = true;
  }

  std::ofstream out;
  if (done.empty()) {
    out.open(out_csv, std::ios::trunc);
    if (!out) throw IntegrityError("cannot open " + out_csv + " for writing");
    out << kResultsCsvHeader << "\n" << std::flush;
  } else {
    out.open(out_csv, std::ios::app);
    if (!out) throw IntegrityError("cannot open " + out_csv + " for append");
  }

  // caches reused across rows
  std::map<std::string, ExpertFile> experts;           // env
  std::map<std::string, EquilibriumResult> references;  // env|variant

  auto expert_for = [&](EnvName env) -> const ExpertFile& {
    const std::string key = to_string(env);
    auto it = experts.find(key);
    if (it == experts.end()) {
      if (progress != nullptr) {
        *progress << "[expert] solving " << key << "\n" << std::flush;
      }
      it = experts.emplace(key, solve_expert(config, env)).first;
    }
    return it->second;
  };
  auto reference_for = [&](EnvName env,
                           EnvVariant variant) -> const EquilibriumResult& {
    const std::string key = to_string(env) + '|' + to_string(variant);
    auto it = references.find(key);
    if (it == references.end()) {
      if (progress != nullptr) {
        *progress << "[reference] ground-truth MFSO for " << key << "\n"
                  << std::flush;
      }
      const MfgSpec spec =
          make_env(env, variant, config.horizon, config.discount);
      it = references.emplace(key, solve_mfso(spec, config.mfso)).first;
    }
    return it->second;
  };

  for (EnvName env : config.envs) {
    for (const std::string& algorithm : config.algorithms) {
      for (int plays : config.plays) {
        for (std::uint64_t seed : config.seeds) {
          // one training per (env, algorithm, plays, seed); evaluated on
          // every requested variant
          std::optional<RewardParams> learned_params;
          std::optional<SocietalRewardModel> learned_model;
          bool trained = false;

          for (EnvVariant variant : config.variants) {
            MetricsReport report;
            report.env = to_string(env);
            report.variant = to_string(variant);
            report.algorithm = algorithm;
            report.plays = plays;
            report.seed = seed;
            const std::string key =
                row_key(report.env, report.variant, algorithm, plays, seed);
            if (done.count(key) != 0) continue;

            try {
              const ExpertFile& expert = expert_for(env);
              const MfgSpec spec_orig = make_env(
                  env, EnvVariant::kOriginal, config.horizon, config.discount);
              if (!trained && algorithm != "oracle") {
                if (progress != nullptr) {
                  *progress << "[train] " << algorithm << " " << report.env
                            << " plays=" << plays << " seed=" << seed << "\n"
                            << std::flush;
                }
                const DemoSet demos = sample_trajectories(
                    spec_orig, expert.result.flow, expert.result.policy, plays,
                    config.agents, seed);
                if (algorithm == "mfirl") {
                  MfirlOptions opts = config.mfirl;
                  opts.seed = seed;
                  const RewardArchitecture arch =
                      RewardArchitecture::for_spec(spec_orig,
                                                   config.mfirl_arch);
                  learned_params =
                      mfirl_train(spec_orig.without_reward(), demos, arch, opts)
                          .params;
                } else {
                  PlirlOptions opts = config.plirl;
                  opts.seed = seed;
                  const EmpiricalEstimates estimates = estimate_all(
                      demos, spec_orig.num_actions, spec_orig.num_states);
                  learned_model =
                      plirl_train(estimates, spec_orig.without_reward(), opts)
                          .model;
                }
                trained = true;
              }

              const MfgSpec spec_eval =
                  make_env(env, variant, config.horizon, config.discount);
              const EquilibriumResult& reference = reference_for(env, variant);
              MetricsReport scored;
              if (algorithm == "oracle") {
                scored = evaluate_individual_reward(
                    spec_eval, spec_eval.reward_or_throw(), reference,
                    config.mfso);
              } else if (algorithm == "mfirl") {
                scored = evaluate_individual_reward(
                    spec_eval,
                    make_reward_oracle(spec_eval, *learned_params), reference,
                    config.mfso);
              } else {
                scored = evaluate_societal_reward(spec_eval, *learned_model,
                                                  reference, config.mfso);
              }
              report.dev_policy = scored.dev_policy;
              report.dev_mf = scored.dev_mf;
              report.expected_return_learned = scored.expected_return_learned;
              report.expected_return_expert = scored.expected_return_expert;
            } catch (const std::exception& e) {
              std::string what = e.what();
              // commas would break the CSV column structure
              for (char& c : what) {
                if (c == ',' || c == '\n') c = ';';
              }
              report.error = what;
              outcome.any_error = true;
            }

            out << metrics_to_csv_row(report) << "\n" << std::flush;
            outcome.reports.push_back(std::move(report));
          }
        }
      }
    }
  }
  return outcome;
}

}  // namespace mfg
