// Command-line front end: environment catalog, expert solving, trajectory
// sampling, reward training, evaluation, and the full experiment sweep.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mfg/core.hpp"
#include "mfg/demos.hpp"
#include "mfg/envs.hpp"
#include "mfg/experiment.hpp"
#include "mfg/metrics.hpp"
#include "mfg/mfirl.hpp"
#include "mfg/plirl.hpp"
#include "mfg/reward_model.hpp"
#include "mfg/solvers.hpp"

namespace {

using namespace mfg;

void write_training_log(const std::string& path,
                        const std::vector<double>& objective,
                        const std::vector<double>& grad_norm) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot open " + path + " for writing");
  out << "epoch,L,grad_norm\n";
  for (size_t i = 0; i < objective.size(); ++i) {
    out << i << ',' << format_double(objective[i]) << ','
        << format_double(grad_norm[i]) << "\n";
  }
}

MfgSpec spec_from_expert(const ExpertFile& expert) {
  return make_env(parse_env_name(expert.env),
                  parse_env_variant(expert.variant), expert.horizon,
                  expert.discount);
}

int run(int argc, char** argv) {
  CLI::App app{"Finite-horizon mean field game solvers and inverse RL"};
  app.require_subcommand(1);

  // ---- env ----
  auto* env_cmd = app.add_subcommand("env", "environment catalog");
  env_cmd->require_subcommand(1);
  env_cmd->add_subcommand("list", "list environment names")
      ->callback([] {
        for (EnvName name : all_env_names()) {
          std::cout << to_string(name) << "\n";
        }
      });
  {
    auto* describe = env_cmd->add_subcommand("describe",
                                             "emit a JSON description");
    auto name = std::make_shared<std::string>();
    auto variant = std::make_shared<std::string>("original");
    describe->add_option("name", *name, "environment name")->required();
    describe->add_option("--variant", *variant, "original|new");
    describe->callback([name, variant] {
      std::cout << env_description(parse_env_name(*name),
                                   parse_env_variant(*variant))
                       .dump(2)
                << "\n";
    });
  }

  // ---- expert ----
  struct ExpertArgs {
    std::string env, variant = "original", solver = "auto", out;
    int horizon = 50;
    double discount = 0.99;
    FixedPointOptions fp;
    double beta_soft = 0.0;
    MfsoOptions so;
  };
  auto ea = std::make_shared<ExpertArgs>();
  {
    auto* cmd = app.add_subcommand("expert", "solve a forward equilibrium");
    cmd->add_option("--env", ea->env)->required();
    cmd->add_option("--variant", ea->variant, "original|new");
    cmd->add_option("--solver", ea->solver, "mfne|mfso|auto");
    cmd->add_option("--horizon", ea->horizon);
    cmd->add_option("--discount", ea->discount);
    cmd->add_option("--max-iters", ea->fp.max_iters, "fixed-point iterations");
    cmd->add_option("--mse-tol", ea->fp.mse_tol);
    cmd->add_option("--damping", ea->fp.damping);
    cmd->add_option("--beta-soft", ea->beta_soft,
                    "Boltzmann best responses with this beta (0 = greedy)");
    cmd->add_option("--lr", ea->so.learning_rate, "mfso ascent rate");
    cmd->add_option("--max-steps", ea->so.max_steps);
    cmd->add_option("--grad-tol", ea->so.grad_tol);
    cmd->add_option("--out", ea->out)->required();
    cmd->callback([ea] {
      const EnvName env = parse_env_name(ea->env);
      const EnvVariant variant = parse_env_variant(ea->variant);
      const MfgSpec spec = make_env(env, variant, ea->horizon, ea->discount);
      std::string solver = ea->solver;
      if (solver == "auto") solver = is_cooperative(env) ? "mfso" : "mfne";
      ExpertFile expert;
      expert.env = to_string(env);
      expert.variant = to_string(variant);
      expert.solver = solver;
      expert.horizon = ea->horizon;
      expert.discount = ea->discount;
      if (solver == "mfso") {
        expert.result = solve_mfso(spec, ea->so);
      } else if (solver == "mfne") {
        FixedPointOptions fp = ea->fp;
        if (ea->beta_soft > 0.0) fp.beta_soft = ea->beta_soft;
        expert.result = solve_mfne_fixed_point(spec, fp);
      } else {
        throw ArgumentError("unknown solver: " + solver);
      }
      save_expert(ea->out, expert);
      std::cout << "solver=" << solver
                << " converged=" << expert.result.converged
                << " iterations=" << expert.result.iterations
                << " return=" << format_double(expert.result.expected_return);
      if (expert.result.exploitability.has_value()) {
        std::cout << " exploitability="
                  << format_double(*expert.result.exploitability);
      }
      std::cout << "\n";
      if (!expert.result.converged) {
        std::cerr << "warning: solver did not reach its tolerance\n";
      }
    });
  }

  // ---- sample ----
  struct SampleArgs {
    std::string expert, out;
    int plays = 10, agents = 100;
    std::uint64_t seed = 0;
  };
  auto sa = std::make_shared<SampleArgs>();
  {
    auto* cmd = app.add_subcommand("sample", "sample expert demonstrations");
    cmd->add_option("--expert", sa->expert)->required();
    cmd->add_option("--plays", sa->plays)->required();
    cmd->add_option("--agents", sa->agents);
    cmd->add_option("--seed", sa->seed)->required();
    cmd->add_option("--out", sa->out)->required();
    cmd->callback([sa] {
      const ExpertFile expert = load_expert(sa->expert);
      const MfgSpec spec = spec_from_expert(expert);
      DemoSet demos =
          sample_trajectories(spec, expert.result.flow, expert.result.policy,
                              sa->plays, sa->agents, sa->seed);
      demos.env_name = expert.env;
      demos.variant = expert.variant;
      save_demos(demos, sa->out);
      std::cout << "wrote " << demos.size() << " trajectories to " << sa->out
                << "\n";
    });
  }

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "reward inference");
  train_cmd->require_subcommand(1);
  struct MfirlArgs {
    std::string demos, env, variant = "original", arch = "mlp", mode = "exact";
    std::string out, log;
    MfirlOptions opts;
    int trunc = 0;
    int horizon = 50;
    double discount = 0.99;
  };
  auto ma = std::make_shared<MfirlArgs>();
  {
    auto* cmd = train_cmd->add_subcommand(
        "mfirl", "individual reward from trajectories");
    cmd->add_option("--demos", ma->demos)->required();
    cmd->add_option("--env", ma->env)->required();
    cmd->add_option("--variant", ma->variant);
    cmd->add_option("--arch", ma->arch, "linear|mlp");
    cmd->add_option("--beta", ma->opts.beta);
    cmd->add_option("--epochs", ma->opts.epochs);
    cmd->add_option("--lr", ma->opts.lr);
    cmd->add_option("--trunc", ma->trunc, "truncation horizon (0 = full)");
    cmd->add_option("--mode", ma->mode, "exact|mc");
    cmd->add_option("--mc-samples", ma->opts.mc_samples);
    cmd->add_option("--seed", ma->opts.seed)->required();
    cmd->add_option("--horizon", ma->horizon);
    cmd->add_option("--discount", ma->discount);
    cmd->add_option("--out", ma->out)->required();
    cmd->add_option("--log", ma->log, "training log CSV");
    cmd->callback([ma] {
      const DemoSet demos = load_demos(ma->demos);
      const MfgSpec spec =
          make_env(parse_env_name(ma->env), parse_env_variant(ma->variant),
                   demos.horizon > 0 ? demos.horizon : ma->horizon,
                   ma->discount);
      MfirlOptions opts = ma->opts;
      if (ma->trunc > 0) opts.truncation_horizon = ma->trunc;
      opts.dynamics_mode = ma->mode == "mc" ? DynamicsMode::kMonteCarlo
                                            : DynamicsMode::kExact;
      const RewardArchitecture arch = RewardArchitecture::for_spec(
          spec, parse_reward_arch(ma->arch));
      const MfirlTrainResult result =
          mfirl_train(spec.without_reward(), demos, arch, opts);
      save_reward_params(ma->out, result.params,
                         {{"env", ma->env},
                          {"variant", ma->variant},
                          {"seed", opts.seed},
                          {"beta", opts.beta},
                          {"epochs", opts.epochs},
                          {"lr", opts.lr},
                          {"mode", ma->mode}});
      const std::string log_path =
          ma->log.empty() ? ma->out + ".log.csv" : ma->log;
      write_training_log(log_path, result.objective_log,
                         result.grad_norm_log);
      std::cout << "final L=" << format_double(result.objective_log.back())
                << " params=" << result.params.theta.size() << " log="
                << log_path << "\n";
    });
  }
  struct PlirlArgs {
    std::string demos, env, variant = "original", out, log;
    PlirlOptions opts;
    double discount = 0.99;
  };
  auto pa = std::make_shared<PlirlArgs>();
  {
    auto* cmd = train_cmd->add_subcommand(
        "plirl", "societal reward from population estimates");
    cmd->add_option("--demos", pa->demos)->required();
    cmd->add_option("--env", pa->env)->required();
    cmd->add_option("--variant", pa->variant);
    cmd->add_option("--epochs", pa->opts.outer_epochs);
    cmd->add_option("--outer-lr", pa->opts.outer_lr);
    cmd->add_option("--inner-steps", pa->opts.inner.max_steps);
    cmd->add_option("--inner-lr", pa->opts.inner.learning_rate);
    cmd->add_option("--seed", pa->opts.seed)->required();
    cmd->add_option("--discount", pa->discount);
    cmd->add_option("--out", pa->out)->required();
    cmd->add_option("--log", pa->log, "training log CSV");
    cmd->callback([pa] {
      const DemoSet demos = load_demos(pa->demos);
      const MfgSpec spec =
          make_env(parse_env_name(pa->env), parse_env_variant(pa->variant),
                   demos.horizon, pa->discount);
      const EmpiricalEstimates estimates =
          estimate_all(demos, spec.num_actions, spec.num_states);
      const PlirlTrainResult result =
          plirl_train(estimates, spec.without_reward(), pa->opts);
      save_societal_model(pa->out, result.model,
                          {{"env", pa->env},
                           {"variant", pa->variant},
                           {"seed", pa->opts.seed},
                           {"outer_epochs", pa->opts.outer_epochs}});
      const std::string log_path =
          pa->log.empty() ? pa->out + ".log.csv" : pa->log;
      std::ofstream log(log_path);
      log << "epoch,margin,feasible_margin,inner_value\n";
      for (size_t i = 0; i < result.margin_log.size(); ++i) {
        log << i << ',' << format_double(result.margin_log[i]) << ','
            << format_double(result.feasible_margin_log[i]) << ','
            << format_double(result.inner_value_log[i]) << "\n";
      }
      std::cout << "final margin="
                << format_double(result.margin_log.back()) << " log="
                << log_path << "\n";
    });
  }

  // ---- eval ----
  struct EvalArgs {
    std::string env, variant = "original", reward, societal, out;
    bool oracle = false;
    int horizon = 50;
    double discount = 0.99;
    MfsoOptions so;
  };
  auto va = std::make_shared<EvalArgs>();
  {
    auto* cmd = app.add_subcommand(
        "eval", "score a learned reward against the ground-truth optimum");
    cmd->add_option("--env", va->env)->required();
    cmd->add_option("--variant", va->variant);
    cmd->add_option("--reward", va->reward, "reward.json (individual)");
    cmd->add_option("--societal", va->societal, "societal_reward.json");
    cmd->add_flag("--oracle", va->oracle,
                  "evaluate the ground-truth reward against itself");
    cmd->add_option("--horizon", va->horizon);
    cmd->add_option("--discount", va->discount);
    cmd->add_option("--out", va->out, "metrics JSON path");
    cmd->callback([va] {
      const MfgSpec spec =
          make_env(parse_env_name(va->env), parse_env_variant(va->variant),
                   va->horizon, va->discount);
      const EquilibriumResult reference = solve_mfso(spec, va->so);
      MetricsReport report;
      if (va->oracle) {
        report = evaluate_individual_reward(spec, spec.reward_or_throw(),
                                            reference, va->so);
        report.algorithm = "oracle";
      } else if (!va->reward.empty()) {
        const RewardParams params = load_reward_params(va->reward);
        report = evaluate_individual_reward(
            spec, make_reward_oracle(spec, params), reference, va->so);
        report.algorithm = "mfirl";
      } else if (!va->societal.empty()) {
        const SocietalRewardModel model = load_societal_model(va->societal);
        report = evaluate_societal_reward(spec, model, reference, va->so);
        report.algorithm = "plirl";
      } else {
        throw ArgumentError(
            "eval needs --reward, --societal, or --oracle");
      }
      report.env = va->env;
      report.variant = va->variant;
      const nlohmann::json j{
          {"env", report.env},
          {"variant", report.variant},
          {"algorithm", report.algorithm},
          {"dev_policy", report.dev_policy},
          {"dev_mf", report.dev_mf},
          {"expected_return_learned", report.expected_return_learned},
          {"expected_return_expert", report.expected_return_expert},
      };
      if (!va->out.empty()) {
        std::ofstream out(va->out);
        out << j.dump(2) << "\n";
      }
      std::cout << j.dump(2) << "\n";
    });
  }

  // ---- experiment ----
  struct ExperimentArgs {
    std::string config, out;
  };
  auto xa = std::make_shared<ExperimentArgs>();
  auto experiment_failed = std::make_shared<bool>(false);
  {
    auto* cmd = app.add_subcommand("experiment", "run a config-driven sweep");
    cmd->add_option("--config", xa->config)->required();
    cmd->add_option("--out", xa->out)->required();
    cmd->callback([xa, experiment_failed] {
      std::ifstream in(xa->config);
      if (!in) throw IntegrityError("cannot open " + xa->config);
      nlohmann::json j;
      in >> j;
      const ExperimentConfig config = ExperimentConfig::from_json(j);
      const ExperimentOutcome outcome =
          run_experiment(config, xa->out, &std::cerr);
      int done = 0, failed = 0;
      for (const MetricsReport& r : outcome.reports) {
        r.error.empty() ? ++done : ++failed;
      }
      std::cout << "rows=" << outcome.reports.size() << " ok=" << done
                << " failed=" << failed << " -> " << xa->out << "\n";
      *experiment_failed = outcome.any_error;
    });
  }

  CLI11_PARSE(app, argc, argv);
  return *experiment_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
