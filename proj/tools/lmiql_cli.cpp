#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lmiql/checks.hpp"
#include "lmiql/harness.hpp"
#include "lmiql/io.hpp"

using namespace lmiql;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config seed)");
  auto* out = cmd->add_option("--out", c.out, "Output file");
  if (out_required) out->required();
  cmd->add_option("--config", c.config, "Experiment config JSON (defaults: pendulum)");
}

ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig::pendulum_defaults() : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

AffinePolicy load_policy(const std::string& path) {
  const Json j = Json::parse(read_file(path));
  const std::string format = j.value("format", std::string());
  if (format == "lmiql-train-result") return policy_from_json(j.at("policy"));
  return policy_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch Q-learning with LMI relaxations: data, training, evaluation and experiments"};
  app.require_subcommand(0, 1);
  bool print_config = false;
  std::string print_env = "pendulum";
  app.add_flag("--print-config", print_config, "Print the default experiment config as JSON");
  app.add_option("--env", print_env, "Environment for --print-config")->check(CLI::IsMember({"pendulum", "linear"}));

  Common gen_c;
  int gen_n = -1;
  auto* gen = app.add_subcommand("generate-data", "Sample a transition dataset");
  add_common(gen, gen_c, true);
  gen->add_option("-n,--samples", gen_n, "Number of samples (default: config n_samples)");

  Common train_c;
  std::string train_method_name, train_data;
  auto* train = app.add_subcommand("train", "Train one method on a dataset");
  add_common(train, train_c, true);
  train->add_option("--method", train_method_name, "lmi-ql, lmi-qli or lspi")
      ->required()
      ->check(CLI::IsMember({"lmi-ql", "lmi-qli", "lspi"}));
  train->add_option("--data", train_data, "Dataset file from generate-data")->required();

  Common eval_c;
  std::string eval_policy;
  std::string eval_builtin;
  auto* eval = app.add_subcommand("evaluate", "Roll out a policy from the configured start state");
  add_common(eval, eval_c, false);
  auto* pol_opt = eval->add_option("--policy", eval_policy, "Policy or train-result JSON");
  eval->add_option("--builtin", eval_builtin, "Evaluate a built-in policy instead")
      ->check(CLI::IsMember({"oracle", "baseline"}))
      ->excludes(pol_opt);

  Common exp_c;
  std::string exp_log;
  int exp_runs = -1;
  auto* exp = app.add_subcommand("experiment", "Monte-Carlo learning curves to CSV");
  add_common(exp, exp_c, true);
  exp->add_option("--log", exp_log, "Per-run JSON lines log");
  exp->add_option("--runs", exp_runs, "Override the number of Monte-Carlo runs");

  Common ver_c;
  auto* ver = app.add_subcommand("verify", "Run the analytic self-checks");
  add_common(ver, ver_c, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_config) {
      const auto cfg = print_env == "linear" ? ExperimentConfig::linear_defaults()
                                             : ExperimentConfig::pendulum_defaults();
      std::cout << config_to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (*gen) {
      const auto cfg = resolve_config(gen_c);
      Dataset d = generate_data(cfg, gen_n >= 0 ? gen_n : cfg.n_samples, cfg.seed);
      d.meta = std::string(cfg.env == ExperimentConfig::EnvKind::Pendulum ? "pendulum" : "linear") +
               " explore_variance=" + std::to_string(cfg.explore_variance);
      save_dataset(d, gen_c.out);
      std::fprintf(stderr, "wrote %d samples to %s\n", d.size(), gen_c.out.c_str());
      return 0;
    }
    if (*train) {
      const auto cfg = resolve_config(train_c);
      const Dataset d = load_dataset(train_data);
      d.validate(cfg.env == ExperimentConfig::EnvKind::Pendulum);
      if (d.n_x() != cfg.n_x() || d.n_u() != cfg.n_u())
        throw std::invalid_argument("dataset dimensions do not match the config");
      const TrainResult r = train_method(cfg, train_method_name, d);
      emit(train_c.out, train_result_to_json(r).dump(2) + "\n");
      std::fprintf(stderr, "%s: upper bound %.6g, relaxed %.6g, lambda %.6g\n", r.method.c_str(),
                   r.upper_bound_cost, r.relaxed_cost, r.selected_lambda);
      return 0;
    }
    if (*eval) {
      const auto cfg = resolve_config(eval_c);
      cfg.validate();
      AffinePolicy policy;
      if (!eval_policy.empty())
        policy = load_policy(eval_policy);
      else if (eval_builtin == "baseline")
        policy = make_baseline_policy(cfg).as_affine();
      else if (eval_builtin == "oracle")
        policy = make_oracle(cfg);
      else
        throw std::invalid_argument("evaluate needs --policy or --builtin");
      const BasisSpec basis = make_basis(cfg);
      if (policy.gain.cols() != basis.n_phi || policy.gain.rows() != cfg.n_u())
        throw std::invalid_argument("policy dimensions do not match the configured basis");
      const RolloutResult r = rollout(policy.bind(basis), make_environment(cfg), cfg.reward, cfg.x0,
                                      cfg.eval_horizon, derive_seed(cfg.seed, 1, 0), cfg.eval_gamma,
                                      cfg.limits);
      Json out = {{"cumulative_reward", r.diverged ? Json(nullptr) : Json(r.cumulative_reward)},
                  {"diverged", r.diverged},
                  {"steps", static_cast<int>(r.inputs.size())},
                  {"final_state", std::vector<double>(r.states.back().data(),
                                                      r.states.back().data() + r.states.back().size())}};
      if (cfg.env == ExperimentConfig::EnvKind::Linear)
        out["gain_error"] = (policy.gain - linear_optimal_gain(cfg)).cwiseAbs().maxCoeff();
      emit(eval_c.out, out.dump(2) + "\n");
      return 0;
    }
    if (*exp) {
      auto cfg = resolve_config(exp_c);
      if (exp_runs > 0) cfg.n_monte_carlo = exp_runs;
      const ExperimentResult res = run_experiment(cfg);
      emit_curves(res.points, exp_c.out);
      if (!exp_log.empty()) {
        std::string lines;
        for (const auto& rec : res.log) lines += run_record_to_json(rec).dump() + "\n";
        write_file(exp_log, lines);
      }
      std::fprintf(stderr, "wrote %zu curve points to %s\n", res.points.size(), exp_c.out.c_str());
      return 0;
    }
    if (*ver) {
      const auto cfg = resolve_config(ver_c);
      bool ok = true;
      std::string report;
      for (const auto& c : run_self_checks(cfg.seed)) {
        report += (c.passed ? "PASS " : "FAIL ") + c.name + ": " + c.detail + "\n";
        ok = ok && c.passed;
      }
      std::cout << report;
      if (!ver_c.out.empty()) write_file(ver_c.out, report);
      return ok ? 0 : 1;
    }
    std::cout << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
