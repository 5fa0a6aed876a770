#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lmiql/baselines.hpp"
#include "lmiql/checks.hpp"
#include "lmiql/harness.hpp"
#include "lmiql/io.hpp"
#include "lmiql/synthesis.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace lmiql;

namespace {

ExperimentConfig config_from(const std::string& text) {
  return text.empty() ? ExperimentConfig::pendulum_defaults() : config_from_json(Json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Batch Q-learning with LMI relaxations";

  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", PyExc_ValueError);

  py::class_<PendulumConfig>(m, "PendulumConfig")
      .def(py::init<>())
      .def_readwrite("m", &PendulumConfig::m)
      .def_readwrite("l", &PendulumConfig::l)
      .def_readwrite("g", &PendulumConfig::g_const)
      .def_readwrite("d", &PendulumConfig::d)
      .def_readwrite("Ts", &PendulumConfig::Ts)
      .def_readwrite("sigma_w", &PendulumConfig::sigma_w)
      .def_readwrite("sigma_v", &PendulumConfig::sigma_v);

  m.def("wrap_angle", &wrap_angle);
  m.def("pendulum_step", &pendulum_step, "config"_a, "x"_a, "u"_a, "w"_a);
  m.def(
      "reward", [](const Eigen::MatrixXd& M, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        RewardSpec s{M};
        s.validate();
        return reward(s, x, u);
      },
      "M"_a, "x"_a, "u"_a);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("X", &Dataset::X)
      .def_readwrite("U", &Dataset::U)
      .def_readwrite("R", &Dataset::R)
      .def_readwrite("X_next", &Dataset::X_next)
      .def_readwrite("seed", &Dataset::seed)
      .def_readwrite("meta", &Dataset::meta)
      .def("prefix", &Dataset::prefix)
      .def("__len__", &Dataset::size)
      .def("to_text", [](const Dataset& d) { return dataset_to_text(d); })
      .def_static("from_text", &dataset_from_text);

  py::class_<QParams>(m, "QParams")
      .def_static("zeros", &QParams::zeros)
      .def_static("from_vector", &QParams::from_vector, "theta"_a, "n_phi"_a, "n_u"_a)
      .def("to_vector", &QParams::to_vector)
      .def_readwrite("T", &QParams::T)
      .def_readwrite("R_x", &QParams::R_x)
      .def_readwrite("R_u", &QParams::R_u)
      .def_readwrite("S", &QParams::S);

  py::class_<AffinePolicy>(m, "AffinePolicy")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), "gain"_a, "offset"_a)
      .def_readwrite("gain", &AffinePolicy::gain)
      .def_readwrite("offset", &AffinePolicy::offset);

  py::class_<DareSolution>(m, "DareSolution")
      .def_readonly("P", &DareSolution::P)
      .def_readonly("K", &DareSolution::K)
      .def_readonly("iterations", &DareSolution::iterations);
  m.def(
      "solve_dare",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
         const Eigen::MatrixXd& R, double gamma) { return solve_dare(LinearModel{A, B, Q, R, gamma}); },
      "A"_a, "B"_a, "Q"_a, "R"_a, "gamma"_a);

  m.def(
      "greedy_action",
      [](const QParams& p, const std::string& config, const Eigen::VectorXd& x) {
        const auto cfg = config_from(config);
        return greedy_action(p, make_baseline_policy(cfg), make_basis(cfg), x);
      },
      "params"_a, "config"_a, "x"_a);

  m.def(
      "default_config",
      [](const std::string& env) {
        return config_to_json(env == "linear" ? ExperimentConfig::linear_defaults()
                                              : ExperimentConfig::pendulum_defaults())
            .dump();
      },
      "env"_a = "pendulum");
  m.def("normalize_config", [](const std::string& c) { return config_to_json(config_from(c)).dump(); });
  m.def(
      "generate_data",
      [](const std::string& c, int n, std::uint64_t seed) { return generate_data(config_from(c), n, seed); },
      "config"_a, "n"_a, "seed"_a);
  m.def(
      "train",
      [](const std::string& c, const std::string& method, const Dataset& d) {
        py::gil_scoped_release release;
        return train_result_to_json(train_method(config_from(c), method, d)).dump();
      },
      "config"_a, "method"_a, "data"_a);
  m.def(
      "evaluate",
      [](const std::string& c, const AffinePolicy& policy, std::uint64_t seed) {
        const auto cfg = config_from(c);
        const auto r = rollout(policy.bind(make_basis(cfg)), make_environment(cfg), cfg.reward, cfg.x0,
                               cfg.eval_horizon, seed, cfg.eval_gamma, cfg.limits);
        return py::make_tuple(r.cumulative_reward, r.diverged);
      },
      "config"_a, "policy"_a, "seed"_a);
  m.def(
      "oracle_policy", [](const std::string& c) { return make_oracle(config_from(c)); }, "config"_a);
  m.def(
      "run_experiment",
      [](const std::string& c) {
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(config_from(c));
        }
        Json log = Json::array();
        for (const auto& rec : res.log) log.push_back(run_record_to_json(rec));
        return py::make_tuple(curves_csv(res.points), log.dump());
      },
      "config"_a);
  m.def("self_checks", [](std::uint64_t seed) {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& c : run_self_checks(seed)) out.emplace_back(c.name, c.passed, c.detail);
    return out;
  });
}
