#include "lmiql/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lmiql {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kFormatVersion = 1;

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double get_num(const Json& j) {
  if (j.is_null()) return kNaN;
  if (!j.is_number()) throw std::invalid_argument("expected a number, got " + j.dump());
  return j.get<double>();
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Eigen::VectorXd vec_from(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array, got " + j.dump());
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_num(j[i]);
  return v;
}

Json mat_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd mat_from(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a matrix (array of rows)");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw std::invalid_argument("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = vec_from(j[r]).transpose();
  }
  return m;
}

void check_format(const Json& j, const std::string& format) {
  if (!j.is_object() || j.value("format", std::string()) != format)
    throw std::invalid_argument("expected a '" + format + "' record");
  if (j.value("version", 0) != kFormatVersion)
    throw std::invalid_argument("unsupported " + format + " version");
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument(where + ": unknown key '" + k + "'");
}

Json solver_json(const SolverSettings& s) {
  return {{"feas_tol", s.feas_tol}, {"gap_tol", s.gap_tol}, {"max_iter", s.max_iter},
          {"verbose", s.verbose}};
}

void solver_from(const Json& j, SolverSettings& s) {
  reject_unknown(j, {"feas_tol", "gap_tol", "max_iter", "verbose"}, "solver");
  s.feas_tol = j.value("feas_tol", s.feas_tol);
  s.gap_tol = j.value("gap_tol", s.gap_tol);
  s.max_iter = j.value("max_iter", s.max_iter);
  s.verbose = j.value("verbose", s.verbose);
}

const char* env_name(ExperimentConfig::EnvKind k) {
  return k == ExperimentConfig::EnvKind::Pendulum ? "pendulum" : "linear";
}

const char* baseline_name(ExperimentConfig::BaselineKind k) {
  switch (k) {
    case ExperimentConfig::BaselineKind::InaccurateLqr: return "inaccurate-lqr";
    case ExperimentConfig::BaselineKind::Lqr: return "lqr";
    case ExperimentConfig::BaselineKind::Zero: return "zero";
  }
  return "?";
}

}  // namespace

Json params_to_json(const QParams& params) {
  params.validate();
  return {{"format", "lmiql-qparams"}, {"version", kFormatVersion}, {"n_phi", params.n_phi()},
          {"n_u", params.n_u()}, {"theta", vec_json(params.to_vector())}};
}

QParams params_from_json(const Json& j) {
  check_format(j, "lmiql-qparams");
  const int n_phi = j.at("n_phi").get<int>();
  const int n_u = j.at("n_u").get<int>();
  const Eigen::VectorXd theta = vec_from(j.at("theta"));
  if (theta.size() != QParams::parameter_count(n_phi, n_u))
    throw std::invalid_argument("qparams: theta length does not match n_phi and n_u");
  return QParams::from_vector(theta, n_phi, n_u);
}

Json policy_to_json(const AffinePolicy& policy) {
  return {{"format", "lmiql-policy"}, {"version", kFormatVersion}, {"gain", mat_json(policy.gain)},
          {"offset", vec_json(policy.offset)}};
}

AffinePolicy policy_from_json(const Json& j) {
  check_format(j, "lmiql-policy");
  AffinePolicy p{mat_from(j.at("gain")), vec_from(j.at("offset"))};
  if (p.gain.rows() != p.offset.size()) throw std::invalid_argument("policy: gain/offset mismatch");
  return p;
}

Json train_result_to_json(const TrainResult& r) {
  Json log = Json::array();
  for (const auto& e : r.solve_log)
    log.push_back({{"key", num(e.key)}, {"status", e.status}, {"objective", num(e.objective)},
                   {"upper_bound", num(e.upper_bound)}, {"epigraph_gap", num(e.epigraph_gap)}});
  return {{"format", "lmiql-train-result"},
          {"version", kFormatVersion},
          {"method", r.method},
          {"params", params_to_json(r.params)},
          {"policy", policy_to_json(r.policy)},
          {"relaxed_cost", num(r.relaxed_cost)},
          {"upper_bound_cost", num(r.upper_bound_cost)},
          {"selected_lambda", num(r.selected_lambda)},
          {"solve_log", log},
          {"s_clipped", r.s_clipped},
          {"indefinite_iterations", r.indefinite_iterations},
          {"rank_deficient_data", r.rank_deficient_data}};
}

TrainResult train_result_from_json(const Json& j) {
  check_format(j, "lmiql-train-result");
  TrainResult r;
  r.method = j.at("method").get<std::string>();
  r.params = params_from_json(j.at("params"));
  r.policy = policy_from_json(j.at("policy"));
  r.relaxed_cost = get_num(j.at("relaxed_cost"));
  r.upper_bound_cost = get_num(j.at("upper_bound_cost"));
  r.selected_lambda = get_num(j.at("selected_lambda"));
  for (const auto& e : j.at("solve_log"))
    r.solve_log.push_back({get_num(e.at("key")), e.at("status").get<std::string>(),
                           get_num(e.at("objective")), get_num(e.at("upper_bound")),
                           get_num(e.at("epigraph_gap"))});
  r.s_clipped = j.at("s_clipped").get<int>();
  r.indefinite_iterations = j.at("indefinite_iterations").get<int>();
  r.rank_deficient_data = j.at("rank_deficient_data").get<bool>();
  return r;
}

Json run_record_to_json(const RunRecord& rec) {
  return {{"run", rec.run},
          {"method", rec.method},
          {"n_data", rec.n_data},
          {"status", rec.status},
          {"message", rec.message},
          {"reward", num(rec.reward)},
          {"selected_lambda", num(rec.selected_lambda)},
          {"upper_bound", num(rec.upper_bound)},
          {"relaxed_cost", num(rec.relaxed_cost)},
          {"max_epigraph_gap", num(rec.max_epigraph_gap)},
          {"optimal_solves", rec.optimal_solves},
          {"s_clipped", rec.s_clipped},
          {"indefinite_iterations", rec.indefinite_iterations},
          {"rank_deficient", rec.rank_deficient},
          {"train_seconds", rec.train_seconds}};
}

Json config_to_json(const ExperimentConfig& c) {
  Json init = {{"kind", c.init.kind == InitSampler::Kind::Point ? "point" : "uniform"},
               {"low", vec_json(c.init.low)}};
  if (c.init.kind == InitSampler::Kind::Uniform) init["high"] = vec_json(c.init.high);
  return {
      {"env", env_name(c.env)},
      {"pendulum",
       {{"m", c.pendulum.m}, {"l", c.pendulum.l}, {"g", c.pendulum.g_const}, {"d", c.pendulum.d},
        {"Ts", c.pendulum.Ts}, {"sigma_w", c.pendulum.sigma_w}, {"sigma_v", c.pendulum.sigma_v}}},
      {"linear",
       {{"A", mat_json(c.linear.A)}, {"B", mat_json(c.linear.B)}, {"sigma_w", c.linear.sigma_w},
        {"sigma_v", c.linear.sigma_v}}},
      {"reward_M", mat_json(c.reward.M)},
      {"basis", c.basis},
      {"gamma", c.gamma},
      {"n_samples", c.n_samples},
      {"explore_variance", c.explore_variance},
      {"init", init},
      {"baseline", baseline_name(c.baseline)},
      {"baseline_m", c.baseline_m},
      {"baseline_l", c.baseline_l},
      {"lmi_ql",
       {{"lambda_grid", c.lmi_ql.lambda_grid}, {"epsilon_pd", c.lmi_ql.epsilon_pd},
        {"use_extra_lmi", c.lmi_ql.use_extra_lmi}, {"refine", c.lmi_ql.refine},
        {"refine_rel_tol", c.lmi_ql.refine_rel_tol}, {"refine_max_solves", c.lmi_ql.refine_max_solves},
        {"solver", solver_json(c.lmi_ql.solver)}}},
      {"lmi_qli",
       {{"tau", c.lmi_qli.tau}, {"epsilon_pd", c.lmi_qli.epsilon_pd}, {"fix_omega", c.lmi_qli.fix_omega},
        {"solver", solver_json(c.lmi_qli.solver)}}},
      {"lspi",
       {{"iterations", c.lspi_iterations}, {"ridge", c.lspi_ridge},
        {"zero_baseline", c.lspi_zero_baseline}}},
      {"x0", vec_json(c.x0)},
      {"eval_horizon", c.eval_horizon},
      {"eval_gamma", c.eval_gamma},
      {"limits", {{"max_velocity", c.limits.max_velocity}, {"max_state", c.limits.max_state}}},
      {"methods", c.methods},
      {"subset_sizes", c.subset_sizes},
      {"n_monte_carlo", c.n_monte_carlo},
      {"seed", c.seed},
  };
}

ExperimentConfig config_from_json(const Json& j) {
  reject_unknown(j,
                 {"env", "pendulum", "linear", "reward_M", "basis", "gamma", "n_samples",
                  "explore_variance", "init", "baseline", "baseline_m", "baseline_l", "lmi_ql",
                  "lmi_qli", "lspi", "x0", "eval_horizon", "eval_gamma", "limits", "methods",
                  "subset_sizes", "n_monte_carlo", "seed"},
                 "config");
  ExperimentConfig c;
  if (j.contains("env")) {
    const auto e = j["env"].get<std::string>();
    if (e == "linear")
      c = ExperimentConfig::linear_defaults();
    else if (e != "pendulum")
      throw std::invalid_argument("config: unknown env '" + e + "'");
  }
  if (j.contains("pendulum")) {
    const Json& p = j["pendulum"];
    reject_unknown(p, {"m", "l", "g", "d", "Ts", "sigma_w", "sigma_v"}, "pendulum");
    c.pendulum.m = p.value("m", c.pendulum.m);
    c.pendulum.l = p.value("l", c.pendulum.l);
    c.pendulum.g_const = p.value("g", c.pendulum.g_const);
    c.pendulum.d = p.value("d", c.pendulum.d);
    c.pendulum.Ts = p.value("Ts", c.pendulum.Ts);
    c.pendulum.sigma_w = p.value("sigma_w", c.pendulum.sigma_w);
    c.pendulum.sigma_v = p.value("sigma_v", c.pendulum.sigma_v);
  }
  if (j.contains("linear")) {
    const Json& l = j["linear"];
    reject_unknown(l, {"A", "B", "sigma_w", "sigma_v"}, "linear");
    if (l.contains("A")) c.linear.A = mat_from(l["A"]);
    if (l.contains("B")) c.linear.B = mat_from(l["B"]);
    c.linear.sigma_w = l.value("sigma_w", c.linear.sigma_w);
    c.linear.sigma_v = l.value("sigma_v", c.linear.sigma_v);
  }
  if (j.contains("reward_M")) c.reward.M = mat_from(j["reward_M"]);
  c.basis = j.value("basis", c.basis);
  c.gamma = j.value("gamma", c.gamma);
  c.n_samples = j.value("n_samples", c.n_samples);
  c.explore_variance = j.value("explore_variance", c.explore_variance);
  if (j.contains("init")) {
    const Json& s = j["init"];
    reject_unknown(s, {"kind", "low", "high"}, "init");
    const auto kind = s.value("kind", std::string("uniform"));
    if (kind == "point")
      c.init = InitSampler::point(vec_from(s.at("low")));
    else if (kind == "uniform")
      c.init = InitSampler::uniform(vec_from(s.at("low")), vec_from(s.at("high")));
    else
      throw std::invalid_argument("init: unknown kind '" + kind + "'");
  }
  if (j.contains("baseline")) {
    const auto b = j["baseline"].get<std::string>();
    if (b == "inaccurate-lqr")
      c.baseline = ExperimentConfig::BaselineKind::InaccurateLqr;
    else if (b == "lqr")
      c.baseline = ExperimentConfig::BaselineKind::Lqr;
    else if (b == "zero")
      c.baseline = ExperimentConfig::BaselineKind::Zero;
    else
      throw std::invalid_argument("config: unknown baseline '" + b + "'");
  }
  c.baseline_m = j.value("baseline_m", c.baseline_m);
  c.baseline_l = j.value("baseline_l", c.baseline_l);
  if (j.contains("lmi_ql")) {
    const Json& q = j["lmi_ql"];
    reject_unknown(q, {"lambda_grid", "epsilon_pd", "use_extra_lmi", "refine", "refine_rel_tol",
                       "refine_max_solves", "solver"},
                   "lmi_ql");
    c.lmi_ql.lambda_grid = q.value("lambda_grid", c.lmi_ql.lambda_grid);
    c.lmi_ql.epsilon_pd = q.value("epsilon_pd", c.lmi_ql.epsilon_pd);
    c.lmi_ql.use_extra_lmi = q.value("use_extra_lmi", c.lmi_ql.use_extra_lmi);
    c.lmi_ql.refine = q.value("refine", c.lmi_ql.refine);
    c.lmi_ql.refine_rel_tol = q.value("refine_rel_tol", c.lmi_ql.refine_rel_tol);
    c.lmi_ql.refine_max_solves = q.value("refine_max_solves", c.lmi_ql.refine_max_solves);
    if (q.contains("solver")) solver_from(q["solver"], c.lmi_ql.solver);
  }
  if (j.contains("lmi_qli")) {
    const Json& q = j["lmi_qli"];
    reject_unknown(q, {"tau", "epsilon_pd", "fix_omega", "solver"}, "lmi_qli");
    c.lmi_qli.tau = q.value("tau", c.lmi_qli.tau);
    c.lmi_qli.epsilon_pd = q.value("epsilon_pd", c.lmi_qli.epsilon_pd);
    c.lmi_qli.fix_omega = q.value("fix_omega", c.lmi_qli.fix_omega);
    if (q.contains("solver")) solver_from(q["solver"], c.lmi_qli.solver);
  }
  if (j.contains("lspi")) {
    const Json& q = j["lspi"];
    reject_unknown(q, {"iterations", "ridge", "zero_baseline"}, "lspi");
    c.lspi_iterations = q.value("iterations", c.lspi_iterations);
    c.lspi_ridge = q.value("ridge", c.lspi_ridge);
    c.lspi_zero_baseline = q.value("zero_baseline", c.lspi_zero_baseline);
  }
  if (j.contains("x0")) c.x0 = vec_from(j["x0"]);
  c.eval_horizon = j.value("eval_horizon", c.eval_horizon);
  c.eval_gamma = j.value("eval_gamma", c.eval_gamma);
  if (j.contains("limits")) {
    const Json& l = j["limits"];
    reject_unknown(l, {"max_velocity", "max_state"}, "limits");
    c.limits.max_velocity = l.value("max_velocity", c.limits.max_velocity);
    c.limits.max_state = l.value("max_state", c.limits.max_state);
  }
  c.methods = j.value("methods", c.methods);
  c.subset_sizes = j.value("subset_sizes", c.subset_sizes);
  c.n_monte_carlo = j.value("n_monte_carlo", c.n_monte_carlo);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string dataset_to_text(const Dataset& d) {
  if (d.meta.find('\n') != std::string::npos) throw std::invalid_argument("dataset meta must be one line");
  std::ostringstream os;
  os << "lmiql-dataset " << kFormatVersion << " n=" << d.size() << " n_x=" << d.n_x()
     << " n_u=" << d.n_u() << " seed=" << d.seed << '\n';
  os << "meta " << d.meta << '\n';
  std::string cols;
  for (int i = 0; i < d.n_x(); ++i) cols += "x" + std::to_string(i) + ' ';
  for (int i = 0; i < d.n_u(); ++i) cols += "u" + std::to_string(i) + ' ';
  cols += "r";
  for (int i = 0; i < d.n_x(); ++i) cols += " xn" + std::to_string(i);
  os << cols << '\n';
  for (int k = 0; k < d.size(); ++k) {
    for (int i = 0; i < d.n_x(); ++i) os << fmt(d.X(k, i)) << ' ';
    for (int i = 0; i < d.n_u(); ++i) os << fmt(d.U(k, i)) << ' ';
    os << fmt(d.R[k]);
    for (int i = 0; i < d.n_x(); ++i) os << ' ' << fmt(d.X_next(k, i));
    os << '\n';
  }
  return os.str();
}

Dataset dataset_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("dataset: empty input");
  int version = 0, n = -1, n_x = -1, n_u = -1;
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(), "lmiql-dataset %d n=%d n_x=%d n_u=%d seed=%llu", &version, &n, &n_x,
                  &n_u, &seed) != 5)
    throw std::invalid_argument("dataset: malformed header '" + line + "'");
  if (version != kFormatVersion) throw std::invalid_argument("dataset: unsupported version");
  if (n < 0 || n_x < 1 || n_u < 1) throw std::invalid_argument("dataset: bad dimensions in header");
  Dataset d;
  d.seed = seed;
  if (!std::getline(in, line) || line.rfind("meta ", 0) != 0)
    throw std::invalid_argument("dataset: missing meta line");
  d.meta = line.substr(5);
  if (!std::getline(in, line)) throw std::invalid_argument("dataset: missing column names");
  d.X.resize(n, n_x);
  d.U.resize(n, n_u);
  d.R.resize(n);
  d.X_next.resize(n, n_x);
  for (int k = 0; k < n; ++k) {
    if (!std::getline(in, line)) throw std::invalid_argument("dataset: fewer rows than declared");
    std::istringstream row(line);
    auto next = [&]() {
      std::string tok;
      if (!(row >> tok)) throw std::invalid_argument("dataset: short row " + std::to_string(k));
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument("dataset: bad number '" + tok + "'");
      return v;
    };
    for (int i = 0; i < n_x; ++i) d.X(k, i) = next();
    for (int i = 0; i < n_u; ++i) d.U(k, i) = next();
    d.R[k] = next();
    for (int i = 0; i < n_x; ++i) d.X_next(k, i) = next();
    std::string extra;
    if (row >> extra) throw std::invalid_argument("dataset: long row " + std::to_string(k));
  }
  while (std::getline(in, line))
    if (!line.empty()) throw std::invalid_argument("dataset: more rows than declared");
  return d;
}

void save_dataset(const Dataset& data, const std::string& path) { write_file(path, dataset_to_text(data)); }

Dataset load_dataset(const std::string& path) { return dataset_from_text(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << contents;
  f.close();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace lmiql
