#include "sdnstab/config.hpp"

#include <fstream>

namespace sdnstab::cli {

namespace {

[[noreturn]] void fail(std::string const &path, std::string const &what)
{
  throw ConfigError(path + ": " + what);
}

double number(json const &j, std::string const &path)
{
  if (!j.is_number()) { fail(path, "expected a number"); }
  return j.get<double>();
}

int integer(json const &j, std::string const &path)
{
  if (!j.is_number_integer()) { fail(path, "expected an integer"); }
  return j.get<int>();
}

template <typename F> auto guarded(std::string const &path, F &&f)
{
  try {
    return f();
  } catch (ConfigError const &) {
    throw;
  } catch (std::invalid_argument const &e) {
    fail(path, e.what());
  }
}

std::optional<MatrixXd> weight(json const &w, char const *key)
{
  if (!w.contains(key)) { return std::nullopt; }
  std::string const path = std::string("weights.") + key;
  json const       &v = w.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "identity") { fail(path, "expected \"identity\" or a matrix"); }
    return std::nullopt;
  }
  return parse_matrix(v, path);
}

} // namespace

MatrixXd parse_matrix(json const &j, std::string const &path)
{
  if (!j.is_array() || j.empty()) { fail(path, "expected a nonempty array of rows"); }
  std::size_t const rows = j.size();
  std::size_t       cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].empty()) { fail(path + "[" + std::to_string(r) + "]", "expected a nonempty row array"); }
    if (r == 0) { cols = j[r].size(); }
    if (j[r].size() != cols) { fail(path + "[" + std::to_string(r) + "]", "ragged row"); }
  }
  MatrixXd M(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Index>(r), static_cast<Index>(c)) =
        number(j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return M;
}

VectorXd parse_vector(json const &j, std::string const &path)
{
  if (!j.is_array() || j.empty()) { fail(path, "expected a nonempty array of numbers"); }
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

FlowSet parse_flows(json const &j, std::string const &path)
{
  if (!j.is_array() || j.empty()) { fail(path, "expected a nonempty array of flows"); }
  std::vector<DelayDistribution> flows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string const at = path + "[" + std::to_string(i) + "]";
    json const       &f = j[i];
    if (!f.is_object() || !f.contains("type") || !f["type"].is_string()) { fail(at + ".type", "missing flow type"); }
    std::string const type = f["type"].get<std::string>();
    DelayDistribution dist;
    if (type == "exponential") {
      if (!f.contains("rate")) { fail(at + ".rate", "missing"); }
      dist = ExponentialDelay{number(f["rate"], at + ".rate")};
    } else if (type == "deterministic") {
      if (!f.contains("value")) { fail(at + ".value", "missing"); }
      dist = DeterministicDelay{number(f["value"], at + ".value")};
    } else if (type == "empirical") {
      if (!f.contains("points") || !f["points"].is_array()) { fail(at + ".points", "expected an array of [x, F] pairs"); }
      EmpiricalCdf e;
      for (std::size_t k = 0; k < f["points"].size(); ++k) {
        json const       &pt = f["points"][k];
        std::string const pp = at + ".points[" + std::to_string(k) + "]";
        if (!pt.is_array() || pt.size() != 2) { fail(pp, "expected [x, F]"); }
        e.points.emplace_back(number(pt[0], pp + "[0]"), number(pt[1], pp + "[1]"));
      }
      if (f.contains("interpolation")) {
        std::string const mode = f["interpolation"].is_string() ? f["interpolation"].get<std::string>() : "";
        if (mode == "linear") {
          e.mode = Interpolation::Linear;
        } else if (mode == "step") {
          e.mode = Interpolation::Step;
        } else {
          fail(at + ".interpolation", "expected \"linear\" or \"step\"");
        }
      }
      dist = std::move(e);
    } else {
      fail(at + ".type", "unknown flow type '" + type + "'");
    }
    guarded(at, [&] {
      validate(dist);
      return 0;
    });
    flows.push_back(std::move(dist));
  }
  return FlowSet(std::move(flows));
}

ToolConfig parse_config(json const &j)
{
  if (!j.is_object()) { fail("config", "expected a JSON object"); }
  ToolConfig cfg;

  if (j.contains("h")) { cfg.h = number(j["h"], "h"); }
  if (j.contains("d")) { cfg.d = integer(j["d"], "d"); }
  if (j.contains("p")) { cfg.p = number(j["p"], "p"); }
  if (j.contains("flows")) { cfg.flows = parse_flows(j["flows"], "flows"); }
  if (j.contains("K")) { cfg.K = parse_matrix(j["K"], "K"); }
  if (j.contains("d_max")) { cfg.d_max = integer(j["d_max"], "d_max"); }
  if (j.contains("tol_p")) { cfg.tol_p = number(j["tol_p"], "tol_p"); }
  if (j.contains("p_hat")) { cfg.p_hat = number(j["p_hat"], "p_hat"); }
  if (j.contains("grid_step")) { cfg.grid_step = number(j["grid_step"], "grid_step"); }

  if (j.contains("plant") && j.contains("discrete_plant")) {
    fail("plant", "give exactly one of plant (continuous) or discrete_plant");
  }
  if (j.contains("plant")) {
    json const &pl = j["plant"];
    if (!pl.is_object() || !pl.contains("A") || !pl.contains("B")) { fail("plant", "expected {\"A\": [[...]], \"B\": [[...]]}"); }
    MatrixXd A = parse_matrix(pl["A"], "plant.A");
    MatrixXd B = parse_matrix(pl["B"], "plant.B");
    cfg.continuous = guarded("plant", [&] { return ContinuousPlant<double>(std::move(A), std::move(B)); });
  }
  if (j.contains("discrete_plant")) {
    json const &pl = j["discrete_plant"];
    if (!pl.is_object() || !pl.contains("A_h") || !pl.contains("B_h")) {
      fail("discrete_plant", "expected {\"A_h\": [[...]], \"B_h\": [[...]]}");
    }
    if (pl.contains("h")) { cfg.h = number(pl["h"], "discrete_plant.h"); }
    if (!cfg.h) { fail("discrete_plant.h", "sampling period required"); }
    MatrixXd A = parse_matrix(pl["A_h"], "discrete_plant.A_h");
    MatrixXd B = parse_matrix(pl["B_h"], "discrete_plant.B_h");
    cfg.discrete = guarded("discrete_plant", [&] { return DiscretePlant<double>(std::move(A), std::move(B), *cfg.h); });
  }

  if (j.contains("weights")) {
    json const &w = j["weights"];
    if (!w.is_object()) { fail("weights", "expected an object"); }
    cfg.Q = weight(w, "Q");
    cfg.R = weight(w, "R");
  }

  if (j.contains("sim")) {
    json const &s = j["sim"];
    if (!s.is_object()) { fail("sim", "expected an object"); }
    if (s.contains("horizon")) { cfg.sim.horizon = integer(s["horizon"], "sim.horizon"); }
    if (s.contains("trials")) { cfg.sim.trials = integer(s["trials"], "sim.trials"); }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) { fail("sim.seed", "expected a nonnegative integer"); }
      cfg.sim.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("x0")) { cfg.sim.x0 = parse_vector(s["x0"], "sim.x0"); }
    if (s.contains("u_init")) {
      if (!s["u_init"].is_array()) { fail("sim.u_init", "expected an array of input vectors"); }
      std::vector<VectorXd> u;
      for (std::size_t i = 0; i < s["u_init"].size(); ++i) {
        u.push_back(parse_vector(s["u_init"][i], "sim.u_init[" + std::to_string(i) + "]"));
      }
      cfg.sim.u_init = std::move(u);
    }
  }

  if (j.contains("output")) {
    json const &o = j["output"];
    if (o.contains("format")) {
      if (!o["format"].is_string()) { fail("output.format", "expected \"json\" or \"csv\""); }
      cfg.format = o["format"].get<std::string>();
      if (cfg.format != "json" && cfg.format != "csv") { fail("output.format", "expected \"json\" or \"csv\""); }
    }
    if (o.contains("path")) {
      if (!o["path"].is_string()) { fail("output.path", "expected a string"); }
      cfg.path = o["path"].get<std::string>();
    }
  }
  return cfg;
}

ToolConfig load_config(std::string const &file)
{
  std::ifstream in(file);
  if (!in) { throw ConfigError(file + ": cannot open config file"); }
  json j;
  try {
    in >> j;
  } catch (json::parse_error const &e) {
    throw ConfigError(file + ": invalid JSON: " + e.what());
  }
  return parse_config(j);
}

double ToolConfig::period() const
{
  if (discrete) { return discrete->h; }
  if (!h) { throw ConfigError("h: sampling period required"); }
  return *h;
}

int ToolConfig::slots() const
{
  if (!d) { throw ConfigError("d: deadline slot count required"); }
  if (*d < 1) { throw ConfigError("d: must be a positive integer"); }
  return *d;
}

FlowSet const &ToolConfig::flow_set() const
{
  if (!flows) { throw ConfigError("flows: flow list required"); }
  return *flows;
}

DiscretePlant<double> ToolConfig::discrete_plant() const
{
  if (discrete) { return *discrete; }
  if (!continuous) { throw ConfigError("plant: a continuous plant or discrete_plant is required"); }
  return discretize(*continuous, period());
}

DareWeights<double> ToolConfig::weights() const
{
  Index const n = continuous ? continuous->n() : discrete ? discrete->n() : 0;
  Index const m = continuous ? continuous->inputs() : discrete ? discrete->inputs() : 0;
  if (n == 0) { throw ConfigError("plant: required to size the weights"); }
  MatrixXd Qm = Q.value_or(MatrixXd::Identity(n, n));
  MatrixXd Rm = R.value_or(MatrixXd::Identity(m, m));
  if (Qm.rows() != n || Qm.cols() != n) { throw ConfigError("weights.Q: must be n x n"); }
  if (Rm.rows() != m || Rm.cols() != m) { throw ConfigError("weights.R: must be m_u x m_u"); }
  return guarded("weights", [&] { return DareWeights<double>(std::move(Qm), std::move(Rm)); });
}

double ToolConfig::dropout() const
{
  if (p) {
    if (!(*p >= 0 && *p <= 1)) { throw ConfigError("p: must lie in [0, 1]"); }
    return *p;
  }
  return dropout_rate(flow_set(), DeadlinePolicy(slots(), period())).p;
}

json to_json(MatrixXd const &M)
{
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) {
      row.push_back(M(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace sdnstab::cli
