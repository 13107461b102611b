#include "sdnstab/cli.hpp"
#include "sdnstab/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace sdnstab::cli {

namespace {

struct Flags
{
  std::optional<std::string>   config;
  std::optional<double>        A, rbar, h, p, tol_p, p_hat, grid_step;
  std::optional<int>           d, trials, horizon, d_max;
  std::optional<std::uint64_t> seed;
  std::optional<std::string>   format, out, outdir;
};

std::string g6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json optional_number(std::optional<double> const &v)
{
  return v ? json(*v) : json(nullptr);
}

json optional_number(std::optional<int> const &v)
{
  return v ? json(*v) : json(nullptr);
}

std::string usage()
{
  std::string u = "usage: sdnstab <command> [--config FILE] [flags]\ncommands:";
  for (auto const &c : commands()) {
    u += " " + c;
  }
  return u + "\n";
}

// Writes to the configured path, or to `out` for "-".
void emit(ToolConfig const &cfg, std::ostream &out, std::string const &text)
{
  if (cfg.path == "-") {
    out << text;
    return;
  }
  std::ofstream f(cfg.path);
  if (!f) { throw ConfigError("output.path: cannot open '" + cfg.path + "' for writing"); }
  f << text;
}

void emit_json(ToolConfig const &cfg, std::ostream &out, json const &j)
{
  emit(cfg, out, j.dump(2) + "\n");
}

void write_file(std::filesystem::path const &p, std::string const &text)
{
  std::ofstream f(p);
  if (!f) { throw ConfigError("outdir: cannot write '" + p.string() + "'"); }
  f << text;
}

std::uint64_t resolve_seed(ToolConfig const &cfg)
{
  if (cfg.sim.seed) { return *cfg.sim.seed; }
  if (char const *env = std::getenv(kSeedEnv)) {
    try {
      return std::stoull(env);
    } catch (std::exception const &) {
      throw ConfigError(std::string(kSeedEnv) + ": expected a nonnegative integer");
    }
  }
  return 1;
}

ScalarPlant scalar_plant(ToolConfig const &cfg)
{
  if (!cfg.continuous || cfg.continuous->n() != 1 || cfg.continuous->inputs() != 1) {
    throw ConfigError("plant: a scalar continuous plant {\"A\": [[a]], \"B\": [[b]]} is required");
  }
  return ScalarPlant(cfg.continuous->A(0, 0), cfg.continuous->B(0, 0));
}

DecoupledPlant decoupled_plant(ToolConfig const &cfg)
{
  if (!cfg.continuous) { throw ConfigError("plant: a continuous diagonal plant is required"); }
  auto const &A = cfg.continuous->A;
  auto const &B = cfg.continuous->B;
  if (B.cols() != A.rows()) { throw ConfigError("plant.B: decoupled plant needs a square diagonal B"); }
  std::vector<double> a, b;
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (i != j && (A(i, j) != 0 || B(i, j) != 0)) { throw ConfigError("plant: A and B must be diagonal"); }
    }
    a.push_back(A(i, i));
    b.push_back(B(i, i));
  }
  return DecoupledPlant::from_unsorted(std::move(a), std::move(b));
}

MatrixXd gain_for(ToolConfig const &cfg, DiscretePlant<double> const &dp, double p)
{
  if (cfg.K) { return *cfg.K; }
  auto const r = dare_solve(dp, cfg.slots(), p, cfg.weights());
  if (auto const *s = std::get_if<DareSolution<double>>(&r)) { return s->K; }
  throw NotStabilizableError("no stabilizing gain: DARE has no solution at p = " + g6(p) + " (" +
                             std::get<NotStabilizable>(r).reason + ")");
}

SimConfig sim_config(ToolConfig const &cfg)
{
  auto const dp = cfg.discrete_plant();
  SimConfig  s;
  s.plant = dp;
  s.d = cfg.slots();
  s.flows = cfg.flow_set();
  s.K = gain_for(cfg, dp, cfg.dropout());
  s.horizon = cfg.sim.horizon;
  s.trials = cfg.sim.trials;
  s.seed = resolve_seed(cfg);
  if (!cfg.sim.x0) { throw ConfigError("sim.x0: initial state required"); }
  s.x0 = *cfg.sim.x0;
  if (cfg.sim.u_init) {
    s.u_init = *cfg.sim.u_init;
  } else {
    s.u_init.assign(static_cast<std::size_t>(s.d), VectorXd::Zero(dp.inputs()));
  }
  s.validate();
  return s;
}

int cmd_discretize(ToolConfig const &cfg, std::ostream &out)
{
  if (!cfg.continuous) { throw ConfigError("plant: a continuous plant is required"); }
  auto const dp = cfg.discrete_plant();
  auto const rep = check_assumptions(*cfg.continuous);
  json       eig = json::array();
  for (auto const &l : rep.eigenvalues) {
    eig.push_back({l.real(), l.imag()});
  }
  json a = {{"h1_unstable_real_distinct", rep.h1_unstable_real_distinct},
            {"h2_full_column_rank", rep.h2_full_column_rank},
            {"h3_controllable", rep.h3_controllable},
            {"h4_scalar_nonneg", rep.h4_scalar_nonneg ? json(*rep.h4_scalar_nonneg) : json(nullptr)},
            {"eigenvalues", eig},
            {"notes", rep.notes}};
  emit_json(cfg, out, {{"A_h", to_json(dp.A_h)}, {"B_h", to_json(dp.B_h)}, {"h", dp.h}, {"assumptions", a}});
  return kOk;
}

int cmd_dropout(ToolConfig const &cfg, std::ostream &out)
{
  DeadlinePolicy const policy(cfg.slots(), cfg.period());
  auto const          &flows = cfg.flow_set();
  json                 j = {{"p", dropout_rate(flows, policy).p},
                            {"deadline", policy.deadline()},
                            {"d", policy.d},
                            {"h", policy.h},
                            {"m", flows.size()}};
  try {
    j["rbar"] = total_service_rate(flows);
  } catch (UnsupportedModelError const &) {
    j["rbar"] = nullptr;
  }
  emit_json(cfg, out, j);
  return kOk;
}

int cmd_dare(ToolConfig const &cfg, std::ostream &out)
{
  auto const   dp = cfg.discrete_plant();
  double const p = cfg.dropout();
  auto const   r = dare_solve(dp, cfg.slots(), p, cfg.weights());
  if (auto const *s = std::get_if<DareSolution<double>>(&r)) {
    emit_json(cfg, out,
              {{"P", to_json(s->P)},
               {"K", to_json(s->K)},
               {"Phi", to_json(s->Phi)},
               {"iterations", s->iterations},
               {"residual", s->residual},
               {"stabilizable", true},
               {"p", p}});
    return kOk;
  }
  auto const &ns = std::get<NotStabilizable>(r);
  emit_json(cfg, out,
            {{"P", nullptr},
             {"K", nullptr},
             {"Phi", nullptr},
             {"iterations", ns.iterations},
             {"residual", nullptr},
             {"stabilizable", false},
             {"reason", ns.reason},
             {"p", p}});
  return kNotStabilizable;
}

int cmd_dle(ToolConfig const &cfg, std::ostream &out)
{
  auto const   dp = cfg.discrete_plant();
  double const p = cfg.dropout();
  int const    d = cfg.slots();
  MatrixXd const K = gain_for(cfg, dp, p);
  MatrixXd const Q = cfg.weights().Q;
  auto const     s = dle_solve(dp, d, p, K, Q);
  json           j = {{"P", to_json(s.P)},
                      {"K", to_json(K)},
                      {"spectral_radius", s.spectral_radius},
                      {"feasible", s.feasible},
                      {"marginal", s.marginal},
                      {"augmented_spectral_radius", closed_loop_spectral_radius(dp, d, p, K)},
                      {"p", p}};
  if (cfg.p_hat) {
    auto const g = robust_grid_check(dp, d, K, *cfg.p_hat, cfg.grid_step, Q);
    j["robust_grid"] = {{"p_hat", g.p_hat},
                        {"grid", g.grid},
                        {"spectral_radii", g.spectral_radii},
                        {"worst_p", g.worst_p},
                        {"all_feasible", g.all_feasible},
                        {"method", "sampled grid check (necessary condition only)"}};
  }
  emit_json(cfg, out, j);
  return s.feasible ? kOk : kNotStabilizable;
}

int cmd_pmax(ToolConfig const &cfg, std::ostream &out)
{
  auto const dp = cfg.discrete_plant();
  int const  d = cfg.slots();
  auto const m = pmax_bisection(dp, d, cfg.weights(), cfg.tol_p);
  json       j = {{"p_max", m.p_max}, {"bracket_width", m.bracket_width}, {"advisory", m.advisory}, {"closed_form", nullptr}};
  if (cfg.continuous && cfg.continuous->n() == 1 && cfg.continuous->A(0, 0) >= 0) {
    j["closed_form"] = pmax_scalar_closed_form(cfg.continuous->A(0, 0), dp.h, d);
  }
  emit_json(cfg, out, j);
  return kOk;
}

int cmd_bounds(ToolConfig const &cfg, Flags const &f, std::ostream &out)
{
  double const A = f.A ? *f.A : scalar_plant(cfg).A;
  double const rbar = f.rbar ? *f.rbar : total_service_rate(cfg.flow_set());
  if (!(rbar > 0)) { throw ConfigError("--rbar: total service rate must be positive"); }
  if (!(A >= 0)) { throw ConfigError("--A: must be >= 0"); }
  auto const b = sampling_bounds(A, rbar);
  emit_json(cfg, out,
            {{"regime", to_string(b.regime)},
             {"A", A},
             {"rbar", rbar},
             {"h_bar", optional_number(b.h_bar)},
             {"t_bar", optional_number(b.t_bar)},
             {"h_u", optional_number(b.h_u)},
             {"h_l1", optional_number(b.h_l1)},
             {"h_l2", optional_number(b.h_l2)},
             {"h_l", optional_number(b.h_l)},
             {"note", b.note}});
  return kOk;
}

int cmd_deadline(ToolConfig const &cfg, std::ostream &out)
{
  auto const   plant = scalar_plant(cfg);
  double const h = cfg.period();
  auto const  &flows = cfg.flow_set();
  auto const   dec = find_min_deadline(plant, h, flows, cfg.d_max);
  json         j = {{"stabilizable", dec.stabilizable}, {"chosen_d", optional_number(dec.chosen_d)}, {"d_max", cfg.d_max}};
  if (dec.chosen_d) {
    j["p"] = dropout_rate(flows, DeadlinePolicy(*dec.chosen_d, h)).p;
    j["threshold"] = dropout_threshold(plant.A, h, *dec.chosen_d);
  }
  emit_json(cfg, out, j);
  return dec.stabilizable ? kOk : kNotStabilizable;
}

int cmd_proposition(ToolConfig const &cfg, Flags const &f, std::ostream &out)
{
  double const A = f.A ? *f.A : scalar_plant(cfg).A;
  double const rbar = f.rbar ? *f.rbar : total_service_rate(cfg.flow_set());
  double const h = f.h ? *f.h : cfg.period();
  if (!(rbar > 0)) { throw ConfigError("--rbar: total service rate must be positive"); }
  auto const dec = proposition_check(A, rbar, h);
  emit_json(cfg, out,
            {{"status", to_string(dec.status)},
             {"stabilizable", dec.stabilizable},
             {"chosen_d", optional_number(dec.chosen_d)},
             {"f_star", optional_number(dec.f_star)},
             {"d1", optional_number(dec.d1)},
             {"d2", optional_number(dec.d2)},
             {"t_bar", optional_number(dec.t_bar)}});
  return kOk;
}

int cmd_decoupled(ToolConfig const &cfg, std::ostream &out)
{
  auto const   plant = decoupled_plant(cfg);
  double const h = cfg.period();
  int const    d = cfg.slots();
  bool const   ok = decoupled_stabilizable(plant, h, cfg.flow_set(), d);
  emit_json(cfg, out,
            {{"stabilizable", ok},
             {"A1", plant.A.front()},
             {"mu", plant.mu},
             {"p", dropout_rate(cfg.flow_set(), DeadlinePolicy(d, h)).p},
             {"threshold", dropout_threshold(plant.A.front(), h, d)}});
  return ok ? kOk : kNotStabilizable;
}

int cmd_simulate(ToolConfig const &cfg, std::ostream &out)
{
  auto const s = sim_config(cfg);
  auto const mc = run_monte_carlo(s);
  auto const ex = exact_moments(s);
  if (cfg.format == "json") {
    json k = json::array(), lo = json::array(), hi = json::array();
    for (std::size_t i = 0; i < mc.mean_sq.size(); ++i) {
      k.push_back(i);
      lo.push_back(mc.mean_sq[i] - mc.ci_halfwidth[i]);
      hi.push_back(mc.mean_sq[i] + mc.ci_halfwidth[i]);
    }
    emit_json(cfg, out,
              {{"k", k}, {"mean_sq", mc.mean_sq}, {"ci_low", lo}, {"ci_high", hi}, {"exact_mean_sq", ex.mean_sq}});
  } else {
    emit(cfg, out, moments_csv(mc, ex));
  }
  return kOk;
}

int cmd_moments(ToolConfig const &cfg, std::ostream &out)
{
  auto const  s = sim_config(cfg);
  auto const  ex = exact_moments(s);
  std::string csv = "k,exact_mean_sq\n";
  for (std::size_t i = 0; i < ex.mean_sq.size(); ++i) {
    csv += std::to_string(i) + "," + g6(ex.mean_sq[i]) + "\n";
  }
  emit(cfg, out, csv);
  return kOk;
}

int cmd_tables(Flags const &f, std::ostream &out)
{
  std::string const t1 = bounds_table_csv(table1_inputs(), false);
  std::string const t2 = bounds_table_csv(table2_inputs(), true);
  if (!f.outdir) {
    out << t1 << "\n" << t2;
    return kOk;
  }
  std::filesystem::create_directories(*f.outdir);
  write_file(std::filesystem::path(*f.outdir) / "table1.csv", t1);
  write_file(std::filesystem::path(*f.outdir) / "table2.csv", t2);
  out << json{{"files", {"table1.csv", "table2.csv"}}, {"outdir", *f.outdir}}.dump(2) << "\n";
  return kOk;
}

int cmd_figure3(ToolConfig const &cfg, Flags const &f, std::ostream &out)
{
  int const           trials = cfg.sim.trials;
  int const           horizon = cfg.sim.horizon;
  std::uint64_t const seed = resolve_seed(cfg);
  MatrixXd const      K = replicated_path_gain();
  std::string const   dir = f.outdir.value_or(".");
  std::filesystem::create_directories(dir);

  json summary = {{"gain", to_json(K)}, {"outdir", dir}, {"trials", trials}, {"horizon", horizon}, {"seed", seed}};
  for (auto const &[rate, name] : {std::pair{0.5, "figure3_stabilizable.csv"}, std::pair{0.2, "figure3_unstabilizable.csv"}}) {
    auto const s = replicated_path_scenario(rate, K, trials, horizon, seed);
    auto const mc = run_monte_carlo(s);
    auto const ex = exact_moments(s);
    write_file(std::filesystem::path(dir) / name, moments_csv(mc, ex));
    summary["scenarios"].push_back(
      {{"file", name}, {"rate_per_flow", rate}, {"p", s.dropout()}, {"final_mean_sq", mc.mean_sq.back()}, {"divergent", looks_divergent(mc)}});
  }
  out << summary.dump(2) << "\n";
  return kOk;
}

void apply_flags(ToolConfig &cfg, Flags const &f)
{
  if (f.h) { cfg.h = *f.h; }
  if (f.d) { cfg.d = *f.d; }
  if (f.p) { cfg.p = *f.p; }
  if (f.seed) { cfg.sim.seed = *f.seed; }
  if (f.trials) { cfg.sim.trials = *f.trials; }
  if (f.horizon) { cfg.sim.horizon = *f.horizon; }
  if (f.d_max) { cfg.d_max = *f.d_max; }
  if (f.tol_p) { cfg.tol_p = *f.tol_p; }
  if (f.p_hat) { cfg.p_hat = *f.p_hat; }
  if (f.grid_step) { cfg.grid_step = *f.grid_step; }
  if (f.format) {
    if (*f.format != "json" && *f.format != "csv") { throw ConfigError("--format: expected json or csv"); }
    cfg.format = *f.format;
  }
  if (f.out) { cfg.path = *f.out; }
  if (cfg.discrete && f.h) { cfg.discrete->h = *f.h; }
}

int dispatch(std::string const &cmd, ToolConfig const &cfg, Flags const &f, std::ostream &out)
{
  if (cmd == "discretize") { return cmd_discretize(cfg, out); }
  if (cmd == "dropout") { return cmd_dropout(cfg, out); }
  if (cmd == "dare") { return cmd_dare(cfg, out); }
  if (cmd == "dle") { return cmd_dle(cfg, out); }
  if (cmd == "pmax") { return cmd_pmax(cfg, out); }
  if (cmd == "bounds") { return cmd_bounds(cfg, f, out); }
  if (cmd == "deadline") { return cmd_deadline(cfg, out); }
  if (cmd == "proposition") { return cmd_proposition(cfg, f, out); }
  if (cmd == "decoupled") { return cmd_decoupled(cfg, out); }
  if (cmd == "simulate") { return cmd_simulate(cfg, out); }
  if (cmd == "moments") { return cmd_moments(cfg, out); }
  if (cmd == "tables") { return cmd_tables(f, out); }
  if (cmd == "figure3") { return cmd_figure3(cfg, f, out); }
  return kUsage;
}

} // namespace

std::vector<std::string> const &commands()
{
  static std::vector<std::string> const c{"discretize", "dropout",   "dare",     "dle",    "pmax",    "bounds", "deadline",
                                          "proposition", "decoupled", "simulate", "moments", "tables", "figure3"};
  return c;
}

int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  if (args.empty() || std::find(commands().begin(), commands().end(), args.front()) == commands().end()) {
    if (!args.empty()) { err << "unknown command '" << args.front() << "'\n"; }
    err << usage();
    return kUsage;
  }
  std::string const cmd = args.front();

  CLI::App app{"sdnstab " + cmd};
  app.set_help_flag("--help", "print this help");
  Flags    f;
  app.add_option("--config", f.config, "JSON configuration file");
  app.add_option("--A", f.A, "scalar plant parameter A >= 0");
  app.add_option("--rbar", f.rbar, "total service rate");
  app.add_option("--h", f.h, "sampling period");
  app.add_option("--d", f.d, "deadline in slots");
  app.add_option("--p", f.p, "dropout rate (overrides the flows)");
  app.add_option("--seed", f.seed, "simulation seed");
  app.add_option("--trials", f.trials, "Monte Carlo trials");
  app.add_option("--horizon", f.horizon, "simulation horizon N");
  app.add_option("--d-max", f.d_max, "largest deadline searched");
  app.add_option("--tol-p", f.tol_p, "bisection tolerance");
  app.add_option("--p-hat", f.p_hat, "upper end of the robust grid check");
  app.add_option("--grid-step", f.grid_step, "robust grid spacing");
  app.add_option("--format", f.format, "json or csv");
  app.add_option("--out", f.out, "output file ('-' for stdout)");
  app.add_option("--outdir", f.outdir, "directory for multi-file outputs");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1); // CLI11 expects reversed order
  try {
    app.parse(rest);
  } catch (CLI::CallForHelp const &) {
    out << app.help();
    return kOk;
  } catch (CLI::ParseError const &e) {
    err << e.what() << "\n";
    return kInvalid;
  }

  try {
    ToolConfig cfg = f.config ? load_config(*f.config) : ToolConfig{};
    apply_flags(cfg, f);
    if (f.rbar && !(*f.rbar > 0)) { throw ConfigError("--rbar: total service rate must be positive"); }
    return dispatch(cmd, cfg, f, out);
  } catch (NotStabilizableError const &e) {
    err << e.what() << "\n";
    return kNotStabilizable;
  } catch (std::invalid_argument const &e) {
    err << e.what() << "\n";
    return kInvalid;
  } catch (std::exception const &e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  }
}

std::vector<std::pair<double, double>> const &table1_inputs()
{
  static std::vector<std::pair<double, double>> const rows{
    {0.6, 1}, {0.7, 1}, {0.8, 1}, {0.9, 1}, {1.0, 1}, {1.1, 1}, {1.2, 1},
    {0.4, 0.1}, {0.4, 0.2}, {0.4, 0.3}, {0.4, 0.4}, {0.4, 0.5}, {0.4, 0.6}, {0.4, 0.7},
  };
  return rows;
}

std::vector<std::pair<double, double>> const &table2_inputs()
{
  static std::vector<std::pair<double, double>> const rows{{0.5, 0.9}, {0.5, 0.75}, {0.5, 0.6}, {0.5, 0.45}, {0.5, 0.3}, {0.5, 0.15}};
  return rows;
}

std::string bounds_table_csv(std::vector<std::pair<double, double>> const &rows, bool with_delta)
{
  std::string csv = with_delta ? "A,rbar,h_u,h_l,delta_h\n" : "A,rbar,h_u,h_l\n";
  for (auto const &[A, rbar] : rows) {
    auto const b = sampling_bounds(A, rbar);
    if (b.regime != Regime::Underprovisioned) { throw DomainError("table row is not in the underprovisioned regime"); }
    csv += g6(A) + "," + g6(rbar) + "," + g6(*b.h_u) + "," + g6(*b.h_l);
    if (with_delta) { csv += "," + g6(*b.h_u - *b.h_l); }
    csv += "\n";
  }
  return csv;
}

SimConfig replicated_path_scenario(double rate_per_flow, MatrixXd K, int trials, int horizon, std::uint64_t seed)
{
  ContinuousPlant<double> const plant(MatrixXd::Constant(1, 1, 0.25), MatrixXd::Constant(1, 1, 1.0));
  SimConfig                     s;
  s.plant = discretize(plant, 1.0);
  s.d = 2;
  s.flows = exponential_flows(2, rate_per_flow);
  s.K = std::move(K);
  s.horizon = horizon;
  s.trials = trials;
  s.seed = seed;
  s.x0 = VectorXd::Constant(1, 2.0);
  s.u_init.assign(2, VectorXd::Zero(1));
  s.validate();
  return s;
}

MatrixXd replicated_path_gain()
{
  auto const s = replicated_path_scenario(0.5, MatrixXd::Zero(1, 1), 1, 1, 0);
  auto const r = dare_solve(s.plant, s.d, s.dropout(), DareWeights<double>::identity(1, 1));
  return std::get<DareSolution<double>>(r).K;
}

std::string moments_csv(MomentTrajectory const &mc, MomentTrajectory const &exact)
{
  std::string csv = "k,mean_sq,ci_low,ci_high,exact_mean_sq\n";
  for (std::size_t k = 0; k < mc.mean_sq.size(); ++k) {
    csv += std::to_string(k) + "," + g6(mc.mean_sq[k]) + "," + g6(mc.mean_sq[k] - mc.ci_halfwidth[k]) + "," +
           g6(mc.mean_sq[k] + mc.ci_halfwidth[k]) + "," + g6(exact.mean_sq.at(k)) + "\n";
  }
  return csv;
}

} // namespace sdnstab::cli
