#include "sdnstab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace sdnstab {

void SimConfig::validate() const
{
  if (d < 1) { throw DomainError("simulation: d must be >= 1"); }
  if (horizon < 1) { throw DomainError("simulation: horizon must be >= 1"); }
  if (trials < 1) { throw DomainError("simulation: trials must be >= 1"); }
  if (flows.size() == 0) { throw DomainError("simulation: at least one flow required"); }
  if (K.rows() != plant.inputs() || K.cols() != plant.n()) { throw DimensionError("simulation: K must be m_u x n"); }
  if (x0.size() != plant.n()) { throw DimensionError("simulation: x0 must have n entries"); }
  if (static_cast<int>(u_init.size()) != d) { throw DimensionError("simulation: u_init must hold exactly d controls"); }
  for (auto const &u : u_init) {
    if (u.size() != plant.inputs()) { throw DimensionError("simulation: each u_init entry must have m_u entries"); }
  }
}

namespace {

// u_j for j >= -d, drawing on the initial history for negative indices.
VectorXd const &control_at(SimConfig const &cfg, std::vector<VectorXd> const &controls, int j)
{
  return j < 0 ? cfg.u_init[static_cast<std::size_t>(j + cfg.d)] : controls[static_cast<std::size_t>(j)];
}

VectorXd predict(SimConfig const &cfg, PredictorCoeffs<double> const &c, VectorXd const &x,
                 std::vector<VectorXd> const &controls, int k)
{
  VectorXd xhat = c.state * x;
  for (int i = 0; i < cfg.d; ++i) {
    xhat.noalias() += c.inputs[static_cast<std::size_t>(i)] * control_at(cfg, controls, k - i - 1);
  }
  return xhat;
}

VectorXd step(SimConfig const &cfg, VectorXd const &x, std::uint8_t gamma, VectorXd const &u_delayed)
{
  VectorXd next = cfg.plant.A_h * x;
  if (gamma != 0) { next.noalias() += cfg.plant.B_h * u_delayed; }
  return next;
}

} // namespace

AugmentedMaps augmented_maps(DiscretePlant<double> const &plant, int d, double p, MatrixXd const &K)
{
  if (d < 1) { throw DomainError("augmented_maps: d must be >= 1"); }
  Index const n = plant.n();
  Index const m = plant.inputs();
  Index const N = n + d * m;
  auto const  c = predictor_coeffs(plant, d, p);

  MatrixXd common = MatrixXd::Zero(N, N);
  common.topLeftCorner(n, n) = plant.A_h;
  // new u_k = K (A^d x_k + sum_i (1-p) A^i B u_{k-i-1})
  common.block(n, 0, m, n) = K * c.state;
  for (int i = 0; i < d; ++i) {
    common.block(n, n + i * m, m, m) = K * c.inputs[static_cast<std::size_t>(i)];
  }
  // shift u_{k-1..k-d+1} down one slot
  for (int i = 1; i < d; ++i) {
    common.block(n + i * m, n + (i - 1) * m, m, m) = MatrixXd::Identity(m, m);
  }

  AugmentedMaps maps{common, common};
  maps.delivered.block(0, n + (d - 1) * m, n, m) = plant.B_h;
  return maps;
}

VectorXd augmented_initial_state(SimConfig const &cfg)
{
  Index const n = cfg.plant.n();
  Index const m = cfg.plant.inputs();
  VectorXd    z(n + cfg.d * m);
  z.head(n) = cfg.x0;
  for (int i = 0; i < cfg.d; ++i) {
    z.segment(n + i * m, m) = cfg.u_init[static_cast<std::size_t>(cfg.d - 1 - i)]; // slot i holds u_{-1-i}
  }
  return z;
}

TrialTrajectory run_trial(SimConfig const &cfg, std::uint64_t trial_index)
{
  cfg.validate();
  double const         p = cfg.dropout();
  auto const           coeffs = predictor_coeffs(cfg.plant, cfg.d, p);
  DeadlinePolicy const policy(cfg.d, cfg.plant.h);
  RngStream            rng(cfg.seed, trial_index);

  auto const      N = static_cast<std::size_t>(cfg.horizon);
  TrialTrajectory t;
  t.states.reserve(N + 1);
  t.controls.reserve(N);
  t.gammas.reserve(N);
  t.states.push_back(cfg.x0);
  for (int k = 0; k < cfg.horizon; ++k) {
    VectorXd const &x = t.states.back();
    t.controls.push_back(cfg.K * predict(cfg, coeffs, x, t.controls, k));
    t.gammas.push_back(sample_arrival(cfg.flows, policy, rng)); // fate of the packet sent at slot k-d
    t.states.push_back(step(cfg, x, t.gammas.back(), control_at(cfg, t.controls, k - cfg.d)));
  }
  return t;
}

VectorXd predicted_state(SimConfig const &cfg, TrialTrajectory const &t, int k)
{
  auto const coeffs = predictor_coeffs(cfg.plant, cfg.d, cfg.dropout());
  return predict(cfg, coeffs, t.states.at(static_cast<std::size_t>(k)), t.controls, k);
}

bool replays_exactly(SimConfig const &cfg, TrialTrajectory const &t)
{
  auto const N = static_cast<std::size_t>(cfg.horizon);
  if (t.states.size() != N + 1 || t.controls.size() != N || t.gammas.size() != N) { return false; }
  if (t.states.front() != cfg.x0) { return false; }
  auto const coeffs = predictor_coeffs(cfg.plant, cfg.d, cfg.dropout());
  for (int k = 0; k < cfg.horizon; ++k) {
    auto const i = static_cast<std::size_t>(k);
    if (cfg.K * predict(cfg, coeffs, t.states[i], t.controls, k) != t.controls[i]) { return false; }
    if (step(cfg, t.states[i], t.gammas[i], control_at(cfg, t.controls, k - cfg.d)) != t.states[i + 1]) { return false; }
  }
  return true;
}

namespace {

// Running mean and sum of squared deviations per step, merged with Chan's pairwise update.
struct StepMoments
{
  std::vector<double> count, mean, m2;

  explicit StepMoments(std::size_t steps)
    : count(steps, 0.0)
    , mean(steps, 0.0)
    , m2(steps, 0.0)
  {}

  void add(std::size_t k, double v)
  {
    count[k] += 1;
    double const delta = v - mean[k];
    mean[k] += delta / count[k];
    m2[k] += delta * (v - mean[k]);
  }

  void merge(StepMoments const &o)
  {
    for (std::size_t k = 0; k < count.size(); ++k) {
      double const n = count[k] + o.count[k];
      if (n == 0) { continue; }
      double const delta = o.mean[k] - mean[k];
      mean[k] += delta * o.count[k] / n;
      m2[k] += o.m2[k] + delta * delta * count[k] * o.count[k] / n;
      count[k] = n;
    }
  }
};

constexpr int kChunk = 256;

} // namespace

MomentTrajectory run_monte_carlo(SimConfig const &cfg, unsigned threads)
{
  cfg.validate();
  auto const steps = static_cast<std::size_t>(cfg.horizon) + 1;
  int const  chunks = (cfg.trials + kChunk - 1) / kChunk;
  std::vector<StepMoments> partial(static_cast<std::size_t>(chunks), StepMoments(steps));

  auto const run_chunk = [&](int c) {
    int const lo = c * kChunk;
    int const hi = std::min(cfg.trials, lo + kChunk);
    for (int i = lo; i < hi; ++i) {
      auto const t = run_trial(cfg, static_cast<std::uint64_t>(i));
      for (std::size_t k = 0; k < steps; ++k) {
        partial[static_cast<std::size_t>(c)].add(k, t.states[k].squaredNorm());
      }
    }
  };

  if (threads == 0) { threads = std::max(1u, std::thread::hardware_concurrency()); }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(chunks));
  if (threads <= 1) {
    for (int c = 0; c < chunks; ++c) {
      run_chunk(c);
    }
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (int c = static_cast<int>(w); c < chunks; c += static_cast<int>(threads)) {
          run_chunk(c);
        }
      });
    }
    for (auto &th : pool) {
      th.join();
    }
  }

  StepMoments total(steps);
  for (auto const &p : partial) { // fixed order keeps the reduction deterministic
    total.merge(p);
  }

  MomentTrajectory out;
  out.source = MomentSource::MonteCarlo;
  out.mean_sq = total.mean;
  out.ci_halfwidth.resize(steps, 0.0);
  if (cfg.trials > 1) {
    double const n = cfg.trials;
    for (std::size_t k = 0; k < steps; ++k) {
      double const var = std::max(0.0, total.m2[k] / (n - 1));
      out.ci_halfwidth[k] = 1.96 * std::sqrt(var / n);
    }
  }
  return out;
}

MomentTrajectory exact_moments(SimConfig const &cfg)
{
  cfg.validate();
  double const p = cfg.dropout();
  auto const   maps = augmented_maps(cfg.plant, cfg.d, p, cfg.K);
  Index const  n = cfg.plant.n();

  VectorXd const z0 = augmented_initial_state(cfg);
  MatrixXd       S = z0 * z0.transpose();

  MomentTrajectory out;
  out.source = MomentSource::Exact;
  out.mean_sq.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  out.mean_sq.push_back(S.topLeftCorner(n, n).trace());
  for (int k = 0; k < cfg.horizon; ++k) {
    MatrixXd next = (1 - p) * maps.delivered * S * maps.delivered.transpose();
    next += p * maps.dropped * S * maps.dropped.transpose();
    S = (next + next.transpose()) / 2;
    out.mean_sq.push_back(std::max(0.0, S.topLeftCorner(n, n).trace()));
  }
  return out;
}

double closed_loop_spectral_radius(DiscretePlant<double> const &plant, int d, double p, MatrixXd const &K)
{
  check_probability(p, "closed_loop_spectral_radius");
  auto const maps = augmented_maps(plant, d, p, K);
  MatrixXd   T = (1 - p) * MatrixXd(Eigen::kroneckerProduct(maps.delivered, maps.delivered));
  T += p * MatrixXd(Eigen::kroneckerProduct(maps.dropped, maps.dropped));
  return spectral_radius(T);
}

bool looks_divergent(MomentTrajectory const &m)
{
  return !m.mean_sq.empty() && m.mean_sq.back() > 1e3 * m.mean_sq.front();
}

} // namespace sdnstab
