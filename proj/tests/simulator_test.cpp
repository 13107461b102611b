#include "oracles.hpp"

#include "sdnstab/cli.hpp"
#include "sdnstab/simulator.hpp"

#include <doctest.h>

#include <random>

using namespace sdnstab;

namespace {

MatrixXd scalar(double v)
{
  return MatrixXd::Constant(1, 1, v);
}

SimConfig base_config(MatrixXd const &A_h, MatrixXd const &B_h, int d, FlowSet flows, MatrixXd K, int horizon, int trials)
{
  SimConfig cfg;
  cfg.plant = DiscretePlant<double>(A_h, B_h, 1.0);
  cfg.d = d;
  cfg.flows = std::move(flows);
  cfg.K = std::move(K);
  cfg.horizon = horizon;
  cfg.trials = trials;
  cfg.seed = 7;
  cfg.x0 = VectorXd::Ones(A_h.rows());
  cfg.u_init.assign(static_cast<std::size_t>(d), VectorXd::Zero(B_h.cols()));
  return cfg;
}

SimConfig random_config(std::mt19937_64 &rng, int trials)
{
  std::uniform_int_distribution<int> dn(1, 3), dm(1, 2), dd(1, 3);
  Index const n = dn(rng), m = dm(rng);
  int const   d = dd(rng);
  auto const  plant = discretize(
    ContinuousPlant<double>(oracle::random_unstable_generator(rng, n, 0.05, 0.3), oracle::random_matrix(rng, n, m)), 0.5);
  SimConfig cfg;
  cfg.plant = plant;
  cfg.d = d;
  cfg.flows = exponential_flows(2, 1.5);
  auto const r = dare_solve(plant, d, cfg.dropout(), DareWeights<double>::identity(n, m));
  cfg.K = is_stabilizable(r) ? std::get<DareSolution<double>>(r).K : MatrixXd::Zero(m, n);
  cfg.horizon = 20;
  cfg.trials = trials;
  cfg.seed = rng();
  cfg.x0 = oracle::random_matrix(rng, n, 1);
  for (int i = 0; i < d; ++i) {
    cfg.u_init.push_back(oracle::random_matrix(rng, m, 1));
  }
  return cfg;
}

} // namespace

TEST_CASE("zero gain and guaranteed delivery follow the open loop")
{
  MatrixXd A(2, 2);
  A << 1.1, 0.2, 0, 0.9;
  auto       cfg = base_config(A, MatrixXd::Ones(2, 1), 2, FlowSet({DeterministicDelay{0.5}}), MatrixXd::Zero(1, 2), 10, 1);
  auto const t = run_trial(cfg, 0);
  VectorXd   x = cfg.x0;
  for (int k = 0; k <= 10; ++k) {
    CHECK((t.states[static_cast<std::size_t>(k)] - x).cwiseAbs().maxCoeff() < 1e-12);
    x = A * x;
  }
}

TEST_CASE("no dropouts matches a straight-line scalar recursion")
{
  double const a = 1.2840254166877414, b = 1.1361016667509656, K = -0.7;
  std::vector<double> const u_init{0.3, -0.2};
  auto cfg = base_config(scalar(a), scalar(b), 2, FlowSet({DeterministicDelay{0.1}}), scalar(K), 40, 1);
  cfg.x0 = VectorXd::Constant(1, 2.0);
  cfg.u_init = {VectorXd::Constant(1, u_init[0]), VectorXd::Constant(1, u_init[1])};
  auto const t = run_trial(cfg, 0);
  auto const ref = oracle::scalar_delay_recursion(a, b, K, 2, 0.0, 2.0, u_init, std::vector<int>(40, 1), 40);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CHECK(std::abs(t.states[k](0) - ref[k]) <= 1e-10 * (1 + std::abs(ref[k])));
  }
}

TEST_CASE("random dropouts replay through the scalar recursion")
{
  double const a = 1.2840254166877414, b = 1.1361016667509656, K = -0.7;
  auto         cfg = base_config(scalar(a), scalar(b), 2, exponential_flows(2, 0.5), scalar(K), 30, 1);
  cfg.x0 = VectorXd::Constant(1, 2.0);
  auto const       t = run_trial(cfg, 3);
  std::vector<int> gamma(t.gammas.begin(), t.gammas.end());
  auto const       ref = oracle::scalar_delay_recursion(a, b, K, 2, cfg.dropout(), 2.0, {0.0, 0.0}, gamma, 30);
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CHECK(std::abs(t.states[k](0) - ref[k]) <= 1e-10 * (1 + std::abs(ref[k])));
  }
}

TEST_CASE("trials are reproducible and replay exactly")
{
  auto cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 60, 99);
  auto const a = run_trial(cfg, 5);
  auto const b = run_trial(cfg, 5);
  CHECK(a.states == b.states);
  CHECK(a.gammas == b.gammas);
  CHECK(replays_exactly(cfg, a));
  auto tampered = a;
  tampered.gammas[10] ^= 1;
  CHECK_FALSE(replays_exactly(cfg, tampered));
  auto const c = run_trial(cfg, 6);
  CHECK(a.gammas != c.gammas);
}

TEST_CASE("simulation config validation")
{
  auto cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 10, 1);
  cfg.u_init.pop_back();
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 10, 1);
  cfg.K = MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 10, 1);
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.trials = 1;
  cfg.x0 = VectorXd::Zero(3);
  CHECK_THROWS_AS(run_trial(cfg, 0), DimensionError);
}

TEST_CASE("single-trial Monte Carlo has zero-width interval")
{
  auto const cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 20, 4);
  auto const mc = run_monte_carlo(cfg, 1);
  auto const t = run_trial(cfg, 0);
  for (std::size_t k = 0; k <= 20; ++k) {
    CHECK(mc.mean_sq[k] == doctest::Approx(t.states[k].squaredNorm()));
    CHECK(mc.ci_halfwidth[k] == 0.0);
  }
}

TEST_CASE("exact moments without dropouts are deterministic")
{
  double const a = 1.2840254166877414, b = 1.1361016667509656;
  auto         cfg = base_config(scalar(a), scalar(b), 2, FlowSet({DeterministicDelay{0.1}}), scalar(-0.7), 25, 1);
  auto const   ex = exact_moments(cfg);
  auto const   t = run_trial(cfg, 0);
  for (std::size_t k = 0; k <= 25; ++k) {
    CHECK(ex.mean_sq[k] == doctest::Approx(t.states[k].squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("exact moments with certain dropout follow the open loop")
{
  auto       cfg = base_config(scalar(1.1), scalar(1.0), 1, FlowSet({DeterministicDelay{5.0}}), scalar(-0.5), 10, 1);
  auto const ex = exact_moments(cfg);
  for (std::size_t k = 0; k <= 10; ++k) {
    CHECK(ex.mean_sq[k] == doctest::Approx(std::pow(1.21, static_cast<double>(k))).epsilon(1e-12));
  }
}

TEST_CASE("exact moments equal a full enumeration of dropout sequences")
{
  auto cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 14, 1);
  cfg.u_init = {VectorXd::Constant(1, 0.4), VectorXd::Constant(1, -0.3)};
  double const p = cfg.dropout();
  double const a = cfg.plant.A_h(0, 0), b = cfg.plant.B_h(0, 0), K = cfg.K(0, 0);
  int const    N = cfg.horizon;
  double       expected = 0;
  for (long mask = 0; mask < (1L << N); ++mask) {
    std::vector<int> gamma(static_cast<std::size_t>(N));
    double           prob = 1;
    for (int k = 0; k < N; ++k) {
      bool const dropped = (mask >> k) & 1;
      gamma[static_cast<std::size_t>(k)] = dropped ? 0 : 1;
      prob *= dropped ? p : 1 - p;
    }
    double const x = oracle::scalar_delay_recursion(a, b, K, 2, p, 2.0, {0.4, -0.3}, gamma, N).back();
    expected += prob * x * x;
  }
  CHECK(exact_moments(cfg).mean_sq.back() == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("closed-loop spectral radius examples")
{
  DiscretePlant<double> const stable(scalar(0.5), scalar(1.0), 1.0);
  CHECK(closed_loop_spectral_radius(stable, 1, 0.3, scalar(0.0)) == doctest::Approx(0.25));
  DiscretePlant<double> const unstable(scalar(1.2840254166877414), scalar(1.0), 1.0);
  CHECK(closed_loop_spectral_radius(unstable, 2, 1.0, scalar(-0.5)) == doctest::Approx(std::pow(1.2840254166877414, 2)));
}

TEST_CASE("Monte Carlo brackets the exact second moment on random configurations")
{
  std::mt19937_64 rng(123);
  int             inside = 0, total = 0;
  for (int c = 0; c < 20; ++c) {
    auto const cfg = random_config(rng, 2000);
    auto const mc = run_monte_carlo(cfg, 1);
    auto const ex = exact_moments(cfg);
    for (std::size_t k = 0; k < ex.mean_sq.size(); ++k) {
      double const slack = 1e-9 * (1 + ex.mean_sq[k]);
      inside += std::abs(mc.mean_sq[k] - ex.mean_sq[k]) <= mc.ci_halfwidth[k] + slack;
      ++total;
    }
  }
  CHECK(static_cast<double>(inside) >= 0.9 * total);
}

TEST_CASE("predicted state is the conditional mean of the state d steps ahead")
{
  auto const cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1, 8, 11);
  int const  k = 4, d = cfg.d, N = 100000;
  // History up to slot k is fixed by trial 0; only the in-flight packets are resampled.
  auto const prefix = run_trial(cfg, 0);
  double const xhat = predicted_state(cfg, prefix, k)(0);

  double       sum = 0, sum_sq = 0;
  double const a = cfg.plant.A_h(0, 0), b = cfg.plant.B_h(0, 0);
  RngStream    rng(cfg.seed, 1u << 20);
  DeadlinePolicy const policy(d, cfg.plant.h);
  for (int i = 0; i < N; ++i) {
    double x = prefix.states[static_cast<std::size_t>(k)](0);
    for (int j = 0; j < d; ++j) {
      double const u = prefix.controls[static_cast<std::size_t>(k - d + j)](0);
      x = a * x + sample_arrival(cfg.flows, policy, rng) * b * u;
    }
    sum += x;
    sum_sq += x * x;
  }
  double const mean = sum / N;
  double const se = std::sqrt((sum_sq / N - mean * mean) / N);
  CHECK(std::abs(mean - xhat) <= 4 * se + 1e-12);
}

TEST_CASE("Monte Carlo results do not depend on the thread count")
{
  auto const cfg = cli::replicated_path_scenario(0.5, cli::replicated_path_gain(), 1000, 30, 5);
  auto const one = run_monte_carlo(cfg, 1);
  auto const four = run_monte_carlo(cfg, 4);
  CHECK(one.mean_sq == four.mean_sq);
  CHECK(one.ci_halfwidth == four.ci_halfwidth);
}

TEST_CASE("divergence heuristic")
{
  MomentTrajectory m;
  m.mean_sq = {1.0, 10.0, 2000.0};
  CHECK(looks_divergent(m));
  m.mean_sq = {1.0, 0.5};
  CHECK_FALSE(looks_divergent(m));
}
