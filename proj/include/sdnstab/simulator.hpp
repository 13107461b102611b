#pragma once

#include "network.hpp"
#include "stabilization.hpp"

#include <cstdint>
#include <vector>

namespace sdnstab {

struct SimConfig
{
  DiscretePlant<double> plant;
  int                   d = 1;
  FlowSet               flows;
  MatrixXd              K;           // m_u x n, applied to the predicted state
  int                   horizon = 1; // N
  int                   trials = 1;
  std::uint64_t         seed = 1;
  VectorXd              x0;
  std::vector<VectorXd> u_init; // u_{-d}, ..., u_{-1}

  void   validate() const;
  double dropout() const { return dropout_rate(flows, DeadlinePolicy(d, plant.h)).p; }
};

struct TrialTrajectory
{
  std::vector<VectorXd>     states;   // x_0 .. x_N
  std::vector<VectorXd>     controls; // u_0 .. u_{N-1}
  std::vector<std::uint8_t> gammas;   // gammas[i] = gamma_{i-d}, i = 0 .. N-1
};

enum class MomentSource
{
  Exact,
  MonteCarlo
};

struct MomentTrajectory
{
  std::vector<double> mean_sq; // E||x_k||^2, k = 0..N
  MomentSource        source = MomentSource::Exact;
  std::vector<double> ci_halfwidth; // Monte Carlo only: 1.96 * sample std / sqrt(trials)
};

// Closed loop on z_k = (x_k, u_{k-1}, ..., u_{k-d}): z_{k+1} = M(gamma_{k-d}) z_k.
struct AugmentedMaps
{
  MatrixXd delivered; // gamma = 1
  MatrixXd dropped;   // gamma = 0
};

AugmentedMaps augmented_maps(DiscretePlant<double> const &plant, int d, double p, MatrixXd const &K);

VectorXd augmented_initial_state(SimConfig const &cfg);

TrialTrajectory run_trial(SimConfig const &cfg, std::uint64_t trial_index);

// Re-evaluates x_{k+1} = A_h x_k + gamma_{k-d} B_h u_{k-d} and the control law; true iff bit-identical.
bool replays_exactly(SimConfig const &cfg, TrialTrajectory const &t);

// Predicted state x^_{k+d|k-1} of a stored trajectory.
VectorXd predicted_state(SimConfig const &cfg, TrialTrajectory const &t, int k);

// threads = 0 uses hardware concurrency. Results do not depend on the thread count.
MomentTrajectory run_monte_carlo(SimConfig const &cfg, unsigned threads = 0);

MomentTrajectory exact_moments(SimConfig const &cfg);

// Spectral radius of S -> (1-p) M1 S M1' + p M0 S M0' on the augmented state.
double closed_loop_spectral_radius(DiscretePlant<double> const &plant, int d, double p, MatrixXd const &K);

// Reporting heuristic only: final second moment above 1e3 times the initial one.
bool looks_divergent(MomentTrajectory const &m);

} // namespace sdnstab
