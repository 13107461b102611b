#pragma once

#include "network.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sdnstab {

struct ScalarPlant
{
  double A = 0; // >= 0
  double B = 1; // != 0

  ScalarPlant() = default;
  ScalarPlant(double a, double b);
};

// Diagonal plant with modes sorted A_1 >= ... >= A_mu >= 0 > A_{mu+1} >= ... >= A_n.
struct DecoupledPlant
{
  std::vector<double> A;
  std::vector<double> B;
  std::size_t         mu = 0; // count of nonnegative modes

  DecoupledPlant() = default;
  DecoupledPlant(std::vector<double> a, std::vector<double> b);

  // Sorts (A_i, B_i) pairs by A descending before validating.
  static DecoupledPlant from_unsorted(std::vector<double> a, std::vector<double> b);
};

enum class Regime
{
  Overprovisioned,  // rbar > 2A
  Critical,         // rbar = 2A
  Underprovisioned, // 0 < rbar < 2A
};

std::string to_string(Regime r);

struct SamplingBounds
{
  Regime                regime = Regime::Overprovisioned;
  std::optional<double> h_bar;
  std::optional<double> t_bar;
  std::optional<double> h_u;
  std::optional<double> h_l1;
  std::optional<double> h_l2;
  std::optional<double> h_l;
  std::string           note;
};

enum class Decision
{
  Stabilizable,
  UndecidedByBounds, // sufficient test inconclusive; fall back to the deadline search
  NotApplicable,     // h outside (h_l, h_u] or rbar >= 2A
};

std::string to_string(Decision d);

struct DeadlineDecision
{
  bool                  stabilizable = false;
  Decision              status = Decision::NotApplicable;
  std::optional<int>    chosen_d;
  std::optional<double> f_star;
  std::optional<int>    d1;
  std::optional<int>    d2;
  std::optional<double> t_bar;
};

// Largest dropout rate a scalar mode A >= 0 tolerates with deadline d_bar = d*h:
// 1 / (e^{2A d_bar} (e^{2Ah} - 1) + 1).
double dropout_threshold(double A, double h, int d);

// f(t) = e^{(rbar - 2A) t} - e^{-2A t}
double deadline_gain(double A, double rbar, double t);

bool scalar_stabilizable(ScalarPlant const &plant, double h, FlowSet const &flows, int d);

DeadlineDecision find_min_deadline(ScalarPlant const &plant, double h, FlowSet const &flows, int d_max);

SamplingBounds sampling_bounds(double A, double rbar);

DeadlineDecision proposition_check(double A, double rbar, double h);

bool decoupled_stabilizable(DecoupledPlant const &plant, double h, FlowSet const &flows, int d);

} // namespace sdnstab
