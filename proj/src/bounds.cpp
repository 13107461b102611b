#include "sdnstab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sdnstab {

ScalarPlant::ScalarPlant(double a, double b)
  : A(a)
  , B(b)
{
  if (!(A >= 0) || !std::isfinite(A)) { throw DomainError("scalar plant: A must be finite and >= 0"); }
  if (B == 0 || !std::isfinite(B)) { throw DomainError("scalar plant: B must be finite and nonzero"); }
}

DecoupledPlant::DecoupledPlant(std::vector<double> a, std::vector<double> b)
  : A(std::move(a))
  , B(std::move(b))
{
  if (A.empty() || A.size() != B.size()) { throw DimensionError("decoupled plant: A and B need the same nonzero length"); }
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (!std::isfinite(A[i])) { throw DomainError("decoupled plant: A entries must be finite"); }
    if (B[i] == 0 || !std::isfinite(B[i])) { throw DomainError("decoupled plant: every B_i must be nonzero"); }
    if (i > 0 && A[i] > A[i - 1]) { throw DomainError("decoupled plant: A must be sorted nonincreasing"); }
  }
  mu = static_cast<std::size_t>(std::count_if(A.begin(), A.end(), [](double x) { return x >= 0; }));
  if (mu == 0) { throw DomainError("decoupled plant: at least one mode must satisfy A_i >= 0"); }
}

DecoupledPlant DecoupledPlant::from_unsorted(std::vector<double> a, std::vector<double> b)
{
  if (a.size() != b.size()) { throw DimensionError("decoupled plant: A and B need the same length"); }
  std::vector<std::size_t> idx(a.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a[i] > a[j]; });
  std::vector<double> sa, sb;
  for (auto i : idx) {
    sa.push_back(a[i]);
    sb.push_back(b[i]);
  }
  return DecoupledPlant(std::move(sa), std::move(sb));
}

std::string to_string(Regime r)
{
  switch (r) {
  case Regime::Overprovisioned: return "overprovisioned";
  case Regime::Critical: return "critical";
  case Regime::Underprovisioned: return "underprovisioned";
  }
  return "unknown";
}

std::string to_string(Decision d)
{
  switch (d) {
  case Decision::Stabilizable: return "stabilizable";
  case Decision::UndecidedByBounds: return "undecided-by-bounds";
  case Decision::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

double dropout_threshold(double A, double h, int d)
{
  return 1.0 / (std::exp(2 * A * d * h) * std::expm1(2 * A * h) + 1.0);
}

double deadline_gain(double A, double rbar, double t)
{
  return std::exp((rbar - 2 * A) * t) - std::exp(-2 * A * t);
}

bool scalar_stabilizable(ScalarPlant const &plant, double h, FlowSet const &flows, int d)
{
  if (!(plant.A >= 0)) { throw DomainError("scalar_stabilizable: A must be >= 0"); }
  DeadlinePolicy const policy(d, h);
  return dropout_rate(flows, policy).p < dropout_threshold(plant.A, h, d);
}

DeadlineDecision find_min_deadline(ScalarPlant const &plant, double h, FlowSet const &flows, int d_max)
{
  if (d_max < 1) { throw DomainError("find_min_deadline: d_max must be >= 1"); }
  DeadlineDecision out;
  out.status = Decision::NotApplicable;
  for (int d = 1; d <= d_max; ++d) {
    if (scalar_stabilizable(plant, h, flows, d)) {
      out.stabilizable = true;
      out.status = Decision::Stabilizable;
      out.chosen_d = d;
      return out;
    }
  }
  return out;
}

SamplingBounds sampling_bounds(double A, double rbar)
{
  if (!(rbar > 0) || !std::isfinite(rbar)) { throw DomainError("sampling_bounds: rbar must be positive"); }
  if (!(A >= 0) || !std::isfinite(A)) { throw DomainError("sampling_bounds: A must be >= 0"); }

  SamplingBounds b;
  double const   two_a = 2 * A;
  if (A == 0) {
    b.regime = Regime::Overprovisioned;
    b.note = "A = 0: any dropout rate below 1 is tolerated, every bounded h is admissible";
    return b;
  }
  if (std::abs(rbar - two_a) <= 1e-12 * two_a) {
    b.regime = Regime::Critical;
    b.h_bar = std::log(2.0) / two_a;
    return b;
  }
  if (rbar > two_a) {
    b.regime = Regime::Overprovisioned;
    return b;
  }

  b.regime = Regime::Underprovisioned;
  double const t_bar = (std::log(two_a) - std::log(two_a - rbar)) / rbar;
  double const h_u = std::log1p(deadline_gain(A, rbar, t_bar)) / two_a;
  double const h_l1 = std::log1p(deadline_gain(A, rbar, t_bar + h_u)) / two_a;
  double const h_l2 = std::log1p(deadline_gain(A, rbar, t_bar - h_u)) / two_a;
  b.t_bar = t_bar;
  b.h_u = h_u;
  b.h_l1 = h_l1;
  b.h_l2 = h_l2;
  b.h_l = std::max(h_l1, h_l2);
  return b;
}

DeadlineDecision proposition_check(double A, double rbar, double h)
{
  if (!(h > 0)) { throw DomainError("proposition_check: h must be positive"); }
  DeadlineDecision out;
  SamplingBounds const b = sampling_bounds(A, rbar);
  if (b.regime != Regime::Underprovisioned || !(h > *b.h_l && h <= *b.h_u)) {
    out.status = Decision::NotApplicable;
    return out;
  }

  double const t_bar = *b.t_bar;
  double const ratio = t_bar / h;
  int const    d1 = static_cast<int>(std::ceil(ratio));
  int const    d2 = static_cast<int>(std::floor(ratio));
  out.t_bar = t_bar;
  out.d1 = d1;
  out.d2 = d2;

  // d2 = 0 is not a deadline; f(0) = 0 would never win anyway.
  std::vector<int> candidates;
  if (d2 >= 1) { candidates.push_back(d2); }
  if (d1 != d2 || candidates.empty()) { candidates.push_back(d1); }
  double best = -std::numeric_limits<double>::infinity();
  int    best_d = 0;
  for (int d : candidates) { // ascending, so ties keep the shorter deadline
    double const f = deadline_gain(A, rbar, d * h);
    if (f > best) {
      best = f;
      best_d = d;
    }
  }
  out.f_star = best;
  out.chosen_d = best_d;
  out.stabilizable = std::expm1(2 * A * h) < best;
  out.status = out.stabilizable ? Decision::Stabilizable : Decision::UndecidedByBounds;
  return out;
}

bool decoupled_stabilizable(DecoupledPlant const &plant, double h, FlowSet const &flows, int d)
{
  return scalar_stabilizable(ScalarPlant(plant.A.front(), plant.B.front()), h, flows, d);
}

} // namespace sdnstab
