#pragma once

#include "types.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <variant>
#include <vector>

namespace sdnstab {

// Per-flow delay laws. Times are in the same unit as the sampling period.

struct ExponentialDelay
{
  double rate; // 1/time, > 0
};

struct DeterministicDelay
{
  double value; // time, >= 0
};

enum class Interpolation
{
  Linear,
  Step
};

// Breakpoints (x, F(x)) sorted by x with F nondecreasing in [0, 1]. F is 0 left of the first
// breakpoint and constant at its last value to the right of the last one; any mass missing
// there never arrives.
struct EmpiricalCdf
{
  std::vector<std::pair<double, double>> points;
  Interpolation                          mode = Interpolation::Linear;
};

using DelayDistribution = std::variant<ExponentialDelay, DeterministicDelay, EmpiricalCdf>;

void validate(DelayDistribution const &dist);

struct FlowSet
{
  std::vector<DelayDistribution> flows;

  FlowSet() = default;
  explicit FlowSet(std::vector<DelayDistribution> f);

  std::size_t size() const { return flows.size(); }
};

// m identical exponential flows, the usual replicated-path setup.
FlowSet exponential_flows(std::size_t m, double rate);

struct DeadlinePolicy
{
  int    d = 1;   // slots
  double h = 1.0; // time per slot

  DeadlinePolicy() = default;
  DeadlinePolicy(int slots, double period);

  double deadline() const { return d * h; }
};

struct DropoutModel
{
  double p = 0.0;
};

double cdf_at(DelayDistribution const &dist, double x);

// 1 - F(x), evaluated without cancellation in the far tail.
double survival_at(DelayDistribution const &dist, double x);

// Generalized inverse inf{x >= 0 : F(x) >= u}; +inf when u exceeds the total mass.
double inverse_cdf(DelayDistribution const &dist, double u);

// p = prod_i (1 - F_i(d*h)): probability that every copy misses the deadline.
DropoutModel dropout_rate(FlowSet const &flows, DeadlinePolicy const &policy);

// Sum of exponential rates. Throws UnsupportedModelError for any other delay law.
double total_service_rate(FlowSet const &flows);

// Counter-based derivation of independent streams: the same (seed, stream) pair always
// yields the same sequence regardless of how many other streams exist.
class RngStream
{
public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  double uniform(); // [0, 1)

private:
  std::mt19937_64                        engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

double sample_delay(DelayDistribution const &dist, RngStream &rng);

// One slot of the deadline rule: 1 iff the earliest of the m copies lands within d*h.
std::uint8_t sample_arrival(FlowSet const &flows, DeadlinePolicy const &policy, RngStream &rng);

} // namespace sdnstab
