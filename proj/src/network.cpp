#include "sdnstab/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdnstab {

namespace {

template <class... Ts> struct overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

double empirical_cdf(EmpiricalCdf const &e, double x)
{
  auto const &pts = e.points;
  // last breakpoint with x_i <= x
  auto it = std::upper_bound(pts.begin(), pts.end(), x, [](double v, auto const &pt) { return v < pt.first; });
  if (it == pts.begin()) { return 0.0; }
  auto const lo = std::prev(it);
  if (it == pts.end() || e.mode == Interpolation::Step) { return lo->second; }
  double const t = (x - lo->first) / (it->first - lo->first);
  return lo->second + t * (it->second - lo->second);
}

double empirical_inverse(EmpiricalCdf const &e, double u)
{
  auto const &pts = e.points;
  if (u <= 0.0) { return 0.0; }
  if (u > pts.back().second) { return std::numeric_limits<double>::infinity(); }
  auto it = std::lower_bound(pts.begin(), pts.end(), u, [](auto const &pt, double v) { return pt.second < v; });
  if (it == pts.begin() || e.mode == Interpolation::Step) { return it->first; }
  auto const lo = std::prev(it);
  double const t = (u - lo->second) / (it->second - lo->second);
  return lo->first + t * (it->first - lo->first);
}

} // namespace

void validate(DelayDistribution const &dist)
{
  std::visit(overloaded{
               [](ExponentialDelay const &e) {
                 if (!(e.rate > 0) || !std::isfinite(e.rate)) { throw DomainError("exponential delay: rate must be positive"); }
               },
               [](DeterministicDelay const &e) {
                 if (!(e.value >= 0) || !std::isfinite(e.value)) {
                   throw DomainError("deterministic delay: value must be nonnegative");
                 }
               },
               [](EmpiricalCdf const &e) {
                 if (e.points.empty()) { throw DomainError("empirical cdf: at least one breakpoint required"); }
                 double prev_x = -1.0, prev_f = 0.0;
                 for (auto const &[x, f] : e.points) {
                   if (!(x >= 0) || !std::isfinite(x)) { throw DomainError("empirical cdf: breakpoints must be finite and >= 0"); }
                   if (!(f >= 0 && f <= 1)) { throw DomainError("empirical cdf: values must lie in [0, 1]"); }
                   if (x < prev_x) { throw DomainError("empirical cdf: breakpoints must be sorted by x"); }
                   if (f < prev_f) { throw DomainError("empirical cdf: values must be nondecreasing"); }
                   prev_x = x;
                   prev_f = f;
                 }
               },
             },
             dist);
}

FlowSet::FlowSet(std::vector<DelayDistribution> f)
  : flows(std::move(f))
{
  if (flows.empty()) { throw DomainError("flow set: at least one flow required"); }
  for (auto const &d : flows) {
    validate(d);
  }
}

FlowSet exponential_flows(std::size_t m, double rate)
{
  return FlowSet(std::vector<DelayDistribution>(m, ExponentialDelay{rate}));
}

DeadlinePolicy::DeadlinePolicy(int slots, double period)
  : d(slots)
  , h(period)
{
  if (d < 1) { throw DomainError("deadline policy: d must be a positive integer"); }
  if (!(h > 0) || !std::isfinite(h)) { throw DomainError("deadline policy: h must be positive"); }
}

double cdf_at(DelayDistribution const &dist, double x)
{
  if (!(x >= 0)) { throw DomainError("cdf_at: x must be nonnegative, got " + std::to_string(x)); }
  return std::visit(overloaded{
                      [x](ExponentialDelay const &e) { return -std::expm1(-e.rate * x); },
                      [x](DeterministicDelay const &e) { return x >= e.value ? 1.0 : 0.0; },
                      [x](EmpiricalCdf const &e) { return empirical_cdf(e, x); },
                    },
                    dist);
}

double survival_at(DelayDistribution const &dist, double x)
{
  if (!(x >= 0)) { throw DomainError("survival_at: x must be nonnegative, got " + std::to_string(x)); }
  return std::visit(overloaded{
                      [x](ExponentialDelay const &e) { return std::exp(-e.rate * x); },
                      [x](DeterministicDelay const &e) { return x >= e.value ? 0.0 : 1.0; },
                      [x](EmpiricalCdf const &e) { return 1.0 - empirical_cdf(e, x); },
                    },
                    dist);
}

double inverse_cdf(DelayDistribution const &dist, double u)
{
  return std::visit(overloaded{
                      [u](ExponentialDelay const &e) { return -std::log1p(-u) / e.rate; },
                      [](DeterministicDelay const &e) { return e.value; },
                      [u](EmpiricalCdf const &e) { return empirical_inverse(e, u); },
                    },
                    dist);
}

DropoutModel dropout_rate(FlowSet const &flows, DeadlinePolicy const &policy)
{
  double const deadline = policy.deadline();
  double       p = 1.0;
  for (auto const &f : flows.flows) {
    p *= survival_at(f, deadline);
  }
  return {std::clamp(p, 0.0, 1.0)};
}

double total_service_rate(FlowSet const &flows)
{
  double r = 0.0;
  for (auto const &f : flows.flows) {
    auto const *e = std::get_if<ExponentialDelay>(&f);
    if (e == nullptr) { throw UnsupportedModelError("total service rate is defined only for exponential delays"); }
    r += e->rate;
  }
  return r;
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
{
  std::uint64_t const a = splitmix64(seed);
  std::uint64_t const b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq       seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

double RngStream::uniform()
{
  return unit_(engine_);
}

double sample_delay(DelayDistribution const &dist, RngStream &rng)
{
  return inverse_cdf(dist, rng.uniform());
}

std::uint8_t sample_arrival(FlowSet const &flows, DeadlinePolicy const &policy, RngStream &rng)
{
  double earliest = std::numeric_limits<double>::infinity();
  // every flow is drawn so the stream position does not depend on earlier outcomes
  for (auto const &f : flows.flows) {
    earliest = std::min(earliest, sample_delay(f, rng));
  }
  return earliest <= policy.deadline() ? 1 : 0;
}

} // namespace sdnstab
