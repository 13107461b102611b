#include "sdnstab/bounds.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sdnstab;

TEST_CASE("sampling bounds of the replicated-path example")
{
  auto const b = sampling_bounds(0.25, 0.4);
  CHECK(b.regime == Regime::Underprovisioned);
  REQUIRE(b.h_u.has_value());
  CHECK(std::abs(*b.h_u - 0.8571) < 1e-3);
  CHECK(*b.h_u == doctest::Approx(0.8570506564907546).epsilon(1e-12));
  CHECK(*b.h_l1 == doctest::Approx(0.8461915756821574).epsilon(1e-12));
  CHECK(*b.h_l2 == doctest::Approx(0.841732156490803).epsilon(1e-12));
  CHECK(*b.h_l == *b.h_l1);
  CHECK(*b.t_bar == doctest::Approx(4.023594781085251).epsilon(1e-12));
}

TEST_CASE("regression values of two table rows")
{
  auto const a = sampling_bounds(0.4, 0.7);
  CHECK(*a.h_u == doctest::Approx(0.626061910610445).epsilon(1e-12));
  CHECK(*a.h_l == doctest::Approx(0.6196072084229204).epsilon(1e-12));
  auto const b = sampling_bounds(0.5, 0.75);
  CHECK(*b.h_u == doctest::Approx(0.3869415302026467).epsilon(1e-12));
  CHECK(*b.h_l == doctest::Approx(0.38180020145348853).epsilon(1e-12));
}

TEST_CASE("regimes")
{
  CHECK(sampling_bounds(0.25, 0.6).regime == Regime::Overprovisioned);
  CHECK_FALSE(sampling_bounds(0.25, 0.6).h_u.has_value());
  auto const c = sampling_bounds(0.25, 0.5);
  CHECK(c.regime == Regime::Critical);
  CHECK(*c.h_bar == doctest::Approx(std::log(2.0) / 0.5));
  auto const z = sampling_bounds(0.0, 0.3);
  CHECK(z.regime == Regime::Overprovisioned);
  CHECK_FALSE(z.note.empty());
  CHECK_THROWS_AS(sampling_bounds(0.25, 0.0), DomainError);
  CHECK_THROWS_AS(sampling_bounds(0.25, -0.4), DomainError);
  CHECK_THROWS_AS(sampling_bounds(-0.1, 0.4), DomainError);
  CHECK(to_string(Regime::Underprovisioned) == "underprovisioned");
}

TEST_CASE("bounds approach the critical value continuously")
{
  for (double A : {0.1, 0.5, 2.0}) {
    auto const b = sampling_bounds(A, 2 * A * (1 - 1e-7));
    double const h_bar = std::log(2.0) / (2 * A);
    CHECK(std::abs(*b.h_u - h_bar) < 1e-5 * h_bar);
    CHECK(std::abs(*b.h_l - h_bar) < 1e-5 * h_bar);
  }
}

TEST_CASE("lower bound below upper bound and t_bar maximises the deadline gain")
{
  std::mt19937_64                        rng(2);
  std::uniform_real_distribution<double> ua(0.01, 3.0), frac(0.01, 0.99);
  for (int trial = 0; trial < 500; ++trial) {
    double const A = ua(rng), rbar = 2 * A * frac(rng);
    auto const   b = sampling_bounds(A, rbar);
    REQUIRE(b.regime == Regime::Underprovisioned);
    CHECK(*b.h_l < *b.h_u);
    CHECK(*b.h_l > 0);
    double const t = *b.t_bar, fmax = deadline_gain(A, rbar, t);
    for (double dt : {1e-3, 0.1, 1.0}) {
      CHECK(deadline_gain(A, rbar, t + dt * t) <= fmax);
      CHECK(deadline_gain(A, rbar, t - dt * t * 0.5) <= fmax);
    }
  }
}

TEST_CASE("dropout threshold")
{
  CHECK(std::abs(dropout_threshold(0.25, 1.0, 2) - 0.36187) < 1e-4);
  CHECK(dropout_threshold(0.0, 1.0, 2) == 1.0);
}

TEST_CASE("scalar test on the replicated-path example")
{
  ScalarPlant const plant(0.25, 1.0);
  CHECK(scalar_stabilizable(plant, 1.0, exponential_flows(2, 0.5), 2));
  CHECK_FALSE(scalar_stabilizable(plant, 1.0, exponential_flows(2, 0.2), 2));
  CHECK_THROWS_AS(ScalarPlant(-0.1, 1.0), DomainError);
  CHECK_THROWS_AS(ScalarPlant(0.1, 0.0), DomainError);
}

TEST_CASE("find_min_deadline")
{
  ScalarPlant const plant(0.25, 1.0);
  auto const        ok = find_min_deadline(plant, 1.0, exponential_flows(2, 0.5), 50);
  REQUIRE(ok.stabilizable);
  CHECK(*ok.chosen_d == 1);
  CHECK(ok.status == Decision::Stabilizable);

  auto const none = find_min_deadline(plant, 1.0, exponential_flows(2, 0.2), 200);
  CHECK_FALSE(none.stabilizable);
  CHECK_FALSE(none.chosen_d.has_value());
  CHECK_THROWS_AS(find_min_deadline(plant, 1.0, exponential_flows(2, 0.2), 0), DomainError);
}

TEST_CASE("proposition on the underprovisioned example")
{
  auto const r = proposition_check(0.6, 1.0, 0.378);
  CHECK(r.status == Decision::Stabilizable);
  CHECK(*r.d1 == 5);
  CHECK(*r.d2 == 4);
  CHECK(*r.chosen_d == 5);
  CHECK(std::abs(*r.f_star - 0.58171) < 1e-5);

  CHECK(proposition_check(0.25, 0.6, 1.0).status == Decision::NotApplicable);
  CHECK(proposition_check(0.25, 0.4, 0.9).status == Decision::NotApplicable);
  CHECK(proposition_check(0.25, 0.4, 0.5).status == Decision::NotApplicable);
  CHECK(to_string(Decision::UndecidedByBounds) == "undecided-by-bounds");
}

TEST_CASE("proposition agrees with an exhaustive deadline search")
{
  std::mt19937_64                        rng(31);
  std::uniform_real_distribution<double> ua(0.05, 2.0), frac(0.05, 0.95), u01(0.0, 1.0);
  int                                    applicable = 0;
  for (int trial = 0; trial < 400; ++trial) {
    double const A = ua(rng), rbar = 2 * A * frac(rng);
    auto const   b = sampling_bounds(A, rbar);
    double const h = *b.h_l + (*b.h_u - *b.h_l) * (0.001 + 0.999 * u01(rng));
    auto const   r = proposition_check(A, rbar, h);
    REQUIRE(r.status != Decision::NotApplicable);
    ++applicable;
    auto const search = find_min_deadline(ScalarPlant(A, 1.0), h, exponential_flows(1, rbar), 400);
    CHECK(r.stabilizable == search.stabilizable);
    if (r.stabilizable) { CHECK(scalar_stabilizable(ScalarPlant(A, 1.0), h, exponential_flows(1, rbar), *r.chosen_d)); }
  }
  CHECK(applicable == 400);
}

TEST_CASE("no deadline works above the upper bound")
{
  std::mt19937_64                        rng(17);
  std::uniform_real_distribution<double> ua(0.05, 2.0), frac(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    double const A = ua(rng), rbar = 2 * A * frac(rng);
    double const h = *sampling_bounds(A, rbar).h_u * 1.01;
    CHECK_FALSE(find_min_deadline(ScalarPlant(A, 1.0), h, exponential_flows(2, rbar / 2), 300).stabilizable);
  }
}

TEST_CASE("decoupled plant reduces to its fastest unstable mode")
{
  auto const plant = DecoupledPlant::from_unsorted({-0.5, 0.1, 0.25}, {1.0, 2.0, 3.0});
  CHECK(plant.A.front() == 0.25);
  CHECK(plant.B.front() == 3.0);
  CHECK(plant.mu == 2);
  for (double rate : {0.1, 0.2, 0.3, 0.5, 1.0}) {
    for (int d = 1; d <= 4; ++d) {
      auto const flows = exponential_flows(2, rate);
      CHECK(decoupled_stabilizable(plant, 1.0, flows, d) == scalar_stabilizable(ScalarPlant(0.25, 3.0), 1.0, flows, d));
    }
  }
  CHECK_THROWS_AS(DecoupledPlant({0.1, 0.2}, {1, 1}), DomainError);
  CHECK_THROWS_AS(DecoupledPlant({-0.1, -0.2}, {1, 1}), DomainError);
  CHECK_THROWS_AS(DecoupledPlant({0.2, 0.1}, {1, 0}), DomainError);
  CHECK_THROWS_AS(DecoupledPlant({0.2}, {1, 1}), DimensionError);
}
