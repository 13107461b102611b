#pragma once

#include "bounds.hpp"
#include "simulator.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace sdnstab::cli {

enum ExitCode : int
{
  kOk = 0,
  kInvalid = 1,         // domain / validation / malformed config
  kNotStabilizable = 2, // analytic verdict, machine readable
  kNumericFailure = 3,
  kUsage = 64,
};

// Environment variable consulted for the default simulation seed.
inline constexpr char const *kSeedEnv = "SDNSTAB_SEED";

std::vector<std::string> const &commands();

int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

// (A, rbar) inputs of the two sampling-bound tables.
std::vector<std::pair<double, double>> const &table1_inputs();
std::vector<std::pair<double, double>> const &table2_inputs();

// CSV with header A,rbar,h_u,h_l[,delta_h]; 6 significant digits.
std::string bounds_table_csv(std::vector<std::pair<double, double>> const &rows, bool with_delta);

// Scalar plant A = 0.25, B = 1, h = 1, d = 2, two exponential flows of the given rate,
// x0 = 2 and zero initial controls.
SimConfig replicated_path_scenario(double rate_per_flow, MatrixXd K, int trials, int horizon, std::uint64_t seed);

// DARE gain of the two-flow scenario at rate 0.5 per flow, Q = R = 1.
MatrixXd replicated_path_gain();

std::string moments_csv(MomentTrajectory const &mc, MomentTrajectory const &exact);

} // namespace sdnstab::cli
