#pragma once

#include "dynamics.hpp"
#include "network.hpp"
#include "stabilization.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdnstab::cli {

using json = nlohmann::json;

// Malformed configuration; the message starts with the offending field path.
struct ConfigError : DomainError
{
  using DomainError::DomainError;
};

struct SimSettings
{
  int                                  horizon = 60;
  int                                  trials = 10000;
  std::optional<std::uint64_t>         seed;
  std::optional<VectorXd>              x0;
  std::optional<std::vector<VectorXd>> u_init; // u_{-d} .. u_{-1}
};

struct ToolConfig
{
  std::optional<ContinuousPlant<double>> continuous;
  std::optional<DiscretePlant<double>>   discrete;
  std::optional<FlowSet>                 flows;
  std::optional<int>                     d;
  std::optional<double>                  h;
  std::optional<double>                  p; // explicit dropout rate, overrides the flows
  std::optional<MatrixXd>                K;
  std::optional<MatrixXd>                Q; // identity when absent
  std::optional<MatrixXd>                R;
  SimSettings                            sim;
  std::string                            format = "json";
  std::string                            path = "-";
  int                                    d_max = 100;
  double                                 tol_p = 1e-4;
  std::optional<double>                  p_hat;
  double                                 grid_step = 1e-2;

  DiscretePlant<double> discrete_plant() const;
  DareWeights<double>   weights() const;
  double                dropout() const;
  int                   slots() const;
  double                period() const;
  FlowSet const        &flow_set() const;
};

MatrixXd parse_matrix(json const &j, std::string const &path);
VectorXd parse_vector(json const &j, std::string const &path);
FlowSet  parse_flows(json const &j, std::string const &path);

ToolConfig parse_config(json const &j);
ToolConfig load_config(std::string const &file);

json to_json(MatrixXd const &M);

} // namespace sdnstab::cli
