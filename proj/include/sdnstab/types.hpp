#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sdnstab {

template <typename Scalar> using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

// Invalid argument values: negative times, probabilities outside [0,1], non-PD weights.
struct DomainError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

// A quantity is only defined for a narrower delay model than the one supplied.
struct UnsupportedModelError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

// Analytic verdict: the plant cannot be stabilized even without dropouts.
struct NotStabilizableError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Numerical breakdown (singular solves, non-converging iterations).
struct ConditioningError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, std::string const &what)
{
  if (!cond) { throw DomainError(what); }
}

} // namespace sdnstab
