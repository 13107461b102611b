#pragma once

#include "types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace sdnstab {

// Continuous-time plant dx/dt = A x + B u.
template <typename Scalar = double> struct ContinuousPlant
{
  Matrix<Scalar> A;
  Matrix<Scalar> B;

  ContinuousPlant() = default;
  ContinuousPlant(Matrix<Scalar> a, Matrix<Scalar> b)
    : A(std::move(a))
    , B(std::move(b))
  {
    if (A.rows() < 1 || A.rows() != A.cols()) { throw DimensionError("plant: A must be square with n >= 1"); }
    if (B.rows() != A.rows() || B.cols() < 1) { throw DimensionError("plant: B must have n rows and at least one column"); }
    if (!A.allFinite() || !B.allFinite()) { throw DomainError("plant: entries must be finite"); }
  }

  Index n() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
};

// Zero-order-hold sampled plant x_{k+1} = A_h x_k + B_h u_k with period h.
template <typename Scalar = double> struct DiscretePlant
{
  Matrix<Scalar> A_h;
  Matrix<Scalar> B_h;
  Scalar         h{1};

  DiscretePlant() = default;
  DiscretePlant(Matrix<Scalar> a, Matrix<Scalar> b, Scalar period)
    : A_h(std::move(a))
    , B_h(std::move(b))
    , h(period)
  {
    if (A_h.rows() < 1 || A_h.rows() != A_h.cols()) { throw DimensionError("discrete plant: A_h must be square"); }
    if (B_h.rows() != A_h.rows() || B_h.cols() < 1) { throw DimensionError("discrete plant: B_h must have n rows"); }
    if (!(h > 0)) { throw DomainError("discrete plant: sampling period h must be positive"); }
  }

  Index n() const { return A_h.rows(); }
  Index inputs() const { return B_h.cols(); }
};

struct AssumptionTolerances
{
  double eigen_gap = 1e-8;  // distinctness, and max |imag| still counted as real
  double rank_rel = 1e-10;  // singular values below rank_rel * sigma_max are zero
};

struct AssumptionReport
{
  bool                              h1_unstable_real_distinct = false;
  bool                              h2_full_column_rank = false;
  bool                              h3_controllable = false;
  std::optional<bool>               h4_scalar_nonneg; // only set for n = m_u = 1
  std::vector<std::complex<double>> eigenvalues;
  std::string                       notes;

  bool h1_to_h3() const { return h1_unstable_real_distinct && h2_full_column_rank && h3_controllable; }
};

template <typename Scalar> Matrix<Scalar> mat_exp(Matrix<Scalar> const &M)
{
  if (M.rows() != M.cols()) { throw DimensionError("mat_exp: matrix must be square"); }
  if (!M.allFinite()) { throw DomainError("mat_exp: entries must be finite"); }
  if (M.rows() == 0) { return M; }
  // Eigen's implementation is Pade scaling-and-squaring.
  return M.exp();
}

template <typename Scalar> Matrix<Scalar> mat_power(Matrix<Scalar> const &M, int d)
{
  if (M.rows() != M.cols()) { throw DimensionError("mat_power: matrix must be square"); }
  if (d < 0) { throw DomainError("mat_power: exponent must be nonnegative"); }
  Matrix<Scalar> result = Matrix<Scalar>::Identity(M.rows(), M.cols());
  Matrix<Scalar> base = M;
  for (unsigned e = static_cast<unsigned>(d); e != 0; e >>= 1) {
    if (e & 1u) { result = result * base; }
    if (e > 1) { base = base * base; }
  }
  return result;
}

// A_h = e^{Ah}, B_h = int_0^h e^{As} B ds, both read off exp([[A, B], [0, 0]] h).
template <typename Scalar> DiscretePlant<Scalar> discretize(ContinuousPlant<Scalar> const &plant, Scalar h)
{
  if (!(h > 0) || !std::isfinite(static_cast<double>(h))) { throw DomainError("discretize: h must be positive"); }
  Index const    n = plant.n();
  Index const    m = plant.inputs();
  Matrix<Scalar> aug = Matrix<Scalar>::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = plant.A * h;
  aug.topRightCorner(n, m) = plant.B * h;
  Matrix<Scalar> const E = mat_exp<Scalar>(aug);
  return DiscretePlant<Scalar>(E.topLeftCorner(n, n), E.topRightCorner(n, m), h);
}

template <typename Scalar> Index numerical_rank(Matrix<Scalar> const &M, double rank_rel)
{
  if (M.size() == 0) { return 0; }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(M);
  auto const &s = svd.singularValues();
  if (s.size() == 0 || s(0) == Scalar(0)) { return 0; }
  Scalar const cut = Scalar(rank_rel) * s(0);
  Index        r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) { ++r; }
  }
  return r;
}

// [B, AB, ..., A^{n-1}B]
template <typename Scalar> Matrix<Scalar> controllability_matrix(Matrix<Scalar> const &A, Matrix<Scalar> const &B)
{
  Index const    n = A.rows();
  Index const    m = B.cols();
  Matrix<Scalar> C(n, n * m);
  Matrix<Scalar> block = B;
  for (Index i = 0; i < n; ++i) {
    C.middleCols(i * m, m) = block;
    block = A * block;
  }
  return C;
}

namespace detail {

// Shared by the continuous (H1: Re >= 0) and sampled (|lambda| >= 1) checks.
template <typename Scalar>
AssumptionReport check_pair(Matrix<Scalar> const &A, Matrix<Scalar> const &B, bool discrete, AssumptionTolerances tol)
{
  AssumptionReport report;
  Eigen::EigenSolver<Matrix<Scalar>> es(A, false);
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    auto const &l = es.eigenvalues()(i);
    report.eigenvalues.emplace_back(static_cast<double>(l.real()), static_cast<double>(l.imag()));
  }

  bool all_real = true;
  bool unstable = false;
  for (auto const &l : report.eigenvalues) {
    if (std::abs(l.imag()) > tol.eigen_gap) { all_real = false; }
    if (discrete ? std::abs(l) >= 1.0 : l.real() >= 0.0) { unstable = true; }
  }
  bool distinct = true;
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
    for (std::size_t j = i + 1; j < report.eigenvalues.size(); ++j) {
      if (std::abs(report.eigenvalues[i] - report.eigenvalues[j]) <= tol.eigen_gap) { distinct = false; }
    }
  }
  report.h1_unstable_real_distinct = all_real && unstable && distinct;
  report.h2_full_column_rank = numerical_rank<Scalar>(B, tol.rank_rel) == B.cols();
  report.h3_controllable = numerical_rank<Scalar>(controllability_matrix<Scalar>(A, B), tol.rank_rel) == A.rows();

  if (!all_real) {
    report.notes += "complex eigenvalues present; maximum-dropout-rate uniqueness is not guaranteed, "
                    "bisection results are advisory. ";
  }
  if (!distinct) { report.notes += "repeated eigenvalues. "; }
  if (!unstable) { report.notes += "no unstable mode; any dropout rate below 1 is tolerated. "; }
  return report;
}

} // namespace detail

template <typename Scalar>
AssumptionReport check_assumptions(ContinuousPlant<Scalar> const &plant, AssumptionTolerances tol = {})
{
  AssumptionReport report = detail::check_pair<Scalar>(plant.A, plant.B, false, tol);
  if (plant.n() == 1 && plant.inputs() == 1) {
    report.h4_scalar_nonneg = plant.A(0, 0) >= Scalar(0) && plant.B(0, 0) != Scalar(0);
  }
  return report;
}

// Same checks mapped to the sampled plant: A_h eigenvalues real, distinct, one outside the open unit disc.
template <typename Scalar>
AssumptionReport check_assumptions(DiscretePlant<Scalar> const &plant, AssumptionTolerances tol = {})
{
  return detail::check_pair<Scalar>(plant.A_h, plant.B_h, true, tol);
}

} // namespace sdnstab
