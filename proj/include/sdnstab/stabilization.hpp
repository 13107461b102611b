#pragma once

#include "dynamics.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace sdnstab {

template <typename Scalar = double> struct DareWeights
{
  Matrix<Scalar> Q;
  Matrix<Scalar> R;

  DareWeights() = default;
  DareWeights(Matrix<Scalar> q, Matrix<Scalar> r)
    : Q(std::move(q))
    , R(std::move(r))
  {
    check_spd(Q, "Q");
    check_spd(R, "R");
  }

  static DareWeights identity(Index n, Index m)
  {
    return DareWeights(Matrix<Scalar>::Identity(n, n), Matrix<Scalar>::Identity(m, m));
  }

private:
  static void check_spd(Matrix<Scalar> const &M, char const *name)
  {
    if (M.rows() < 1 || M.rows() != M.cols()) { throw DimensionError(std::string("weights: ") + name + " must be square"); }
    if (!M.allFinite()) { throw DomainError(std::string("weights: ") + name + " must be finite"); }
    Scalar const scale = std::max<Scalar>(Scalar(1), M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      throw DomainError(std::string("weights: ") + name + " must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(M, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > Scalar(0))) {
      throw DomainError(std::string("weights: ") + name + " must be positive definite");
    }
  }
};

struct DareOptions
{
  double tol = 1e-12;            // relative Frobenius step
  int    max_iter = 100000;
  double divergence_cap = 1e12;  // ||P||_F above this is divergence
  int    certify_after = 1000;   // value-iteration steps before gain certification starts
  int    certify_every = 100;
  int    growth_window = 50;     // consecutive norm increases that count as monotone growth
};

template <typename Scalar = double> struct DareSolution
{
  Matrix<Scalar> P;
  Matrix<Scalar> Phi;
  Matrix<Scalar> L;
  Matrix<Scalar> K; // u = K * predicted state, K = -Phi^{-1} L
  int            iterations = 0;
  Scalar         residual{0};
  bool           policy_refined = false; // finished or polished by policy iteration
};

struct NotStabilizable
{
  int         iterations = 0;
  double      last_norm = 0;
  std::string reason;
};

template <typename Scalar = double> using DareResult = std::variant<DareSolution<Scalar>, NotStabilizable>;

template <typename Scalar = double> struct PredictorCoeffs
{
  Matrix<Scalar>              state;  // A_h^d
  std::vector<Matrix<Scalar>> inputs; // (1-p) A_h^i B_h, i = 0..d-1, multiplying u_{k-i-1}
};

template <typename Scalar = double> struct DleSolution
{
  Matrix<Scalar> P;
  Scalar         spectral_radius{0};
  bool           feasible = false;
  bool           marginal = false; // rho within 1e-10 of 1; (I - T) treated as singular
};

struct StabilityMargin
{
  double p_max = 1.0;
  double bracket_width = 0.0;
  bool   advisory = false; // sampled plant violates the real/distinct/unstable/controllable premises
};

struct RobustGridReport
{
  double              p_hat = 0;
  std::vector<double> grid;
  std::vector<double> spectral_radii;
  double              worst_p = 0;
  double              worst_radius = 0;
  bool                all_feasible = false;
};

template <typename Derived> auto spectral_radius(Eigen::MatrixBase<Derived> const &M)
{
  using Scalar = typename Derived::Scalar;
  if (M.rows() == 0) { return Scalar(0); }
  Eigen::EigenSolver<Matrix<Scalar>> es(M.eval(), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline void check_probability(double p, char const *what)
{
  if (!(p >= 0.0 && p <= 1.0)) { throw DomainError(std::string(what) + ": probability must lie in [0, 1]"); }
}

template <typename Scalar>
PredictorCoeffs<Scalar> predictor_coeffs(DiscretePlant<Scalar> const &plant, int d, double p)
{
  if (d < 1) { throw DomainError("predictor_coeffs: d must be >= 1"); }
  check_probability(p, "predictor_coeffs");
  PredictorCoeffs<Scalar> c;
  c.state = mat_power<Scalar>(plant.A_h, d);
  Matrix<Scalar> AiB = plant.B_h;
  for (int i = 0; i < d; ++i) {
    c.inputs.push_back(Scalar(1 - p) * AiB);
    AiB = plant.A_h * AiB;
  }
  return c;
}

// M1 = A_h + (1-p) B_h K and M2 = A_h^d B_h K, weight c = p(1-p) on the M2 term.
template <typename Scalar> struct ClosedLoopFactors
{
  Matrix<Scalar> M1;
  Matrix<Scalar> M2;
  Scalar         c;
};

template <typename Scalar>
ClosedLoopFactors<Scalar> closed_loop_factors(DiscretePlant<Scalar> const &plant, int d, double p, Matrix<Scalar> const &K)
{
  if (K.rows() != plant.inputs() || K.cols() != plant.n()) { throw DimensionError("gain K must be m_u x n"); }
  return {plant.A_h + Scalar(1 - p) * plant.B_h * K, mat_power<Scalar>(plant.A_h, d) * plant.B_h * K, Scalar(p * (1 - p))};
}

// Kronecker lift of X -> M1' X M1 + c M2' X M2 on column-major vec(X).
template <typename Scalar> Matrix<Scalar> lifted_operator(ClosedLoopFactors<Scalar> const &f)
{
  Matrix<Scalar> const M1t = f.M1.transpose();
  Matrix<Scalar> const M2t = f.M2.transpose();
  Matrix<Scalar>       T = Eigen::kroneckerProduct(M1t, M1t);
  T += f.c * Matrix<Scalar>(Eigen::kroneckerProduct(M2t, M2t));
  return T;
}

// L_K(p, X) = X - M1' X M1 - p(1-p) M2' X M2
template <typename Scalar>
Matrix<Scalar> lyapunov_operator_eval(DiscretePlant<Scalar> const &plant, int d, Matrix<Scalar> const &K, double p,
                                      Matrix<Scalar> const &X)
{
  check_probability(p, "lyapunov_operator_eval");
  if (X.rows() != plant.n() || X.cols() != plant.n()) { throw DimensionError("lyapunov_operator_eval: X must be n x n"); }
  auto const f = closed_loop_factors(plant, d, p, K);
  return X - f.M1.transpose() * X * f.M1 - f.c * f.M2.transpose() * X * f.M2;
}

namespace detail {

template <typename Scalar> Matrix<Scalar> symmetrize(Matrix<Scalar> const &M)
{
  return (M + M.transpose()) / Scalar(2);
}

template <typename Scalar> bool is_positive_definite(Matrix<Scalar> const &M)
{
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > Scalar(0);
}

template <typename Scalar> Matrix<Scalar> unvec(Vector<Scalar> const &v, Index n)
{
  return Eigen::Map<Matrix<Scalar> const>(v.data(), n, n);
}

// Solves (I - T) vec(P) = vec(W) for the lifted operator of a fixed gain.
template <typename Scalar> Matrix<Scalar> solve_lifted(Matrix<Scalar> const &T, Matrix<Scalar> const &W)
{
  Index const          n = W.rows();
  Matrix<Scalar> const I_T = Matrix<Scalar>::Identity(T.rows(), T.cols()) - T;
  Eigen::PartialPivLU<Matrix<Scalar>> lu(I_T);
  Vector<Scalar> const w = Eigen::Map<Vector<Scalar> const>(W.data(), W.size());
  return symmetrize<Scalar>(unvec<Scalar>(lu.solve(w), n));
}

// Fixed quantities of the delay-dependent Riccati map for one (plant, d, p, Q, R).
template <typename Scalar> class RiccatiMap
{
public:
  RiccatiMap(DiscretePlant<Scalar> const &plant, int d, double p, DareWeights<Scalar> const &w)
    : plant_(plant)
    , d_(d)
    , p_(p)
    , w_(w)
    , q_(Scalar(1 - p))
    , c_(Scalar(p * (1 - p)))
  {
    if (w.Q.rows() != plant.n()) { throw DimensionError("dare: Q must be n x n"); }
    if (w.R.rows() != plant.inputs()) { throw DimensionError("dare: R must be m_u x m_u"); }
    AdB_ = mat_power<Scalar>(plant.A_h, d) * plant.B_h;
    S_ = Matrix<Scalar>::Zero(plant.inputs(), plant.inputs());
    Matrix<Scalar> AiB = plant.B_h;
    for (int i = 0; i <= d; ++i) {
      S_ += c_ * AiB.transpose() * w.Q * AiB;
      AiB = plant.A_h * AiB;
    }
  }

  Matrix<Scalar> phi(Matrix<Scalar> const &P) const
  {
    auto const &B = plant_.B_h;
    return symmetrize<Scalar>(q_ * q_ * B.transpose() * P * B + c_ * AdB_.transpose() * P * AdB_ + S_ + w_.R);
  }

  Matrix<Scalar> ell(Matrix<Scalar> const &P) const { return q_ * plant_.B_h.transpose() * P * plant_.A_h; }

  Matrix<Scalar> gain(Matrix<Scalar> const &Phi, Matrix<Scalar> const &L) const
  {
    Eigen::LLT<Matrix<Scalar>> llt(Phi);
    if (llt.info() != Eigen::Success || !(llt.rcond() > Scalar(1e-14))) {
      throw ConditioningError("dare: Phi is numerically singular");
    }
    return -llt.solve(L);
  }

  // A'PA + Q - L' Phi^{-1} L, written as A'PA + Q + L'K.
  Matrix<Scalar> apply(Matrix<Scalar> const &P, Matrix<Scalar> const &L, Matrix<Scalar> const &K) const
  {
    return symmetrize<Scalar>(plant_.A_h.transpose() * P * plant_.A_h + w_.Q + L.transpose() * K);
  }

  // Cost weight of a fixed gain: P_K = T_K(P_K) + Q + K'(S + R)K.
  Matrix<Scalar> gain_cost(Matrix<Scalar> const &K) const { return symmetrize<Scalar>(w_.Q + K.transpose() * (S_ + w_.R) * K); }

  Matrix<Scalar> lifted(Matrix<Scalar> const &K) const { return lifted_operator(closed_loop_factors(plant_, d_, p_, K)); }

  Scalar residual(Matrix<Scalar> const &P) const
  {
    Matrix<Scalar> const L = ell(P);
    return (P - apply(P, L, gain(phi(P), L))).norm();
  }

  DareSolution<Scalar> finish(Matrix<Scalar> P, int iterations, bool refined) const
  {
    DareSolution<Scalar> s;
    s.P = std::move(P);
    s.Phi = phi(s.P);
    s.L = ell(s.P);
    s.K = gain(s.Phi, s.L);
    s.iterations = iterations;
    s.residual = residual(s.P);
    s.policy_refined = refined;
    return s;
  }

  // Policy iteration from a gain whose second-moment operator is already contractive.
  // Returns an empty matrix if a step loses stability or positivity.
  Matrix<Scalar> refine(Matrix<Scalar> K, double tol, int &iterations) const
  {
    Matrix<Scalar> P_prev;
    for (int it = 0; it < 200; ++it) {
      ++iterations;
      Matrix<Scalar> const T = lifted(K);
      if (!(spectral_radius(T) < Scalar(1))) { return {}; }
      Matrix<Scalar> P = solve_lifted<Scalar>(T, gain_cost(K));
      if (!P.allFinite() || !is_positive_definite<Scalar>(P)) { return {}; }
      Matrix<Scalar> const L = ell(P);
      K = gain(phi(P), L);
      if (P_prev.size() != 0 && (P - P_prev).norm() <= Scalar(tol) * (Scalar(1) + P_prev.norm())) { return P; }
      P_prev = std::move(P);
    }
    return {};
  }

private:
  DiscretePlant<Scalar> const &plant_;
  int                          d_;
  double                       p_;
  DareWeights<Scalar> const   &w_;
  Scalar                       q_;
  Scalar                       c_;
  Matrix<Scalar>               AdB_;
  Matrix<Scalar>               S_;
};

} // namespace detail

/*
 * Delay-dependent Riccati equation
 *
 *   P   = A_h' P A_h + Q - L' Phi^{-1} L
 *   Phi = (1-p)^2 B_h' P B_h + p(1-p) B_h' (A_h')^d P A_h^d B_h + sum_{i=0}^{d} p(1-p) B_h' (A_h')^i Q A_h^i B_h + R
 *   L   = (1-p) B_h' P A_h
 *
 * solved by value iteration from P_0 = Q. Divergence (||P||_F beyond the cap, or the iteration
 * limit reached while ||P||_F is still increasing) is reported as NotStabilizable.
 *
 * Close to the maximum dropout rate the fixed point is approached at a rate near one. After
 * `certify_after` steps the current iterate's gain is tested every `certify_every` steps; a gain
 * whose second-moment operator has spectral radius below one proves a solution exists, and the
 * remaining distance is covered by policy iteration. Converged value iterates are polished the
 * same way when that lowers the residual.
 */
template <typename Scalar>
DareResult<Scalar> dare_solve(DiscretePlant<Scalar> const &plant, int d, double p, DareWeights<Scalar> const &weights,
                              DareOptions const &opts = {})
{
  if (d < 1) { throw DomainError("dare_solve: d must be >= 1"); }
  check_probability(p, "dare_solve");
  if (!(opts.tol > 0)) { throw DomainError("dare_solve: tol must be positive"); }

  detail::RiccatiMap<Scalar> const map(plant, d, p, weights);
  Matrix<Scalar>                   P = weights.Q;
  Scalar                           norm = P.norm();
  int                              growth = 0;

  for (int j = 1; j <= opts.max_iter; ++j) {
    Matrix<Scalar> const L = map.ell(P);
    Matrix<Scalar> const K = map.gain(map.phi(P), L);

    if (j > opts.certify_after && (j - opts.certify_after) % opts.certify_every == 0 &&
        spectral_radius(map.lifted(K)) < Scalar(1)) {
      int            iterations = j;
      Matrix<Scalar> refined = map.refine(K, opts.tol, iterations);
      if (refined.size() != 0) { return map.finish(std::move(refined), iterations, true); }
    }

    Matrix<Scalar> next = map.apply(P, L, K);
    Scalar const   next_norm = next.norm();
    if (!next.allFinite() || next_norm > Scalar(opts.divergence_cap)) {
      return NotStabilizable{j, static_cast<double>(next_norm), "iterates exceeded the divergence cap"};
    }
    Scalar const step = (next - P).norm();
    growth = next_norm > norm ? growth + 1 : 0;
    P = std::move(next);
    if (step <= Scalar(opts.tol) * (Scalar(1) + norm)) {
      // Slow contraction leaves an error of step / (1 - rate); a few policy steps remove it.
      int            iterations = j;
      Matrix<Scalar> polished = map.refine(map.gain(map.phi(P), map.ell(P)), opts.tol, iterations);
      if (polished.size() != 0 && map.residual(polished) < map.residual(P)) {
        return map.finish(std::move(polished), iterations, true);
      }
      return map.finish(std::move(P), j, false);
    }
    norm = next_norm;
  }

  if (growth >= opts.growth_window) {
    return NotStabilizable{opts.max_iter, static_cast<double>(norm), "iteration limit reached while iterates still grow"};
  }
  throw ConditioningError("dare_solve: no convergence within the iteration limit");
}

template <typename Scalar> bool is_stabilizable(DareResult<Scalar> const &r)
{
  return std::holds_alternative<DareSolution<Scalar>>(r);
}

/*
 * Delay-dependent Lyapunov equation for a fixed gain K:
 *   P = Q + M1' P M1 + p(1-p) M2' P M2.
 * spectral_radius is that of the lifted operator; the equation is solved only when it is
 * below one (margin 1e-10).
 */
template <typename Scalar>
DleSolution<Scalar> dle_solve(DiscretePlant<Scalar> const &plant, int d, double p, Matrix<Scalar> const &K,
                              Matrix<Scalar> const &Q)
{
  if (d < 1) { throw DomainError("dle_solve: d must be >= 1"); }
  check_probability(p, "dle_solve");
  if (Q.rows() != plant.n() || Q.cols() != plant.n()) { throw DimensionError("dle_solve: Q must be n x n"); }

  Matrix<Scalar> const T = lifted_operator(closed_loop_factors(plant, d, p, K));
  DleSolution<Scalar>  out;
  out.spectral_radius = spectral_radius(T);
  out.P = Matrix<Scalar>::Zero(plant.n(), plant.n());
  if (out.spectral_radius >= Scalar(1 - 1e-10)) {
    out.marginal = out.spectral_radius < Scalar(1 + 1e-10);
    return out;
  }
  out.P = detail::solve_lifted<Scalar>(T, Q);
  out.feasible = out.P.allFinite() && detail::is_positive_definite<Scalar>(out.P);
  return out;
}

// 1 / (e^{2Ah(d+1)} - e^{2Ahd} + 1)
inline double pmax_scalar_closed_form(double A, double h, int d)
{
  if (!(A >= 0)) { throw DomainError("pmax_scalar_closed_form: A must be >= 0"); }
  if (!(h > 0)) { throw DomainError("pmax_scalar_closed_form: h must be positive"); }
  if (d < 1) { throw DomainError("pmax_scalar_closed_form: d must be >= 1"); }
  return 1.0 / (std::exp(2 * A * h * d) * std::expm1(2 * A * h) + 1.0);
}

/*
 * Maximum dropout rate by bisection on [0, 1] with DARE solvability as the predicate.
 * Throws NotStabilizableError when the plant is not stabilizable even at p = 0.
 */
template <typename Scalar>
StabilityMargin pmax_bisection(DiscretePlant<Scalar> const &plant, int d, DareWeights<Scalar> const &weights,
                               double tol_p = 1e-4, DareOptions const &opts = {})
{
  if (!(tol_p > 0)) { throw DomainError("pmax_bisection: tol_p must be positive"); }
  if (d < 1) { throw DomainError("pmax_bisection: d must be >= 1"); }
  StabilityMargin out;
  out.advisory = !check_assumptions(plant).h1_to_h3();

  auto const feasible = [&](double p) { return is_stabilizable(dare_solve(plant, d, p, weights, opts)); };
  if (!feasible(0.0)) { throw NotStabilizableError("pmax_bisection: plant is not stabilizable without dropouts"); }
  if (feasible(1.0)) {
    out.p_max = 1.0;
    out.bracket_width = 0.0;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol_p) {
    double const mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  out.p_max = 0.5 * (lo + hi);
  out.bracket_width = hi - lo;
  return out;
}

/*
 * Sampling check of a fixed gain over p in {0, step, 2 step, ...} and p_hat itself.
 * This is a necessary-style test on a finite grid, not a certificate for the whole interval.
 */
template <typename Scalar>
RobustGridReport robust_grid_check(DiscretePlant<Scalar> const &plant, int d, Matrix<Scalar> const &K, double p_hat,
                                   double grid_step, Matrix<Scalar> const &Q)
{
  if (!(p_hat >= 0 && p_hat < 1)) { throw DomainError("robust_grid_check: p_hat must lie in [0, 1)"); }
  if (!(grid_step > 0)) { throw DomainError("robust_grid_check: grid_step must be positive"); }
  RobustGridReport r;
  r.p_hat = p_hat;
  for (long i = 0;; ++i) {
    double const p = static_cast<double>(i) * grid_step;
    if (p >= p_hat - 1e-12 * grid_step) { break; }
    r.grid.push_back(p);
  }
  r.grid.push_back(p_hat);

  r.all_feasible = true;
  r.worst_radius = -1;
  for (double p : r.grid) {
    auto const s = dle_solve(plant, d, p, K, Q);
    r.spectral_radii.push_back(static_cast<double>(s.spectral_radius));
    r.all_feasible = r.all_feasible && s.feasible;
    if (static_cast<double>(s.spectral_radius) > r.worst_radius) {
      r.worst_radius = static_cast<double>(s.spectral_radius);
      r.worst_p = p;
    }
  }
  return r;
}

} // namespace sdnstab
