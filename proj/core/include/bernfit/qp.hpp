#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/shape.hpp"

namespace bernfit {

// minimize ||Z beta - y||^2 + ridge ||beta||^2  subject to the constraint system.
struct QpProblem {
  Eigen::MatrixXd Z;
  Eigen::VectorXd y;
  ConstraintSystem constraints;
  double ridge = 0.0;
};

struct QpSolution {
  Eigen::VectorXd beta;
  // Rows held with equality at the solution, in the order the solver added them.
  std::vector<Eigen::Index> active_set;
  // One entry per constraint row; zero for inactive rows. Non-negative for
  // active inequality rows, sign-free for equality rows.
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  // ||grad f(beta) - A^T lambda||_inf with f the objective above.
  double kkt_residual = 0.0;
  // Total Tikhonov term used (problem ridge plus any automatic bump).
  double ridge = 0.0;
  bool ridge_bumped = false;
  int iterations = 0;
};

/// Same problem expressed through its Gram form:
/// f(beta) = beta^T (G + ridge I) beta - 2 h^T beta + yty, with G = Z^T Z, h = Z^T y.
struct QpGramProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd zty;
  double yty = 0.0;
  ConstraintSystem constraints;
  double ridge = 0.0;
};

/// Dual active-set solver. Starts from the unconstrained minimiser, adds the
/// most violated row (lowest index on ties) and drops rows whose multiplier
/// would turn negative, keeping dual feasibility throughout. If the Gram
/// matrix has min eigenvalue < 1e-10 * trace a ridge of 1e-8 * trace is added
/// and reported. Throws NumericalError on inconsistent equality rows or after
/// 50 (P + R) active-set changes.
QpSolution solve_clsq(const QpProblem& problem, double tol = 1e-8);
QpSolution solve_clsq(const QpGramProblem& problem, double tol = 1e-8);

/// argmin over the feasible set of (beta - z)^T omega (beta - z). A feasible z
/// is returned unchanged. omega must be symmetric positive definite: min
/// eigenvalue < -1e-10 * trace throws; smaller negative or tiny eigenvalues are
/// clipped to 1e-12 * trace and a warning is appended to `warnings`.
Eigen::VectorXd project_omega(const Eigen::VectorXd& z, const Eigen::MatrixXd& omega,
                              const ConstraintSystem& constraints,
                              std::vector<std::string>* warnings = nullptr);

/// Reusable projector for many points under one (omega, constraints) pair.
class OmegaProjector {
 public:
  OmegaProjector(const Eigen::MatrixXd& omega, ConstraintSystem constraints,
                 std::vector<std::string>* warnings = nullptr);
  Eigen::VectorXd operator()(const Eigen::VectorXd& z) const;
  const Eigen::MatrixXd& omega() const { return omega_; }

 private:
  Eigen::MatrixXd omega_;
  ConstraintSystem constraints_;
};

}  // namespace bernfit
