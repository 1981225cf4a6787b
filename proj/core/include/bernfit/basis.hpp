#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bernfit {

// Closed interval [lower, upper] of real time. All basis computations run on
// [0,1]; Domain performs the affine map in both directions.
struct Domain {
  double lower = 0.0;
  double upper = 1.0;

  double length() const { return upper - lower; }
  double to_unit(double t) const { return (t - lower) / (upper - lower); }
  double from_unit(double u) const { return lower + u * (upper - lower); }
  void validate() const;
};

// Order-N univariate Bernstein basis: N+1 functions b_k(t,N) = C(N,k) t^k (1-t)^(N-k).
struct BasisSpec {
  int order = 4;
  Domain domain{};

  int size() const { return order + 1; }
};

// Tensor-product basis for bivariate coefficients beta(s,t). Both orders must
// match; coefficients are stored k1-major: index(k1,k2) = k1*(N+1) + k2.
struct TensorBasisSpec {
  int order_s = 3;
  int order_t = 3;
  Domain domain_s{};
  Domain domain_t{};

  int order() const { return order_s; }
  int size() const { return (order_s + 1) * (order_t + 1); }
  void validate() const;
};

// Evaluation points. per_subject, when present, lists the indices observed
// for each subject (sparse design).
struct Grid {
  std::vector<double> points;
  std::optional<std::vector<std::vector<std::size_t>>> per_subject;

  std::size_t size() const { return points.size(); }
  void validate(const Domain& domain) const;

  static Grid equispaced(std::size_t m, const Domain& domain = {});
};

// Samples of one curve: strictly increasing times and matching values.
struct Curve {
  std::vector<double> t;
  std::vector<double> x;
};

/// Bernstein basis values at u in [0,1], computed with the de Casteljau
/// recurrence b_k^{(j)} = (1-u) b_k^{(j-1)} + u b_{k-1}^{(j-1)}. Throws
/// DomainError when u lies outside [0,1] (a 1e-12 slack is clamped).
Eigen::VectorXd eval_basis(double u, int order);
Eigen::VectorXd eval_basis(double t, const BasisSpec& spec);

/// Row j holds eval_basis(points[j]) with points in the spec's domain.
Eigen::MatrixXd eval_basis_matrix(std::span<const double> points, const BasisSpec& spec);
Eigen::MatrixXd eval_basis_matrix(const Grid& grid, const BasisSpec& spec);

/// Coefficients of the derivative on [0,1] in the order N-1 basis:
/// entry k = N (beta_{k+1} - beta_k).
Eigen::VectorXd derivative_coeffs(const Eigen::VectorXd& beta);

/// Value of sum_k beta_k b_k(u, N) at u in [0,1].
double eval_bernstein(const Eigen::VectorXd& beta, double u);

/// Value of sum_{k1,k2} beta_{k1,k2} b_{k1}(s) b_{k2}(t) at unit coordinates.
double eval_bernstein_2d(const Eigen::VectorXd& beta, int order, double s, double t);

/// Composite trapezoid weights for strictly increasing nodes.
Eigen::VectorXd trapezoid_weights(std::span<const double> t);

/// Integral of x(t) b_k(t) over the observed grid (trapezoid), k = 0..N.
Eigen::VectorXd integrate_against_basis(const Curve& curve, const BasisSpec& spec);

/// SOFR design: row i = integrate_against_basis(curves[i]). Throws DataError
/// for a curve with fewer than two samples.
Eigen::MatrixXd sofr_design(std::span<const Curve> curves, const BasisSpec& spec);

/// FLCM design for one subject: row j = x[j] * basis_matrix.row(j).
Eigen::MatrixXd flcm_design(std::span<const double> x, const Eigen::MatrixXd& basis_matrix);

/// FOFR design for one subject: column (k1,k2) at row j equals
/// [integral of X(s) b_{k1}(s)] * b_{k2}(t_j), k1-major.
Eigen::MatrixXd fofr_design(const Curve& x_curve, const TensorBasisSpec& tensor,
                            std::span<const double> t_points);

}  // namespace bernfit
