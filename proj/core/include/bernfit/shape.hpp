#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/basis.hpp"

namespace bernfit {

enum class ShapeKind {
  kFixedBoundaries,
  kNonNegative,
  kNonPositive,
  kNonDecreasing,
  kNonIncreasing,
  kConvex,
  kConcave,
  kBivariateMonotone,
  kPartialConvex,
  kQuantileMonotone,
  kCombination,
};

std::string to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

// A shape restriction on a coefficient function. Only the fields relevant to
// `kind` are read.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kNonNegative;
  // kFixedBoundaries: beta(0) = a0 and/or beta(1) = a1 (at least one set).
  std::optional<double> a0;
  std::optional<double> a1;
  // kBivariateMonotone / kPartialConvex: which coordinates are restricted.
  bool in_s = true;
  bool in_t = true;
  // kQuantileMonotone: number of scalar predictors.
  int predictors = 0;
  // kCombination: shapes whose rows are stacked.
  std::vector<ShapeSpec> parts;

  static ShapeSpec fixed_boundaries(std::optional<double> a0, std::optional<double> a1);
  static ShapeSpec of(ShapeKind kind);
  static ShapeSpec bivariate_monotone(bool in_s, bool in_t);
  static ShapeSpec partial_convex(bool in_s, bool in_t);
  static ShapeSpec quantile_monotone(int predictors);
  static ShapeSpec combination(std::vector<ShapeSpec> parts);

  bool is_bivariate() const;
  // Minimum Bernstein order for which the kind is meaningful.
  int min_order() const;
  void validate() const;
};

// Linear system A beta >= b with rows flagged in `equality` holding as
// A_i beta = b_i.
struct ConstraintSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<bool> equality;
  int coef_len = 0;

  static ConstraintSystem none(int coef_len);

  Eigen::Index rows() const { return A.rows(); }
  bool empty() const { return A.rows() == 0; }

  // Appends the rows of `other` (same coef_len).
  void append(const ConstraintSystem& other);
  // Removes exact duplicate rows (A row, b and equality flag all equal),
  // keeping first occurrences.
  void deduplicate();
  // Places this system's columns at [offset, offset+coef_len) inside a
  // total_len coefficient vector.
  ConstraintSystem embed(int offset, int total_len) const;
};

struct ConstraintOptions {
  // Adds the 2^(N+1) sign rows of sum_k |beta_k| <= bound. Off by default.
  std::optional<double> coefficient_bound;
};

/// Constraint rows for a univariate coefficient of order spec.order.
ConstraintSystem build_constraints(const ShapeSpec& shape, const BasisSpec& spec,
                                   const ConstraintOptions& options = {});

/// Constraint rows for a bivariate coefficient stored k1-major.
ConstraintSystem build_constraints(const ShapeSpec& shape, const TensorBasisSpec& spec,
                                   const ConstraintOptions& options = {});

/// Sufficient condition for a non-decreasing mu(p) = beta_0(p) + sum_j x_j beta_j(p)
/// for every x in [0,1]^J. Coefficients are stacked [beta_0 | beta_1 | ... | beta_J];
/// for each difference index k = 1..N and each subset S of {1..J} (bit j-1 of
/// the subset mask selects predictor j) the row reads
/// gamma_0k + sum_{j in S} gamma_jk >= 0 with gamma_jk = N (beta_{j,k} - beta_{j,k-1}).
ConstraintSystem build_quantile_monotone(int predictors, const BasisSpec& spec);

struct ShapeReport {
  bool feasible = true;
  double worst_violation = 0.0;
  std::vector<Eigen::Index> violated_rows;
};

/// Evaluates b_i - A_i beta on every row (|.| for equality rows).
ShapeReport check_constraints(const Eigen::VectorXd& beta, const ConstraintSystem& system,
                              double tol = 1e-8);

/// Infers the order from beta's length and checks it against `shape`.
ShapeReport check_shape(const Eigen::VectorXd& beta, const ShapeSpec& shape, double tol = 1e-8);

}  // namespace bernfit
