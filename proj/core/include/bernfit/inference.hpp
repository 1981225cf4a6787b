#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/dataset.hpp"
#include "bernfit/functional.hpp"
#include "bernfit/shape.hpp"

namespace bernfit {

// Pointwise band for one coefficient function. For a bivariate block the
// band is laid out over grid_s x grid (s-major).
struct CiBand {
  std::vector<double> grid;
  std::vector<double> grid_s;
  Eigen::VectorXd estimate;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.95;
  int draws = 0;
  std::uint64_t seed = 0;
  int block = 1;
  std::vector<std::string> warnings;

  double average_width() const;
};

struct CiOptions {
  double level = 0.95;
  int draws = 500;
  std::uint64_t seed = 0;
  int threads = 1;
  // Coefficient block reported (functional models); 1 = beta_1.
  int block = 1;
  // Evaluation points; the data's response (or covariate) grid when empty.
  std::vector<double> points;
  double pve = 0.95;
  bool whiten = true;
};

/// Projection bands: draws around the unconstrained estimate with the
/// sandwich covariance, each draw projected onto the constraint set under
/// Omega, pointwise empirical quantiles. spec.kind selects the model; SOFR
/// uses spec.order only.
CiBand projection_ci(const FunctionalDataset& data, const FunctionalSpec& spec,
                     const std::optional<ShapeSpec>& shape, const CiOptions& options = {});

/// Sandwich pieces of the unconstrained estimator: omega = n^-1 sum W_i^T W_i
/// and delta = cov(theta_hat) = omega^-1 meat omega^-1 / n.
struct SandwichEstimate {
  Eigen::VectorXd theta;
  Eigen::MatrixXd omega;
  Eigen::MatrixXd delta;
  ConstraintSystem constraints;
  // Rows map theta to the reported coefficient values at the band points.
  Eigen::MatrixXd evaluation;
  std::vector<std::string> warnings;
};

SandwichEstimate sandwich_estimate(const FunctionalDataset& data, const FunctionalSpec& spec,
                                   const std::optional<ShapeSpec>& shape, const CiOptions& options,
                                   std::vector<double>* grid = nullptr,
                                   std::vector<double>* grid_s = nullptr);

/// Band from an existing sandwich estimate; draws are keyed by (seed, b).
CiBand projection_band(const SandwichEstimate& est, const CiOptions& options);

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  double rss_constrained = 0.0;
  double rss_unconstrained = 0.0;
  std::vector<double> bootstrap_stats;
  std::uint64_t seed = 0;
  int draws = 0;
  std::vector<std::string> warnings;

  bool rejects(double alpha = 0.05) const { return p_value < alpha; }
};

struct TestOptions {
  int draws = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  // Functional test only: fit null and full models on whitened data.
  bool whiten = false;
  double pve = 0.95;
  double tol = 1e-8;
};

/// T = (RSS_c - RSS_u) / RSS_u with residual-bootstrap null distribution
/// and p = #{T*_b >= T_obs} / B.
TestReport bootstrap_shape_test_scalar(const FunctionalDataset& data, const BasisSpec& spec,
                                       const ShapeSpec& shape_null, const TestOptions& options = {});

/// Functional-response variant resampling whole residual curves. Requires
/// every subject observed on the full response grid.
TestReport bootstrap_shape_test_functional(const FunctionalDataset& data, const FunctionalSpec& spec,
                                           const ShapeSpec& shape_null,
                                           const TestOptions& options = {});

}  // namespace bernfit
