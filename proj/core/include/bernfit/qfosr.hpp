#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/dataset.hpp"
#include "bernfit/functional.hpp"
#include "bernfit/inference.hpp"
#include "bernfit/shape.hpp"

namespace bernfit {

struct QfosrOptions {
  // Common order of every coefficient block.
  int order = 7;
  // Optional single-block shape stacked on the quantile-monotone rows;
  // extra_term indexes the block (0 = intercept, j = predictor j).
  std::optional<ShapeSpec> extra_shape;
  int extra_term = 1;
  bool whiten = true;
  double pve = 0.95;
  double tol = 1e-8;
  // Largest tolerated decrease between neighbouring quantiles of a subject,
  // relative to the response range. Smaller decreases only warn.
  double monotone_tol = 1e-6;
  // Projection bands for every block when > 0.
  int ci_draws = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct QfosrFit {
  FunctionalFit fit;
  int predictors = 0;
  std::vector<RescaleRecord> rescale;
  ConstraintSystem constraints;
  ShapeReport certificate;
  std::vector<CiBand> bands;
  std::vector<std::string> warnings;

  /// Predicted quantile function value at p for covariates already on [0,1].
  double predict_scaled(const std::vector<double>& x, double p) const;
  /// Same for raw covariates, rescaled with the stored records.
  double predict(const std::vector<double>& raw, double p) const;
  /// Coefficients of mu(p) for covariates on [0,1].
  Eigen::VectorXd mu_coefs(const std::vector<double>& x) const;
};

/// Quantile function-on-scalar regression. Responses are subject quantile
/// functions over a common p-grid (the response grid); covariates are min-max
/// rescaled to [0,1] when the dataset carries no rescale records yet.
QfosrFit fit_qfosr(FunctionalDataset data, const QfosrOptions& options = {});

}  // namespace bernfit
