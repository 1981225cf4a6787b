#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/basis.hpp"
#include "bernfit/dataset.hpp"
#include "bernfit/qp.hpp"
#include "bernfit/shape.hpp"

namespace bernfit {

// Scalar-on-function regression design [1 | Z | W] with W_ik the integral of
// X_i(t) b_k(t,N).
struct SofrDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  BasisSpec basis;
  Eigen::Index beta_offset = 1;

  Eigen::Index coef_count() const { return X.cols(); }
  Eigen::Index n() const { return X.rows(); }
};

struct SofrOptions {
  double tol = 1e-8;
  ConstraintOptions constraint_options{};
};

struct SofrFit {
  double alpha = 0.0;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta_coefs;
  // Stacked [alpha | gamma | beta].
  Eigen::VectorXd coefficients;
  BasisSpec basis;
  std::optional<ShapeSpec> shape;
  double rss = 0.0;
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
  QpSolution solution;
  ShapeReport certificate;
  std::vector<std::string> warnings;

  // beta(t) at t in the data domain.
  double beta(double t) const;
};

/// Builds the SOFR design. Sparse covariate curves are first completed with
/// reconstruct_sparse. The basis domain is taken from the data.
SofrDesign build_sofr_design(const FunctionalDataset& data, const BasisSpec& spec,
                             std::vector<std::string>* warnings = nullptr);

/// Constraint rows on the beta block, zero on intercept and confounders.
ConstraintSystem sofr_constraints(const SofrDesign& design, const std::optional<ShapeSpec>& shape,
                                  const ConstraintOptions& options = {});

SofrFit fit_sofr(const SofrDesign& design, const Eigen::VectorXd& y,
                 const ConstraintSystem& constraints, const std::optional<ShapeSpec>& shape,
                 double tol = 1e-8);

/// Shape-constrained least squares for Y_i = alpha + Z_i^T gamma + W_i^T beta + e_i.
/// shape = nullopt gives the unconstrained fit.
SofrFit fit_sofr(const FunctionalDataset& data, const BasisSpec& spec,
                 const std::optional<ShapeSpec>& shape, const SofrOptions& options = {});

/// alpha + Z gamma + W beta for new curves, with W built as in training.
Eigen::VectorXd predict_sofr(const SofrFit& fit, const FunctionalDataset& newdata);

}  // namespace bernfit
