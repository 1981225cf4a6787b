#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/basis.hpp"
#include "bernfit/covariance.hpp"
#include "bernfit/dataset.hpp"
#include "bernfit/qp.hpp"
#include "bernfit/shape.hpp"

namespace bernfit {

enum class ModelKind { kSofr, kFosr, kFlcm, kFofr, kQfosr };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Coefficient layout of a functional-response model:
//   fosr / qfosr : beta_0(t), beta_1(t) ... beta_J(t), one block per scalar covariate
//   flcm         : beta_0(t), beta_1(t) multiplying X_i(t)
//   fofr         : beta_0(t), beta_1(s,t) (tensor block, k1-major)
struct FunctionalSpec {
  ModelKind kind = ModelKind::kFlcm;
  int intercept_order = 5;
  int order = 5;
  // Block receiving a non-quantile shape (0 = intercept).
  int shape_term = 1;
};

// Per-subject stacked design Y_i = Z_i theta + e_i on the observed response
// points.
struct FunctionalDesign {
  FunctionalSpec spec;
  Domain domain{};
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> Z;
  std::vector<Eigen::VectorXd> Y;
  std::vector<std::vector<std::size_t>> obs;
  std::vector<Eigen::Index> block_offset;
  std::vector<Eigen::Index> block_size;
  std::vector<bool> block_bivariate;
  Eigen::Index coef_count = 0;

  std::size_t n() const { return Z.size(); }
  bool dense() const;
};

FunctionalDesign build_functional_design(const FunctionalDataset& data, const FunctionalSpec& spec,
                                         std::vector<std::string>* warnings = nullptr);

/// Shape rows embedded at spec.shape_term, or spanning every block for
/// QuantileMonotone.
ConstraintSystem functional_constraints(const FunctionalDesign& design,
                                        const std::optional<ShapeSpec>& shape,
                                        const ConstraintOptions& options = {});

// Precomputed (optionally whitened) normal equations for repeated solves
// with new responses, as in bootstrap loops.
class FunctionalSolver {
 public:
  FunctionalSolver(const FunctionalDesign& design, const CovarianceModel* covariance);

  QpSolution solve(const std::vector<Eigen::VectorXd>& responses,
                   const ConstraintSystem& constraints, double tol = 1e-8) const;
  // Whitened blocks Z_i^* (Z_i itself when not whitening).
  const std::vector<Eigen::MatrixXd>& whitened_design() const { return zw_; }
  std::vector<Eigen::VectorXd> whiten_responses(const std::vector<Eigen::VectorXd>& y) const;
  const Eigen::MatrixXd& gram() const { return gram_; }
  bool whitening() const { return !wh_.empty(); }

 private:
  const FunctionalDesign* design_;
  std::vector<Eigen::MatrixXd> wh_;
  std::vector<Eigen::MatrixXd> zw_;
  Eigen::MatrixXd gram_;
};

struct FunctionalFit {
  FunctionalSpec spec;
  Domain domain{};
  std::vector<Eigen::VectorXd> blocks;
  std::vector<bool> block_bivariate;
  Eigen::VectorXd coefficients;
  std::optional<ShapeSpec> shape;
  std::optional<CovarianceModel> covariance;
  double rss_raw = 0.0;
  double rss_whitened = 0.0;
  // n x m residuals on the response grid; NaN where unobserved.
  Eigen::MatrixXd residual_matrix;
  QpSolution solution;
  ShapeReport certificate;
  std::vector<std::string> warnings;

  const Eigen::VectorXd& beta0_coefs() const { return blocks.at(0); }
  const Eigen::VectorXd& beta1_coefs() const { return blocks.at(1); }
  double eval(std::size_t block, double t) const;
  double eval(std::size_t block, double s, double t) const;
};

struct FunctionalOptions {
  double pve = 0.95;
  bool whiten = true;
  double tol = 1e-8;
  CovarianceOptions covariance{};
  ConstraintOptions constraint_options{};
};

/// Fits theta on the given responses with the design's blocks; whitening uses
/// `covariance` when non-null and not the identity model.
FunctionalFit fit_functional(const FunctionalDesign& design,
                             const std::vector<Eigen::VectorXd>& responses,
                             const ConstraintSystem& constraints,
                             const std::optional<ShapeSpec>& shape,
                             const CovarianceModel* covariance, double tol = 1e-8);

/// Step 1: raw stacked least squares without constraints; fills the residual matrix.
FunctionalFit fit_unconstrained_ols(const FunctionalDataset& data, const FunctionalSpec& spec,
                                    const FunctionalOptions& options = {});

/// Step 1 + Step 2: OLS residuals, FPCA covariance, pre-whitened constrained
/// GLS over (beta_0, beta_1...). With options.whiten = false solves the raw
/// constrained least squares.
FunctionalFit fit_constrained_gls(const FunctionalDataset& data, const FunctionalSpec& spec,
                                  const std::optional<ShapeSpec>& shape,
                                  const FunctionalOptions& options = {});

/// Same as above with a caller-supplied covariance model.
FunctionalFit fit_constrained_gls(const FunctionalDataset& data, const FunctionalSpec& spec,
                                  const std::optional<ShapeSpec>& shape,
                                  const CovarianceModel& covariance,
                                  const FunctionalOptions& options = {});

/// Fitted response curves Z_i theta on each subject's observed points.
std::vector<Eigen::VectorXd> predict_functional(const FunctionalFit& fit,
                                                const FunctionalDataset& data);

}  // namespace bernfit
