#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/dataset.hpp"

namespace bernfit {

// Truncated eigen-expansion of a residual covariance kernel plus a white-noise
// nugget. On the grid, Sigma = sum_k lambda_k phi_k phi_k^T + noise_floor I.
struct CovarianceModel {
  std::vector<double> grid;
  Eigen::VectorXd eigenvalues;     // non-increasing, positive
  Eigen::MatrixXd eigenfunctions;  // m x K, orthonormal under trapezoid weights
  double nugget = 0.0;             // estimated sigma^2
  double noise_floor = 1.0;        // max(nugget, 1e-8 trace / m); 1 for the identity model
  double pve = 0.95;
  bool identity = false;

  std::size_t size() const { return grid.size(); }
  std::size_t components() const { return static_cast<std::size_t>(eigenvalues.size()); }

  static CovarianceModel make_identity(std::vector<double> grid);

  // Sigma on the grid, or on the sub-grid `idx`.
  Eigen::MatrixXd sigma() const;
  Eigen::MatrixXd sigma(const std::vector<std::size_t>& idx) const;
  // Sigma^{-1/2} via symmetric eigendecomposition.
  Eigen::MatrixXd inverse_sqrt() const;
  Eigen::MatrixXd inverse_sqrt(const std::vector<std::size_t>& idx) const;
};

struct CovarianceOptions {
  double pve = 0.95;
  // Tensor Bernstein order of the covariance surface.
  int smoothing_order = 4;
  // Dense rows: smooth the off-diagonal sample covariance too. When false the
  // raw sample covariance is used with the diagonal replaced by its
  // neighbours.
  bool smooth_dense = true;
};

/// FPCA of residual curves (rows of `residuals`, NaN where unobserved).
/// Off-diagonal covariance (sample covariance for dense rows, pooled pairwise
/// products when rows have NaNs) smoothed by a symmetric tensor Bernstein
/// surface; nugget is the mean excess of the raw diagonal over the surface.
/// The eigendecomposition keeps the smallest K reaching `pve`. With
/// `smooth_dense` off, dense rows use the raw covariance with its diagonal
/// replaced by the average of the two neighbouring off-diagonals.
CovarianceModel estimate_covariance(const Eigen::MatrixXd& residuals,
                                    const std::vector<double>& grid,
                                    const CovarianceOptions& options = {},
                                    std::vector<std::string>* warnings = nullptr);

/// Sigma^{-1/2} * block (rows are grid points).
Eigen::MatrixXd whiten(const Eigen::MatrixXd& block, const CovarianceModel& cov);
Eigen::VectorXd whiten(const Eigen::VectorXd& values, const CovarianceModel& cov);

/// Completes sparsely observed covariate curves on the pooled grid with
/// conditional-expectation FPCA scores. Dense inputs are returned unchanged.
/// Subjects with fewer than two covariate samples are dropped with a warning.
FunctionalDataset reconstruct_sparse(const FunctionalDataset& data,
                                     const CovarianceOptions& options = {},
                                     std::vector<std::string>* warnings = nullptr);

}  // namespace bernfit
