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

struct CvResult {
  std::vector<int> candidate_orders;
  // Held-out squared error per evaluated candidate (same order as candidate_orders).
  std::vector<double> scores;
  // fold_scores(c, v): held-out RSS of candidate c on fold v.
  Eigen::MatrixXd fold_scores;
  int chosen = -1;
  int folds = 5;
  std::vector<int> fold_assignment;
  std::uint64_t seed = 0;
  std::vector<std::string> notices;
};

struct CvOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  double tol = 1e-8;
};

/// Default candidate grid: {2..10} for univariate coefficients, {2..6} for fofr,
/// {4..9} for qfosr.
std::vector<int> default_candidates(ModelKind kind);

/// Per-subject fold labels: a seeded shuffle, then position modulo V.
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

/// V-fold cross-validation over Bernstein orders. Subjects (whole curves) are
/// held out; functional models use unwhitened stacked least squares inside
/// folds. Candidates below the shape's minimum order are skipped with a
/// notice. The smallest order within 1e-12 * SST of the minimum wins.
/// For functional models every candidate sets both spec.order and
/// spec.intercept_order.
CvResult cv_select_order(const FunctionalDataset& data, const FunctionalSpec& spec,
                         const std::optional<ShapeSpec>& shape, std::vector<int> candidates,
                         const CvOptions& options = {});

}  // namespace bernfit
