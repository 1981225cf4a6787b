#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bernfit/dataset.hpp"
#include "bernfit/functional.hpp"
#include "bernfit/shape.hpp"

namespace bernfit {

enum class ScenarioKind { kA, kB, kBSparse, kC, kS1 };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kA;
  int n = 50;
  // Grid size; 0 picks 50 for A and 40 otherwise.
  int m = 0;
  std::uint64_t seed = 1;
  int replications = 200;

  int grid_size() const;
  void validate() const;
};

using CoefFunction = std::function<double(double)>;

struct ScenarioData {
  FunctionalDataset data;
  // Coefficient function under study (beta for A, beta_1 otherwise).
  CoefFunction beta;
  // Intercept function (functional scenarios) and scalar intercept (A).
  CoefFunction beta0;
  double alpha = 0.0;
};

/// Orthonormal polynomials of degree 0..count-1 on the grid points: shifted
/// Legendre polynomials re-orthonormalised so that Phi^T Phi = I (unit
/// Euclidean norm over the grid). Columns are the polynomials.
Eigen::MatrixXd scenario_polynomials(const std::vector<double>& grid, int count);

ScenarioData generate_scenario(const ScenarioSpec& spec, int replication);

/// Model family, shape and default order of a scenario.
ModelKind scenario_model(ScenarioKind kind);
ShapeSpec scenario_shape(ScenarioKind kind);
int scenario_default_order(ScenarioKind kind);

/// Trapezoid integral of (beta_hat - beta_true)^2 over `points` equispaced
/// points of the domain.
double imse(const CoefFunction& beta_hat, const CoefFunction& beta_true, const Domain& domain = {},
            int points = 200);

struct BenchmarkOptions {
  // Fixed Bernstein order; 0 selects the order per replication by CV.
  int order = 0;
  std::vector<int> cv_candidates;
  int cv_folds = 5;
  double pve = 0.95;
  // Pre-whitening in the constrained fit and in the projection CI.
  bool whiten = true;
  // Projection-CI coverage protocol.
  bool coverage = false;
  int ci_draws = 300;
  double level = 0.95;
  // Bootstrap-test protocol; shape defaults to the scenario shape.
  bool test = false;
  std::optional<ShapeSpec> test_shape;
  int test_draws = 200;
  double alpha = 0.05;
  // Shape imposed for estimation; defaults to the scenario shape.
  std::optional<ShapeSpec> shape;
  // Unconstrained and constrained fits (skipped when only coverage/test are wanted).
  bool estimate = true;
  int threads = 1;
};

struct MetricTable {
  ScenarioSpec scenario;
  std::vector<double> imse_constrained;
  std::vector<double> imse_unconstrained;
  // Orders used by the constrained fit and by the unconstrained comparator
  // (they differ only when each is chosen by its own CV).
  std::vector<int> orders;
  std::vector<int> orders_unconstrained;
  std::vector<std::string> failures;
  // Per grid point coverage averaged over replications.
  std::vector<double> grid;
  std::vector<double> coverage;
  std::vector<double> widths;
  std::vector<int> rejections;

  double mean_constrained() const;
  double mean_unconstrained() const;
  double sd_constrained() const;
  double sd_unconstrained() const;
  double paired_p_value() const;
  double unpaired_p_value() const;
  double average_coverage() const;
  double average_width() const;
  double rejection_rate() const;
};

/// Monte Carlo loop over replications. The unconstrained comparator is the
/// same engine without a shape: least squares for SOFR, unwhitened stacked
/// least squares (Step 1) for functional scenarios. In CV mode the comparator
/// picks its own order by unconstrained CV on the same folds.
MetricTable run_benchmark(const ScenarioSpec& spec, const BenchmarkOptions& options = {});

}  // namespace bernfit
