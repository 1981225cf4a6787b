#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bernfit/basis.hpp"

namespace bernfit {

// Min-max rescaling applied to a scalar covariate at ingestion:
// scaled = (raw - min) / (max - min).
struct RescaleRecord {
  std::string name;
  double min = 0.0;
  double max = 1.0;

  double apply(double raw) const { return (raw - min) / (max - min); }
  double invert(double scaled) const { return min + scaled * (max - min); }
};

// One subject. Functional samples are stored at grid indices; an empty index
// list together with non-empty values means "observed on the whole grid".
struct Subject {
  std::string id;
  std::optional<double> y;
  std::vector<double> z;
  std::vector<std::size_t> x_idx;
  std::vector<double> x;
  std::vector<std::size_t> y_idx;
  std::vector<double> y_curve;

  bool has_x() const { return !x.empty(); }
  bool has_y_curve() const { return !y_curve.empty(); }
};

struct FunctionalDataset {
  std::vector<Subject> subjects;
  // Grid of the functional covariate X (s-grid for function-on-function).
  Grid x_grid;
  // Grid of the functional response (t-grid, or the p-grid for quantile outcomes).
  Grid y_grid;
  Domain domain{};
  std::vector<std::string> z_names;
  std::vector<RescaleRecord> rescale;

  std::size_t n() const { return subjects.size(); }
  std::size_t covariate_count() const { return z_names.size(); }

  // Observed index lists (all indices for dense subjects).
  std::vector<std::size_t> x_indices(std::size_t i) const;
  std::vector<std::size_t> y_indices(std::size_t i) const;
  Curve x_curve(std::size_t i) const;
  // Observed response times in domain units.
  std::vector<double> y_times(std::size_t i) const;

  bool sparse_x() const;
  bool sparse_y() const;
  bool has_scalar_response() const;
  bool has_functional_response() const;

  // Per-subject observed index sets recorded on the grids (sparse designs).
  void sync_grid_patterns();

  FunctionalDataset subset(const std::vector<std::size_t>& rows) const;

  // Throws DataError for invalid indices, non-finite values, inconsistent
  // covariate counts or subjects without any response.
  void validate() const;
};

// Min-max rescales every scalar covariate to [0,1] in place, recording the
// transform in data.rescale. Constant covariates are left at 0.
void rescale_covariates(FunctionalDataset& data);

}  // namespace bernfit
