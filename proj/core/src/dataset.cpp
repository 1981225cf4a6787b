#include "bernfit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

std::vector<std::size_t> all_indices(std::size_t m) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

void check_samples(const std::string& id, const char* what, const std::vector<std::size_t>& idx,
                   const std::vector<double>& values, std::size_t grid_size) {
  if (values.empty()) return;
  if (idx.empty()) {
    if (values.size() != grid_size) {
      throw DataError("subject " + id + ": " + what + " has " + std::to_string(values.size()) +
                      " values for a grid of " + std::to_string(grid_size));
    }
  } else {
    if (idx.size() != values.size()) {
      throw DataError("subject " + id + ": " + what + " index and value counts differ");
    }
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= grid_size || (r > 0 && idx[r] <= idx[r - 1])) {
        throw DataError("subject " + id + ": invalid " + what + " grid index " +
                        std::to_string(idx[r]));
      }
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("subject " + id + ": non-finite " + what + " value");
  }
}

}  // namespace

std::vector<std::size_t> FunctionalDataset::x_indices(std::size_t i) const {
  const auto& s = subjects.at(i);
  return s.x_idx.empty() ? all_indices(s.x.empty() ? 0 : x_grid.size()) : s.x_idx;
}

std::vector<std::size_t> FunctionalDataset::y_indices(std::size_t i) const {
  const auto& s = subjects.at(i);
  return s.y_idx.empty() ? all_indices(s.y_curve.empty() ? 0 : y_grid.size()) : s.y_idx;
}

Curve FunctionalDataset::x_curve(std::size_t i) const {
  Curve c;
  for (std::size_t j : x_indices(i)) c.t.push_back(x_grid.points[j]);
  c.x = subjects.at(i).x;
  return c;
}

std::vector<double> FunctionalDataset::y_times(std::size_t i) const {
  std::vector<double> t;
  for (std::size_t j : y_indices(i)) t.push_back(y_grid.points[j]);
  return t;
}

bool FunctionalDataset::sparse_x() const {
  return std::any_of(subjects.begin(), subjects.end(), [&](const Subject& s) {
    return !s.x_idx.empty() && s.x_idx.size() != x_grid.size();
  });
}

bool FunctionalDataset::sparse_y() const {
  return std::any_of(subjects.begin(), subjects.end(), [&](const Subject& s) {
    return !s.y_idx.empty() && s.y_idx.size() != y_grid.size();
  });
}

bool FunctionalDataset::has_scalar_response() const {
  return !subjects.empty() &&
         std::all_of(subjects.begin(), subjects.end(), [](const Subject& s) { return s.y.has_value(); });
}

bool FunctionalDataset::has_functional_response() const {
  return !subjects.empty() && std::all_of(subjects.begin(), subjects.end(),
                                          [](const Subject& s) { return s.has_y_curve(); });
}

void FunctionalDataset::sync_grid_patterns() {
  if (sparse_x()) {
    std::vector<std::vector<std::size_t>> pat;
    for (std::size_t i = 0; i < n(); ++i) pat.push_back(x_indices(i));
    x_grid.per_subject = std::move(pat);
  } else {
    x_grid.per_subject.reset();
  }
  if (sparse_y()) {
    std::vector<std::vector<std::size_t>> pat;
    for (std::size_t i = 0; i < n(); ++i) pat.push_back(y_indices(i));
    y_grid.per_subject = std::move(pat);
  } else {
    y_grid.per_subject.reset();
  }
}

FunctionalDataset FunctionalDataset::subset(const std::vector<std::size_t>& rows) const {
  FunctionalDataset out;
  out.x_grid.points = x_grid.points;
  out.y_grid.points = y_grid.points;
  out.domain = domain;
  out.z_names = z_names;
  out.rescale = rescale;
  out.subjects.reserve(rows.size());
  for (std::size_t r : rows) out.subjects.push_back(subjects.at(r));
  out.sync_grid_patterns();
  return out;
}

void FunctionalDataset::validate() const {
  domain.validate();
  if (subjects.empty()) throw DataError("dataset has no subjects");
  if (!x_grid.points.empty()) x_grid.validate(domain);
  if (!y_grid.points.empty()) y_grid.validate(domain);
  for (const auto& s : subjects) {
    if (s.z.size() != z_names.size()) {
      throw DataError("subject " + s.id + " has " + std::to_string(s.z.size()) +
                      " scalar covariates, expected " + std::to_string(z_names.size()));
    }
    for (double v : s.z) {
      if (!std::isfinite(v)) throw DataError("subject " + s.id + ": non-finite scalar covariate");
    }
    if (s.y && !std::isfinite(*s.y)) throw DataError("subject " + s.id + ": non-finite response");
    if (!s.y && s.y_curve.empty()) throw DataError("subject " + s.id + " has no response");
    check_samples(s.id, "covariate curve", s.x_idx, s.x, x_grid.size());
    check_samples(s.id, "response curve", s.y_idx, s.y_curve, y_grid.size());
  }
}

void rescale_covariates(FunctionalDataset& data) {
  data.rescale.clear();
  for (std::size_t j = 0; j < data.covariate_count(); ++j) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : data.subjects) {
      lo = std::min(lo, s.z[j]);
      hi = std::max(hi, s.z[j]);
    }
    RescaleRecord rec{data.z_names[j], lo, hi > lo ? hi : lo + 1.0};
    for (auto& s : data.subjects) s.z[j] = hi > lo ? rec.apply(s.z[j]) : 0.0;
    data.rescale.push_back(rec);
  }
}

}  // namespace bernfit
