#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <bernfit/dataset.hpp>

namespace fixture {

// Dense dataset on an equispaced grid of [0,1]; x(i, t) gives covariate
// values. The response is left empty.
inline bernfit::FunctionalDataset dense_curves(int n, int m, const std::function<double(int, double)>& x) {
  bernfit::FunctionalDataset d;
  d.x_grid = bernfit::Grid::equispaced(static_cast<std::size_t>(m));
  d.y_grid = d.x_grid;
  for (int i = 0; i < n; ++i) {
    bernfit::Subject s;
    s.id = "s" + std::to_string(i);
    for (double t : d.x_grid.points) s.x.push_back(x(i, t));
    d.subjects.push_back(std::move(s));
  }
  return d;
}

// Smooth random curves: random combinations of eight fixed functions, so
// designs up to order 6 stay full rank.
inline bernfit::FunctionalDataset random_curves(int n, int m, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(8));
  for (auto& row : a) {
    for (double& v : row) v = nd(gen);
  }
  return dense_curves(n, m, [a](int i, double t) {
    const auto& c = a[static_cast<std::size_t>(i)];
    return c[0] + c[1] * t + c[2] * std::sin(6.283185307179586 * t) + c[3] * std::cos(3.0 * t) +
           c[4] * t * t + c[5] * std::sin(5.0 * t) + c[6] * std::cos(7.0 * t) + c[7] * t * t * t;
  });
}

}  // namespace fixture
