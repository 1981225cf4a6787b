#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <bernfit/basis.hpp>
#include <bernfit/errors.hpp>
#include <bernfit/qfosr.hpp>

#include "oracles.hpp"

using namespace bernfit;

namespace {

// Subjects with quantile curves q(p, x) on an m-point p-grid; x has J entries.
FunctionalDataset quantile_data(int n, int m, int j, const std::function<double(double, const std::vector<double>&, int)>& q,
                                unsigned seed) {
  FunctionalDataset d;
  d.y_grid = Grid::equispaced(static_cast<std::size_t>(m));
  d.x_grid = d.y_grid;
  for (int k = 0; k < j; ++k) d.z_names.push_back("x" + std::to_string(k + 1));
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < n; ++i) {
    Subject s;
    s.id = "q" + std::to_string(i);
    for (int k = 0; k < j; ++k) s.z.push_back(u(gen));
    for (double p : d.y_grid.points) s.y_curve.push_back(q(p, s.z, i));
    d.subjects.push_back(std::move(s));
  }
  return d;
}

}  // namespace

TEST(Qfosr, RecoversLinearQuantileModel) {
  auto d = quantile_data(30, 25, 1, [](double p, const std::vector<double>& x, int) { return p + x[0] * (-0.2 * p); }, 1);
  // Pin the covariate range to [0,1] so the rescale is the identity.
  d.subjects[0].z[0] = 0.0;
  d.subjects[1].z[0] = 1.0;
  for (auto& s : d.subjects) {
    for (std::size_t k = 0; k < s.y_curve.size(); ++k) s.y_curve[k] = d.y_grid.points[k] * (1.0 - 0.2 * s.z[0]);
  }
  QfosrOptions o;
  o.order = 5;
  const QfosrFit f = fit_qfosr(d, o);
  for (double p : oracle::linspace(0, 1, 11)) {
    EXPECT_NEAR(f.fit.eval(0, p), p, 1e-6);
    EXPECT_NEAR(f.fit.eval(1, p), -0.2 * p, 1e-6);
    EXPECT_NEAR(f.predict({0.5}, p), 0.9 * p, 1e-6);
  }
  EXPECT_TRUE(f.certificate.feasible);
}

TEST(Qfosr, IdenticalCurvesGiveFlatCovariateEffect) {
  const auto d = quantile_data(20, 20, 2, [](double p, const std::vector<double>&, int) { return std::pow(p, 3) + 2 * p; }, 2);
  QfosrOptions o;
  o.order = 4;
  const QfosrFit f = fit_qfosr(d, o);
  EXPECT_LE(f.fit.blocks.at(1).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(f.fit.blocks.at(2).cwiseAbs().maxCoeff(), 1e-6);
  for (double p : oracle::linspace(0, 1, 11)) EXPECT_NEAR(f.fit.eval(0, p), std::pow(p, 3) + 2 * p, 1e-6);
}

TEST(Qfosr, PredictionsMonotoneEverywhere) {
  // Noisy curves whose covariate effect pushes towards crossing.
  std::mt19937_64 noise(3);
  std::normal_distribution<double> nd(0.0, 0.3);
  auto d = quantile_data(40, 30, 2, [&](double p, const std::vector<double>& x, int) {
    return 0.2 * p + x[0] * (1.5 - 3.0 * p) + x[1] * std::sin(6 * p) + nd(noise) * 0.0;
  }, 3);
  // Sort each noisy curve so the input is valid quantile data.
  for (auto& s : d.subjects) {
    for (double& v : s.y_curve) v += nd(noise);
    std::sort(s.y_curve.begin(), s.y_curve.end());
  }
  const QfosrFit f = fit_qfosr(d, QfosrOptions{});
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u;
  const auto ps = oracle::linspace(0, 1, 500);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x{u(gen), u(gen)};
    double prev = f.predict_scaled(x, ps[0]);
    for (std::size_t k = 1; k < ps.size(); ++k) {
      const double v = f.predict_scaled(x, ps[k]);
      EXPECT_GE(v, prev - 1e-9);
      prev = v;
    }
    // Coefficients of mu(p) are non-decreasing, the sufficient condition.
    const Eigen::VectorXd mu = f.mu_coefs(x);
    for (Eigen::Index k = 1; k < mu.size(); ++k) EXPECT_GE(mu[k] - mu[k - 1], -1e-9);
  }
}

TEST(Qfosr, VertexDifferencesNonNegative) {
  std::mt19937_64 noise(5);
  std::normal_distribution<double> nd(0.0, 0.5);
  auto d = quantile_data(30, 20, 2, [](double p, const std::vector<double>& x, int) { return p + x[0] - 2 * x[1] * p; }, 5);
  for (auto& s : d.subjects) {
    for (double& v : s.y_curve) v += nd(noise);
    std::sort(s.y_curve.begin(), s.y_curve.end());
  }
  QfosrOptions o;
  o.order = 6;
  const QfosrFit f = fit_qfosr(d, o);
  for (int mask = 0; mask < 4; ++mask) {
    const std::vector<double> v{static_cast<double>(mask & 1), static_cast<double>((mask >> 1) & 1)};
    const Eigen::VectorXd mu = f.mu_coefs(v);
    for (Eigen::Index k = 1; k < mu.size(); ++k) EXPECT_GE(mu[k] - mu[k - 1], -1e-8);
  }
}

TEST(Qfosr, RawCovariatesAreRescaled) {
  auto d = quantile_data(20, 15, 1, [](double p, const std::vector<double>&, int) { return p; }, 6);
  for (std::size_t i = 0; i < d.n(); ++i) d.subjects[i].z[0] = 10.0 + static_cast<double>(i);
  for (auto& s : d.subjects) {
    for (std::size_t k = 0; k < s.y_curve.size(); ++k) s.y_curve[k] = d.y_grid.points[k] * (1.0 + 0.01 * (s.z[0] - 10.0));
  }
  const QfosrFit f = fit_qfosr(d, QfosrOptions{});
  ASSERT_EQ(f.rescale.size(), 1u);
  EXPECT_EQ(f.rescale[0].min, 10.0);
  EXPECT_EQ(f.rescale[0].max, 29.0);
  EXPECT_NEAR(f.predict({29.0}, 0.5), f.predict_scaled({1.0}, 0.5), 1e-12);
  EXPECT_NEAR(f.predict({19.5}, 1.0), 1.095, 1e-6);
}

TEST(Qfosr, RejectsDecreasingQuantiles) {
  auto d = quantile_data(10, 10, 1, [](double p, const std::vector<double>&, int) { return p; }, 7);
  d.subjects[3].y_curve[5] = -1.0;
  EXPECT_THROW(fit_qfosr(d, QfosrOptions{}), DataError);
  auto none = quantile_data(10, 10, 0, [](double p, const std::vector<double>&, int) { return p; }, 7);
  EXPECT_THROW(fit_qfosr(none, QfosrOptions{}), DataError);
}
