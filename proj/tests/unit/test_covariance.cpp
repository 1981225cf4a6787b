#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <bernfit/covariance.hpp>
#include <bernfit/errors.hpp>
#include <bernfit/simulation.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bernfit;

namespace {

constexpr double kPi = 3.14159265358979323846;

double trapezoid_inner(const std::vector<double>& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  std::vector<double> f(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) f[j] = a[static_cast<Eigen::Index>(j)] * b[static_cast<Eigen::Index>(j)];
  return oracle::trapezoid(t, f);
}

}  // namespace

TEST(Covariance, WhiteNoiseNugget) {
  const int n = 500;
  const int m = 40;
  const auto grid = oracle::linspace(0, 1, m);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd r(n, m);
  for (auto& v : r.reshaped()) v = nd(gen);
  const CovarianceModel c = estimate_covariance(r, grid);
  EXPECT_NEAR(c.nugget, 1.0, 0.2);
  EXPECT_LE(c.components(), 3u);
}

TEST(Covariance, RankOneKernel) {
  const int n = 300;
  const int m = 40;
  const auto grid = oracle::linspace(0, 1, m);
  Eigen::VectorXd phi(m);
  for (int j = 0; j < m; ++j) phi[j] = std::sqrt(2.0) * std::sin(kPi * grid[static_cast<std::size_t>(j)]);
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd r(n, m);
  for (int i = 0; i < n; ++i) {
    const double xi = 2.0 * nd(gen);
    for (int j = 0; j < m; ++j) r(i, j) = xi * phi[j] + 0.05 * nd(gen);
  }
  const CovarianceModel c = estimate_covariance(r, grid);
  ASSERT_EQ(c.components(), 1u);
  EXPECT_GE(std::abs(trapezoid_inner(grid, c.eigenfunctions.col(0), phi)), 0.99);
  EXPECT_NEAR(c.eigenvalues[0], 4.0, 1.0);
  EXPECT_NEAR(trapezoid_inner(grid, c.eigenfunctions.col(0), c.eigenfunctions.col(0)), 1.0, 1e-8);
}

TEST(Covariance, ZeroResidualsGiveIdentity) {
  const auto grid = oracle::linspace(0, 1, 10);
  std::vector<std::string> warnings;
  const CovarianceModel c = estimate_covariance(Eigen::MatrixXd::Zero(8, 10), grid, {}, &warnings);
  EXPECT_TRUE(c.identity);
  EXPECT_FALSE(warnings.empty());
  const Eigen::MatrixXd b = Eigen::MatrixXd::Random(10, 3);
  EXPECT_EQ(whiten(b, c), b);
}

TEST(Covariance, InputErrors) {
  const auto grid = oracle::linspace(0, 1, 10);
  EXPECT_THROW(estimate_covariance(Eigen::MatrixXd::Ones(2, 10), grid), DataError);
  EXPECT_THROW(estimate_covariance(Eigen::MatrixXd::Ones(5, 9), grid), ConfigError);
  CovarianceOptions bad;
  bad.pve = 0.0;
  EXPECT_THROW(estimate_covariance(Eigen::MatrixXd::Random(5, 10), grid, bad), ConfigError);
}

TEST(Covariance, SigmaSymmetricAndBoundedBelow) {
  const auto d = fixture::random_curves(60, 30, 3);
  Eigen::MatrixXd r(60, 30);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 30; ++j) r(i, j) = d.subjects[static_cast<std::size_t>(i)].x[static_cast<std::size_t>(j)];
  }
  r.rowwise() -= r.colwise().mean();
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (auto& v : r.reshaped()) v += nd(gen);
  const CovarianceModel c = estimate_covariance(r, d.x_grid.points);
  const Eigen::MatrixXd s = c.sigma();
  EXPECT_LE((s - s.transpose()).norm(), 1e-12 * s.norm());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().minCoeff();
  EXPECT_GE(min_eig, c.noise_floor * (1.0 - 1e-8));
  EXPECT_GE(c.noise_floor, c.nugget);

  const Eigen::MatrixXd w = c.inverse_sqrt();
  EXPECT_LE((w * s * w - Eigen::MatrixXd::Identity(30, 30)).norm(), 1e-8);

  std::vector<std::size_t> idx{0, 4, 9, 20};
  const Eigen::MatrixXd ws = c.inverse_sqrt(idx);
  EXPECT_LE((ws * c.sigma(idx) * ws - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-8);
}

TEST(Covariance, WhitenedResidualsNearIdentity) {
  // Residual curves of Scenario B: whitening with the fitted model should
  // leave roughly white residuals.
  const ScenarioSpec spec{ScenarioKind::kB, 2000, 0, 3, 1};
  const ScenarioData sd = generate_scenario(spec, 0);
  const auto& grid = sd.data.y_grid.points;
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd r(static_cast<Eigen::Index>(sd.data.n()), m);
  for (std::size_t i = 0; i < sd.data.n(); ++i) {
    const auto& s = sd.data.subjects[i];
    for (Eigen::Index j = 0; j < m; ++j) {
      const double t = grid[static_cast<std::size_t>(j)];
      r(static_cast<Eigen::Index>(i), j) = s.y_curve[static_cast<std::size_t>(j)] - sd.beta0(t) - sd.beta(t) * s.x[static_cast<std::size_t>(j)];
    }
  }
  const CovarianceModel c = estimate_covariance(r, grid);
  const Eigen::MatrixXd w = whiten(Eigen::MatrixXd(r.transpose()), c);
  const Eigen::MatrixXd emp = w * w.transpose() / static_cast<double>(r.rows());
  EXPECT_LE((emp - Eigen::MatrixXd::Identity(m, m)).norm() / std::sqrt(static_cast<double>(m)), 0.3);
  // Error kernel 0.25 cos(s)cos(t) + 0.5625 sin(s)sin(t): its two L2
  // eigenvalues from the 2x2 problem D^1/2 G D^1/2.
  std::vector<double> cc(grid.size()), ss(grid.size()), cs(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    cc[j] = std::cos(grid[j]) * std::cos(grid[j]);
    ss[j] = std::sin(grid[j]) * std::sin(grid[j]);
    cs[j] = std::cos(grid[j]) * std::sin(grid[j]);
  }
  Eigen::Matrix2d g;
  g << oracle::trapezoid(grid, cc), oracle::trapezoid(grid, cs), oracle::trapezoid(grid, cs), oracle::trapezoid(grid, ss);
  const Eigen::Vector2d dh(0.5, 0.75);
  const Eigen::Matrix2d k = dh.asDiagonal() * g * dh.asDiagonal();
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(k).eigenvalues();
  ASSERT_GE(c.components(), 1u);
  EXPECT_NEAR(c.eigenvalues[0], ev[1], 0.25 * ev[1]);
  EXPECT_NEAR(c.nugget, 0.25, 0.05);
}

TEST(Covariance, SparseReconstruction) {
  const int n = 200;
  const int m = 40;
  auto dense = fixture::dense_curves(n, m, [](int i, double t) {
    const double a = std::sin(0.7 * i);
    const double b = std::cos(1.3 * i);
    return a * std::sqrt(2.0) * std::sin(kPi * t) + b * std::sqrt(2.0) * std::cos(kPi * t);
  });
  FunctionalDataset sparse = dense;
  std::mt19937_64 gen(2);
  for (auto& s : sparse.subjects) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
      if (std::uniform_real_distribution<double>()(gen) < 0.25) idx.push_back(j);
    }
    if (idx.size() < 3) idx = {0, 13, 27, 39};
    std::vector<double> x;
    for (auto j : idx) x.push_back(s.x[j]);
    s.x_idx = idx;
    s.x = x;
    s.y = 0.0;
  }
  for (auto& s : dense.subjects) s.y = 0.0;
  const FunctionalDataset rec = reconstruct_sparse(sparse);
  ASSERT_EQ(rec.n(), dense.n());
  double num = 0.0;
  double da = 0.0;
  double db = 0.0;
  for (std::size_t i = 0; i < rec.n(); ++i) {
    const Curve c = rec.x_curve(i);
    ASSERT_EQ(c.x.size(), static_cast<std::size_t>(m));
    for (std::size_t j = 0; j < c.x.size(); ++j) {
      num += c.x[j] * dense.subjects[i].x[j];
      da += c.x[j] * c.x[j];
      db += dense.subjects[i].x[j] * dense.subjects[i].x[j];
    }
  }
  EXPECT_GE(num / std::sqrt(da * db), 0.95);
}
