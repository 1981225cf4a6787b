#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <bernfit/errors.hpp>
#include <bernfit/sofr.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bernfit;

namespace {

// Y_i = alpha + int X_i(t) beta(t) dt with the integral from the oracle
// trapezoid rule, plus optional noise.
FunctionalDataset with_response(FunctionalDataset d, double alpha, const Eigen::VectorXd& beta, double noise,
                                unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, noise > 0 ? noise : 1.0);
  const auto& t = d.x_grid.points;
  for (auto& s : d.subjects) {
    std::vector<double> f(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) f[j] = s.x[j] * oracle::bernstein_sum(beta, t[j]);
    s.y = alpha + oracle::trapezoid(t, f) + (noise > 0 ? nd(gen) : 0.0);
  }
  return d;
}

}  // namespace

TEST(Sofr, ExactRecovery) {
  const Eigen::VectorXd beta = (Eigen::VectorXd(5) << -1, 0, 0.5, 2, 2.2).finished();
  const auto d = with_response(fixture::random_curves(40, 60, 1), 0.7, beta, 0.0, 0);
  const SofrFit u = fit_sofr(d, BasisSpec{4}, std::nullopt);
  EXPECT_NEAR(u.alpha, 0.7, 1e-7);
  EXPECT_TRUE(u.beta_coefs.isApprox(beta, 1e-6));
  EXPECT_LE(u.rss, 1e-12);
  // beta is non-decreasing in its coefficients, so the constraint is inactive.
  const SofrFit c = fit_sofr(d, BasisSpec{4}, ShapeSpec::of(ShapeKind::kNonDecreasing));
  EXPECT_TRUE(c.beta_coefs.isApprox(beta, 1e-6));
  EXPECT_TRUE(c.certificate.feasible);
}

TEST(Sofr, ConstantResponseGivesZeroBeta) {
  auto d = fixture::random_curves(30, 40, 2);
  for (auto& s : d.subjects) s.y = 3.0;
  for (auto shape : {ShapeKind::kNonNegative, ShapeKind::kNonDecreasing, ShapeKind::kConvex}) {
    const SofrFit f = fit_sofr(d, BasisSpec{4}, ShapeSpec::of(shape));
    EXPECT_NEAR(f.alpha, 3.0, 1e-8);
    EXPECT_LE(f.beta_coefs.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Sofr, AffineEquivariance) {
  const Eigen::VectorXd beta = (Eigen::VectorXd(4) << 0, 1, 1, 3).finished();
  const auto d = with_response(fixture::random_curves(50, 40, 3), 1.0, beta, 0.3, 9);
  auto shifted = d;
  for (auto& s : shifted.subjects) s.y = *s.y + 5.0;
  const auto shape = ShapeSpec::of(ShapeKind::kNonDecreasing);
  const SofrFit a = fit_sofr(d, BasisSpec{3}, shape);
  const SofrFit b = fit_sofr(shifted, BasisSpec{3}, shape);
  EXPECT_NEAR(b.alpha, a.alpha + 5.0, 1e-8);
  EXPECT_TRUE(b.beta_coefs.isApprox(a.beta_coefs, 1e-8));
  EXPECT_NEAR(a.rss, b.rss, 1e-8);
}

TEST(Sofr, ShapeFeasibleAndRssOrdered) {
  const Eigen::VectorXd beta = (Eigen::VectorXd(6) << 2, 1, 0, 0.5, 1.5, 0.1).finished();
  const auto d = with_response(fixture::random_curves(60, 40, 4), 0.0, beta, 0.5, 4);
  const SofrFit u = fit_sofr(d, BasisSpec{5}, std::nullopt);
  for (auto shape : {ShapeKind::kNonNegative, ShapeKind::kNonIncreasing, ShapeKind::kConcave, ShapeKind::kConvex}) {
    const SofrFit c = fit_sofr(d, BasisSpec{5}, ShapeSpec::of(shape));
    EXPECT_GE(c.rss, u.rss - 1e-10);
    EXPECT_TRUE(c.certificate.feasible);
    EXPECT_TRUE(check_shape(c.beta_coefs, ShapeSpec::of(shape), 1e-8).feasible);
  }
}

TEST(Sofr, PredictReproducesFitted) {
  const Eigen::VectorXd beta = (Eigen::VectorXd(3) << 1, 0, 1).finished();
  const auto d = with_response(fixture::random_curves(25, 30, 5), -1.0, beta, 0.1, 5);
  const SofrFit f = fit_sofr(d, BasisSpec{2}, ShapeSpec::of(ShapeKind::kConvex));
  const Eigen::VectorXd p = predict_sofr(f, d);
  EXPECT_TRUE(p.isApprox(f.fitted, 1e-12));
  for (std::size_t i = 0; i < d.n(); ++i) EXPECT_NEAR(*d.subjects[i].y - f.fitted[static_cast<Eigen::Index>(i)], f.residuals[static_cast<Eigen::Index>(i)], 1e-12);
  EXPECT_NEAR(f.beta(0.5), oracle::bernstein_sum(f.beta_coefs, 0.5), 1e-12);
}

TEST(Sofr, ScalarConfounders) {
  auto d = fixture::random_curves(50, 40, 6);
  d.z_names = {"age"};
  const Eigen::VectorXd beta = (Eigen::VectorXd(3) << 0, 1, 2).finished();
  d = with_response(d, 0.5, beta, 0.0, 0);
  std::mt19937_64 gen(6);
  for (auto& s : d.subjects) {
    s.z = {std::uniform_real_distribution<double>()(gen)};
    s.y = *s.y - 2.0 * s.z[0];
  }
  const SofrFit f = fit_sofr(d, BasisSpec{2}, ShapeSpec::of(ShapeKind::kNonDecreasing));
  ASSERT_EQ(f.gamma.size(), 1);
  EXPECT_NEAR(f.gamma[0], -2.0, 1e-7);
  EXPECT_TRUE(f.beta_coefs.isApprox(beta, 1e-6));
}

TEST(Sofr, Errors) {
  auto d = fixture::random_curves(10, 20, 7);
  for (auto& s : d.subjects) s.y = 1.0;
  EXPECT_THROW(fit_sofr(d, BasisSpec{1}, ShapeSpec::of(ShapeKind::kConvex)), ConfigError);
}
