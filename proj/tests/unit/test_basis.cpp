#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <bernfit/basis.hpp>
#include <bernfit/errors.hpp>

#include "oracles.hpp"

using namespace bernfit;

TEST(Basis, EndpointsAndMidpoint) {
  const Eigen::VectorXd b0 = eval_basis(0.0, 3);
  EXPECT_EQ(b0, (Eigen::VectorXd(4) << 1, 0, 0, 0).finished());
  const Eigen::VectorXd half = eval_basis(0.5, 2);
  EXPECT_DOUBLE_EQ(half[0], 0.25);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  EXPECT_DOUBLE_EQ(half[2], 0.25);
  for (int n = 1; n <= 30; ++n) {
    EXPECT_EQ(eval_basis(0.0, n)[0], 1.0);
    EXPECT_EQ(eval_basis(1.0, n)[n], 1.0);
  }
}

TEST(Basis, MatchesClosedForm) {
  const Eigen::VectorXd b = eval_basis(0.3, 7);
  EXPECT_NEAR(b[2], oracle::binomial(7, 2) * 0.09 * std::pow(0.7, 5), 1e-15);
  EXPECT_NEAR(b.sum(), 1.0, 1e-12);
  for (int n = 0; n <= 12; ++n) {
    for (double t : {0.0, 0.01, 0.2, 0.5, 0.77, 1.0}) {
      const Eigen::VectorXd v = eval_basis(t, n);
      for (int k = 0; k <= n; ++k) EXPECT_NEAR(v[k], oracle::bernstein(k, n, t), 1e-13);
    }
  }
}

TEST(Basis, PartitionOfUnityUpTo50) {
  for (int n : {1, 10, 30, 50}) {
    for (int j = 0; j < 1000; ++j) {
      const Eigen::VectorXd v = eval_basis(j / 999.0, n);
      EXPECT_GE(v.minCoeff(), 0.0);
      EXPECT_NEAR(v.sum(), 1.0, 1e-12);
    }
  }
}

TEST(Basis, DomainMappingAndErrors) {
  const BasisSpec spec{3, Domain{2.0, 4.0}};
  EXPECT_TRUE(eval_basis(3.0, spec).isApprox(eval_basis(0.5, 3)));
  EXPECT_THROW(eval_basis(1.5, 3), DomainError);
  EXPECT_THROW(eval_basis(-0.1, 3), DomainError);
  EXPECT_THROW(eval_basis(5.0, spec), DomainError);
  EXPECT_NO_THROW(eval_basis(1.0 + 1e-13, 3));
  EXPECT_THROW((Domain{1.0, 1.0}).validate(), ConfigError);
}

TEST(Basis, MatrixRows) {
  const std::vector<double> g{0.0, 1.0};
  EXPECT_EQ(eval_basis_matrix(g, BasisSpec{1}), Eigen::Matrix2d::Identity());
  const std::vector<double> g3{0.0, 0.5, 1.0};
  Eigen::MatrixXd expect(3, 3);
  expect << 1, 0, 0, 0.25, 0.5, 0.25, 0, 0, 1;
  EXPECT_TRUE(eval_basis_matrix(g3, BasisSpec{2}).isApprox(expect, 1e-15));
  const Eigen::MatrixXd m = eval_basis_matrix(Grid::equispaced(40), BasisSpec{5});
  for (Eigen::Index j = 0; j < m.rows(); ++j) EXPECT_NEAR(m.row(j).sum(), 1.0, 1e-12);
}

TEST(Basis, DerivativeCoefficients) {
  EXPECT_TRUE(derivative_coeffs(Eigen::VectorXd::Constant(5, 2.5)).isZero(0.0));
  EXPECT_EQ(derivative_coeffs((Eigen::VectorXd(2) << 0, 1).finished())[0], 1.0);
  const Eigen::VectorXd beta = (Eigen::VectorXd(3) << 0, 1, 4).finished();
  const Eigen::VectorXd d = derivative_coeffs(beta);
  EXPECT_EQ(d, (Eigen::VectorXd(2) << 2, 6).finished());
  const double h = 1e-6;
  const double fd = (oracle::bernstein_sum(beta, 0.5 + h) - oracle::bernstein_sum(beta, 0.5 - h)) / (2 * h);
  EXPECT_NEAR(eval_bernstein(d, 0.5), 4.0, 1e-12);
  EXPECT_NEAR(fd, 4.0, 1e-6);
  EXPECT_THROW(derivative_coeffs(Eigen::VectorXd::Ones(1)), ConfigError);
}

TEST(Basis, DerivativeAgainstFiniteDifferences) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int n = 1; n <= 10; ++n) {
    Eigen::VectorXd beta(n + 1);
    for (auto& v : beta) v = nd(gen);
    const Eigen::VectorXd d = derivative_coeffs(beta);
    for (int j = 1; j <= 20; ++j) {
      const double t = j / 21.0;
      const double h = 1e-6;
      const double fd = (oracle::bernstein_sum(beta, t + h) - oracle::bernstein_sum(beta, t - h)) / (2 * h);
      EXPECT_NEAR(eval_bernstein(d, t), fd, 1e-5);
    }
  }
}

TEST(Basis, TrapezoidWeights) {
  const std::vector<double> t{0.0, 0.1, 0.5, 1.0};
  const Eigen::VectorXd w = trapezoid_weights(t);
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  EXPECT_NEAR(w[0], 0.05, 1e-15);
  EXPECT_NEAR(w[1], 0.25, 1e-15);
  EXPECT_NEAR(w[3], 0.25, 1e-15);
}

TEST(Basis, SofrDesignIntegrals) {
  const Grid g = Grid::equispaced(50);
  const int n = 4;
  Curve one{g.points, std::vector<double>(50, 1.0)};
  const Eigen::VectorXd w1 = integrate_against_basis(one, BasisSpec{n});
  for (int k = 0; k <= n; ++k) EXPECT_NEAR(w1[k], 1.0 / (n + 1), 1e-3);

  Curve zero{g.points, std::vector<double>(50, 0.0)};
  EXPECT_TRUE(integrate_against_basis(zero, BasisSpec{n}).isZero(0.0));

  Curve lin{g.points, g.points};
  const Eigen::VectorXd wt = integrate_against_basis(lin, BasisSpec{2});
  for (int k = 0; k <= 2; ++k) {
    EXPECT_NEAR(oracle::moment_integral(k, 2, 1), (k + 1) / 12.0, 1e-14);
    EXPECT_NEAR(wt[k], (k + 1) / 12.0, 1e-3);
  }

  const std::vector<Curve> curves{one, lin};
  const Eigen::MatrixXd w = sofr_design(curves, BasisSpec{2});
  EXPECT_EQ(w.rows(), 2);
  EXPECT_TRUE(w.row(1).transpose().isApprox(wt));

  Curve single{{0.5}, {1.0}};
  EXPECT_THROW(integrate_against_basis(single, BasisSpec{2}), DataError);
}

TEST(Basis, SofrDesignQuadratureConvergesAtSecondOrder) {
  const int n = 3;
  double previous = 0.0;
  for (int m : {11, 21, 41, 81}) {
    const Grid g = Grid::equispaced(static_cast<std::size_t>(m));
    Curve c{g.points, {}};
    for (double t : g.points) c.x.push_back(t * t);
    const Eigen::VectorXd w = integrate_against_basis(c, BasisSpec{n});
    double err = 0.0;
    for (int k = 0; k <= n; ++k) err = std::max(err, std::abs(w[k] - oracle::moment_integral(k, n, 2)));
    if (previous > 0.0) EXPECT_LT(err, 0.3 * previous);
    previous = err;
  }
}

TEST(Basis, FlcmDesign) {
  const std::vector<double> g{0.0, 0.5, 1.0};
  const Eigen::MatrixXd b = eval_basis_matrix(g, BasisSpec{1});
  const std::vector<double> ones(3, 1.0);
  const std::vector<double> zeros(3, 0.0);
  EXPECT_EQ(flcm_design(ones, b), b);
  EXPECT_TRUE(flcm_design(zeros, b).isZero(0.0));
  Eigen::MatrixXd expect(3, 2);
  expect << 0, 0, 0.25, 0.25, 0, 1;
  EXPECT_TRUE(flcm_design(g, b).isApprox(expect));
  EXPECT_THROW(flcm_design(std::vector<double>{1.0}, b), ConfigError);
}

TEST(Basis, FofrDesign) {
  const Grid s = Grid::equispaced(201);
  const TensorBasisSpec tensor{1, 1, {}, {}};
  const std::vector<double> tj{0.5};
  Curve zero{s.points, std::vector<double>(201, 0.0)};
  EXPECT_TRUE(fofr_design(zero, tensor, tj).isZero(0.0));

  Curve one{s.points, std::vector<double>(201, 1.0)};
  const std::vector<double> tpts{0.0, 0.25, 1.0};
  const Eigen::MatrixXd d1 = fofr_design(one, tensor, tpts);
  for (int j = 0; j < 3; ++j) {
    for (int k1 = 0; k1 < 2; ++k1) {
      for (int k2 = 0; k2 < 2; ++k2) {
        EXPECT_NEAR(d1(j, k1 * 2 + k2), 0.5 * oracle::bernstein(k2, 1, tpts[static_cast<std::size_t>(j)]), 1e-12);
      }
    }
  }

  Curve lin{s.points, s.points};
  const Eigen::MatrixXd d = fofr_design(lin, tensor, tj);
  const Eigen::RowVectorXd expect = (Eigen::RowVectorXd(4) << 0.5 / 6, 0.5 / 6, 1.0 / 6, 1.0 / 6).finished();
  EXPECT_TRUE(d.isApprox(expect, 1e-4));
}

TEST(Basis, TensorSpecValidation) {
  EXPECT_THROW((TensorBasisSpec{2, 3, {}, {}}).validate(), ConfigError);
  EXPECT_THROW((TensorBasisSpec{0, 0, {}, {}}).validate(), ConfigError);
}

TEST(Basis, GridValidation) {
  Grid g;
  g.points = {0.0, 0.5, 0.4};
  EXPECT_THROW(g.validate(Domain{}), DataError);
  g.points = {0.0, 1.5};
  EXPECT_THROW(g.validate(Domain{}), DataError);
}

TEST(Basis, Eval2dMatchesProduct) {
  Eigen::VectorXd beta(9);
  for (int i = 0; i < 9; ++i) beta[i] = i * 0.3 - 1.0;
  const double s = 0.3;
  const double t = 0.8;
  double expect = 0.0;
  for (int k1 = 0; k1 <= 2; ++k1) {
    for (int k2 = 0; k2 <= 2; ++k2) expect += beta[k1 * 3 + k2] * oracle::bernstein(k1, 2, s) * oracle::bernstein(k2, 2, t);
  }
  EXPECT_NEAR(eval_bernstein_2d(beta, 2, s, t), expect, 1e-14);
}
