#pragma once

// Reference computations used by the unit and acceptance tests. Everything
// here is written from the textbook formulas and deliberately avoids the
// library's own routines.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// C(N,k) t^k (1-t)^(N-k) straight from the definition.
inline double bernstein(int k, int n, double t) {
  return binomial(n, k) * std::pow(t, k) * std::pow(1.0 - t, n - k);
}

inline double bernstein_sum(const Eigen::VectorXd& beta, double t) {
  const int n = static_cast<int>(beta.size()) - 1;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) s += beta[k] * bernstein(k, n, t);
  return s;
}

// Integral over [0,1] of t^a b_k(t,N) = C(N,k) B(k+a+1, N-k+1).
inline double moment_integral(int k, int n, int a) {
  return binomial(n, k) * std::tgamma(k + a + 1.0) * std::tgamma(n - k + 1.0) / std::tgamma(n + a + 2.0);
}

// Golden constraint matrices written out row by row.
inline Eigen::MatrixXd first_difference(int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n + 1);
  for (int r = 0; r < n; ++r) {
    a(r, r) = -1.0;
    a(r, r + 1) = 1.0;
  }
  return a;
}

inline Eigen::MatrixXd second_difference(int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n - 1, n + 1);
  for (int r = 0; r < n - 1; ++r) {
    a(r, r) = 1.0;
    a(r, r + 1) = -2.0;
    a(r, r + 2) = 1.0;
  }
  return a;
}

// Bivariate monotone in s: row (k1,k2) has -1 at k1*(N+1)+k2 and +1 one block later.
inline Eigen::MatrixXd bivariate_first_s(int n) {
  const int k = n + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * k, k * k);
  for (int r = 0; r < n * k; ++r) {
    a(r, r) = -1.0;
    a(r, r + k) = 1.0;
  }
  return a;
}

// Block diagonal with N+1 copies of `block`.
inline Eigen::MatrixXd block_diagonal(const Eigen::MatrixXd& block, int copies) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(block.rows() * copies, block.cols() * copies);
  for (int c = 0; c < copies; ++c) a.block(c * block.rows(), c * block.cols(), block.rows(), block.cols()) = block;
  return a;
}

inline Eigen::MatrixXd bivariate_second_s(int n) {
  const int k = n + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero((n - 1) * k, k * k);
  for (int r = 0; r < (n - 1) * k; ++r) {
    a(r, r) = 1.0;
    a(r, r + k) = -2.0;
    a(r, r + 2 * k) = 1.0;
  }
  return a;
}

inline int rank(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > 1e-10 * s[0]) ++r;
  }
  return r;
}

struct EnumResult {
  Eigen::VectorXd beta;
  double objective = std::numeric_limits<double>::infinity();
};

// min ||Z b - y||^2 s.t. A b >= c (rows with eq[i] as equalities), solved by
// trying every subset of inequality rows as the active set and keeping the
// best feasible stationary point. Strict convexity makes that the optimum.
inline EnumResult enumerate_clsq(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::MatrixXd& a,
                                 const Eigen::VectorXd& c, const std::vector<bool>& eq) {
  const Eigen::Index p = z.cols();
  const Eigen::Index r = a.rows();
  const Eigen::MatrixXd g = z.transpose() * z;
  const Eigen::VectorXd h = z.transpose() * y;
  std::vector<Eigen::Index> free_rows;
  std::vector<Eigen::Index> fixed;
  for (Eigen::Index i = 0; i < r; ++i) (eq[static_cast<std::size_t>(i)] ? fixed : free_rows).push_back(i);
  EnumResult best;
  const std::uint64_t subsets = 1ULL << free_rows.size();
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    std::vector<Eigen::Index> act = fixed;
    for (std::size_t j = 0; j < free_rows.size(); ++j) {
      if (mask & (1ULL << j)) act.push_back(free_rows[j]);
    }
    const auto q = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(p + q, p + q);
    Eigen::VectorXd rhs(p + q);
    kkt.topLeftCorner(p, p) = 2.0 * g;
    rhs.head(p) = 2.0 * h;
    for (Eigen::Index j = 0; j < q; ++j) {
      kkt.block(0, p + j, p, 1) = -a.row(act[static_cast<std::size_t>(j)]).transpose();
      kkt.block(p + j, 0, 1, p) = a.row(act[static_cast<std::size_t>(j)]);
      rhs[p + j] = c[act[static_cast<std::size_t>(j)]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    const Eigen::VectorXd sol = lu.solve(rhs);
    if ((kkt * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) continue;
    const Eigen::VectorXd b = sol.head(p);
    if (((a * b - c).array() < -1e-9).any()) continue;
    bool eq_ok = true;
    for (Eigen::Index i : fixed) eq_ok = eq_ok && std::abs(a.row(i).dot(b) - c[i]) <= 1e-9;
    if (!eq_ok) continue;
    const double obj = (z * b - y).squaredNorm();
    if (obj < best.objective) {
      best.objective = obj;
      best.beta = b;
    }
  }
  return best;
}

// Composite trapezoid on arbitrary nodes.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) s += 0.5 * (t[j] - t[j - 1]) * (f[j] + f[j - 1]);
  return s;
}

inline std::vector<double> linspace(double lo, double hi, int m) {
  std::vector<double> v(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) v[static_cast<std::size_t>(j)] = lo + (hi - lo) * j / (m - 1);
  return v;
}

}  // namespace oracle
