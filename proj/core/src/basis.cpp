#include "bernfit/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {
constexpr double kUnitSlack = 1e-12;
}

void Domain::validate() const {
  if (!(std::isfinite(lower) && std::isfinite(upper)) || !(lower < upper)) {
    throw ConfigError("domain requires finite bounds with lower < upper, got [" +
                      std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
}

void TensorBasisSpec::validate() const {
  if (order_s != order_t) {
    throw ConfigError("tensor basis requires equal orders in s and t");
  }
  if (order_s < 1) throw ConfigError("tensor basis order must be >= 1");
  domain_s.validate();
  domain_t.validate();
}

void Grid::validate(const Domain& domain) const {
  if (points.empty()) throw DataError("grid is empty");
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double p = points[j];
    if (!std::isfinite(p) || p < domain.lower - 1e-12 || p > domain.upper + 1e-12) {
      throw DataError("grid point " + std::to_string(p) + " lies outside the domain");
    }
    if (j > 0 && !(points[j] > points[j - 1])) {
      throw DataError("grid points must be strictly increasing (index " + std::to_string(j) + ")");
    }
  }
  if (per_subject) {
    for (std::size_t i = 0; i < per_subject->size(); ++i) {
      const auto& idx = (*per_subject)[i];
      if (idx.empty()) throw DataError("subject " + std::to_string(i) + " has no observed points");
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= points.size() || (r > 0 && idx[r] <= idx[r - 1])) {
          throw DataError("invalid observed index set for subject " + std::to_string(i));
        }
      }
    }
  }
}

Grid Grid::equispaced(std::size_t m, const Domain& domain) {
  Grid g;
  g.points.resize(m);
  if (m == 1) {
    g.points[0] = domain.lower;
    return g;
  }
  for (std::size_t j = 0; j < m; ++j) {
    g.points[j] = domain.from_unit(static_cast<double>(j) / static_cast<double>(m - 1));
  }
  g.points.back() = domain.upper;
  return g;
}

Eigen::VectorXd eval_basis(double u, int order) {
  if (order < 0) throw ConfigError("Bernstein order must be non-negative");
  if (!(u >= -kUnitSlack && u <= 1.0 + kUnitSlack)) {
    throw DomainError("Bernstein argument " + std::to_string(u) + " outside [0,1]");
  }
  u = std::clamp(u, 0.0, 1.0);
  const double v = 1.0 - u;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(order + 1);
  b[0] = 1.0;
  for (int j = 1; j <= order; ++j) {
    // In-place update from the top so b[k-1] still holds the previous level.
    for (int k = j; k >= 1; --k) b[k] = v * b[k] + u * b[k - 1];
    b[0] *= v;
  }
  return b;
}

Eigen::VectorXd eval_basis(double t, const BasisSpec& spec) {
  return eval_basis(spec.domain.to_unit(t), spec.order);
}

Eigen::MatrixXd eval_basis_matrix(std::span<const double> points, const BasisSpec& spec) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), spec.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    out.row(static_cast<Eigen::Index>(j)) = eval_basis(points[j], spec).transpose();
  }
  return out;
}

Eigen::MatrixXd eval_basis_matrix(const Grid& grid, const BasisSpec& spec) {
  return eval_basis_matrix(std::span<const double>(grid.points), spec);
}

Eigen::VectorXd derivative_coeffs(const Eigen::VectorXd& beta) {
  if (beta.size() < 2) throw ConfigError("derivative_coeffs needs at least two coefficients");
  const Eigen::Index n = beta.size() - 1;
  return static_cast<double>(n) * (beta.tail(n) - beta.head(n));
}

double eval_bernstein(const Eigen::VectorXd& beta, double u) {
  return eval_basis(u, static_cast<int>(beta.size()) - 1).dot(beta);
}

double eval_bernstein_2d(const Eigen::VectorXd& beta, int order, double s, double t) {
  const Eigen::VectorXd bs = eval_basis(s, order);
  const Eigen::VectorXd bt = eval_basis(t, order);
  const Eigen::Index k = order + 1;
  if (beta.size() != k * k) throw ConfigError("bivariate coefficient length mismatch");
  double acc = 0.0;
  for (Eigen::Index k1 = 0; k1 < k; ++k1) acc += bs[k1] * beta.segment(k1 * k, k).dot(bt);
  return acc;
}

Eigen::VectorXd trapezoid_weights(std::span<const double> t) {
  const std::size_t m = t.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double h = 0.5 * (t[j + 1] - t[j]);
    w[static_cast<Eigen::Index>(j)] += h;
    w[static_cast<Eigen::Index>(j + 1)] += h;
  }
  return w;
}

Eigen::VectorXd integrate_against_basis(const Curve& curve, const BasisSpec& spec) {
  if (curve.t.size() != curve.x.size()) throw ConfigError("curve times and values differ in length");
  if (curve.t.size() < 2) throw DataError("curve needs at least two observed points for quadrature");
  const Eigen::VectorXd w = trapezoid_weights(curve.t);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(spec.size());
  for (std::size_t j = 0; j < curve.t.size(); ++j) {
    const double wx = w[static_cast<Eigen::Index>(j)] * curve.x[j];
    if (wx != 0.0) row += wx * eval_basis(curve.t[j], spec);
  }
  return row;
}

Eigen::MatrixXd sofr_design(std::span<const Curve> curves, const BasisSpec& spec) {
  Eigen::MatrixXd w(static_cast<Eigen::Index>(curves.size()), spec.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    w.row(static_cast<Eigen::Index>(i)) = integrate_against_basis(curves[i], spec).transpose();
  }
  return w;
}

Eigen::MatrixXd flcm_design(std::span<const double> x, const Eigen::MatrixXd& basis_matrix) {
  if (static_cast<Eigen::Index>(x.size()) != basis_matrix.rows()) {
    throw ConfigError("flcm_design: covariate length " + std::to_string(x.size()) +
                      " does not match basis rows " + std::to_string(basis_matrix.rows()));
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return xv.asDiagonal() * basis_matrix;
}

Eigen::MatrixXd fofr_design(const Curve& x_curve, const TensorBasisSpec& tensor,
                            std::span<const double> t_points) {
  tensor.validate();
  const BasisSpec s_spec{tensor.order_s, tensor.domain_s};
  const BasisSpec t_spec{tensor.order_t, tensor.domain_t};
  const Eigen::VectorXd s_int = integrate_against_basis(x_curve, s_spec);
  const Eigen::MatrixXd bt = eval_basis_matrix(t_points, t_spec);
  const Eigen::Index ks = s_spec.size();
  const Eigen::Index kt = t_spec.size();
  Eigen::MatrixXd out(bt.rows(), ks * kt);
  for (Eigen::Index k1 = 0; k1 < ks; ++k1) out.middleCols(k1 * kt, kt) = s_int[k1] * bt;
  return out;
}

}  // namespace bernfit
