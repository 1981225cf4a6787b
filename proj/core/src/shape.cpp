#include "bernfit/shape.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

const std::map<ShapeKind, std::string>& kind_names() {
  static const std::map<ShapeKind, std::string> names{
      {ShapeKind::kFixedBoundaries, "FixedBoundaries"},
      {ShapeKind::kNonNegative, "NonNegative"},
      {ShapeKind::kNonPositive, "NonPositive"},
      {ShapeKind::kNonDecreasing, "NonDecreasing"},
      {ShapeKind::kNonIncreasing, "NonIncreasing"},
      {ShapeKind::kConvex, "Convex"},
      {ShapeKind::kConcave, "Concave"},
      {ShapeKind::kBivariateMonotone, "BivariateMonotone"},
      {ShapeKind::kPartialConvex, "PartialConvex"},
      {ShapeKind::kQuantileMonotone, "QuantileMonotone"},
      {ShapeKind::kCombination, "Combination"},
  };
  return names;
}

ConstraintSystem inequalities(Eigen::MatrixXd a, int coef_len) {
  ConstraintSystem sys;
  sys.b = Eigen::VectorXd::Zero(a.rows());
  sys.equality.assign(static_cast<std::size_t>(a.rows()), false);
  sys.A = std::move(a);
  sys.coef_len = coef_len;
  return sys;
}

// First-difference operator D1 (N x (N+1)): row k = e_{k+1} - e_k.
Eigen::MatrixXd first_difference(int order) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(order, order + 1);
  for (int k = 0; k < order; ++k) {
    d(k, k) = -1.0;
    d(k, k + 1) = 1.0;
  }
  return d;
}

// Second-difference operator D2 ((N-1) x (N+1)): row k = e_k - 2 e_{k+1} + e_{k+2}.
Eigen::MatrixXd second_difference(int order) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(std::max(order - 1, 0), order + 1);
  for (int k = 0; k + 1 < order; ++k) {
    d(k, k) = 1.0;
    d(k, k + 1) = -2.0;
    d(k, k + 2) = 1.0;
  }
  return d;
}

void require_order(const ShapeSpec& shape, int order) {
  if (order < shape.min_order()) {
    throw ConfigError(to_string(shape.kind) + " requires Bernstein order N >= " +
                      std::to_string(shape.min_order()) + ", got N = " + std::to_string(order));
  }
}

ConstraintSystem coefficient_bound_rows(int coef_len, double bound) {
  if (coef_len > 16) {
    throw ConfigError("coefficient bound rows limited to 16 coefficients (2^16 rows)");
  }
  const Eigen::Index rows = Eigen::Index{1} << coef_len;
  Eigen::MatrixXd a(rows, coef_len);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (int k = 0; k < coef_len; ++k) a(r, k) = ((r >> k) & 1) ? 1.0 : -1.0;
  }
  // sum s_k beta_k <= bound  <=>  -s . beta >= -bound
  ConstraintSystem sys = inequalities(-a, coef_len);
  sys.b.setConstant(-bound);
  return sys;
}

// Kronecker-style placement for k1-major vectorisation.
Eigen::MatrixXd kron(const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
  Eigen::MatrixXd out(left.rows() * right.rows(), left.cols() * right.cols());
  for (Eigen::Index i = 0; i < left.rows(); ++i) {
    for (Eigen::Index j = 0; j < left.cols(); ++j) {
      out.block(i * right.rows(), j * right.cols(), right.rows(), right.cols()) = left(i, j) * right;
    }
  }
  return out;
}

ConstraintSystem univariate(const ShapeSpec& shape, int order) {
  const int p = order + 1;
  switch (shape.kind) {
    case ShapeKind::kFixedBoundaries: {
      ConstraintSystem sys;
      sys.coef_len = p;
      const int rows = (shape.a0 ? 1 : 0) + (shape.a1 ? 1 : 0);
      sys.A = Eigen::MatrixXd::Zero(rows, p);
      sys.b = Eigen::VectorXd::Zero(rows);
      sys.equality.assign(static_cast<std::size_t>(rows), true);
      int r = 0;
      if (shape.a0) {
        sys.A(r, 0) = 1.0;
        sys.b[r++] = *shape.a0;
      }
      if (shape.a1) {
        sys.A(r, order) = 1.0;
        sys.b[r] = *shape.a1;
      }
      return sys;
    }
    case ShapeKind::kNonNegative:
      return inequalities(Eigen::MatrixXd::Identity(p, p), p);
    case ShapeKind::kNonPositive:
      return inequalities(-Eigen::MatrixXd::Identity(p, p), p);
    case ShapeKind::kNonDecreasing:
      return inequalities(first_difference(order), p);
    case ShapeKind::kNonIncreasing:
      return inequalities(-first_difference(order), p);
    case ShapeKind::kConvex:
      return inequalities(second_difference(order), p);
    case ShapeKind::kConcave:
      return inequalities(-second_difference(order), p);
    default:
      throw ConfigError(to_string(shape.kind) + " is not a univariate shape");
  }
}

ConstraintSystem bivariate(const ShapeSpec& shape, int order) {
  const int k = order + 1;
  const int p = k * k;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  switch (shape.kind) {
    case ShapeKind::kNonNegative:
      return inequalities(Eigen::MatrixXd::Identity(p, p), p);
    case ShapeKind::kNonPositive:
      return inequalities(-Eigen::MatrixXd::Identity(p, p), p);
    case ShapeKind::kBivariateMonotone:
    case ShapeKind::kPartialConvex: {
      const bool convex = shape.kind == ShapeKind::kPartialConvex;
      const Eigen::MatrixXd d = convex ? second_difference(order) : first_difference(order);
      ConstraintSystem sys = ConstraintSystem::none(p);
      // Differences along s act on k1 (the slow index); along t on k2.
      if (shape.in_s) sys.append(inequalities(kron(d, eye), p));
      if (shape.in_t) sys.append(inequalities(kron(eye, d), p));
      return sys;
    }
    default:
      throw ConfigError(to_string(shape.kind) + " is not a bivariate shape");
  }
}

}  // namespace

std::string to_string(ShapeKind kind) { return kind_names().at(kind); }

ShapeKind shape_kind_from_string(const std::string& name) {
  for (const auto& [kind, text] : kind_names()) {
    if (text == name) return kind;
  }
  throw ConfigError("unknown shape kind '" + name + "'");
}

ShapeSpec ShapeSpec::fixed_boundaries(std::optional<double> a0, std::optional<double> a1) {
  ShapeSpec s;
  s.kind = ShapeKind::kFixedBoundaries;
  s.a0 = a0;
  s.a1 = a1;
  return s;
}

ShapeSpec ShapeSpec::of(ShapeKind kind) {
  ShapeSpec s;
  s.kind = kind;
  return s;
}

ShapeSpec ShapeSpec::bivariate_monotone(bool in_s, bool in_t) {
  ShapeSpec s;
  s.kind = ShapeKind::kBivariateMonotone;
  s.in_s = in_s;
  s.in_t = in_t;
  return s;
}

ShapeSpec ShapeSpec::partial_convex(bool in_s, bool in_t) {
  ShapeSpec s = bivariate_monotone(in_s, in_t);
  s.kind = ShapeKind::kPartialConvex;
  return s;
}

ShapeSpec ShapeSpec::quantile_monotone(int predictors) {
  ShapeSpec s;
  s.kind = ShapeKind::kQuantileMonotone;
  s.predictors = predictors;
  return s;
}

ShapeSpec ShapeSpec::combination(std::vector<ShapeSpec> parts) {
  ShapeSpec s;
  s.kind = ShapeKind::kCombination;
  s.parts = std::move(parts);
  return s;
}

bool ShapeSpec::is_bivariate() const {
  switch (kind) {
    case ShapeKind::kBivariateMonotone:
    case ShapeKind::kPartialConvex:
      return true;
    case ShapeKind::kCombination:
      return std::any_of(parts.begin(), parts.end(),
                         [](const ShapeSpec& p) { return p.is_bivariate(); });
    default:
      return false;
  }
}

int ShapeSpec::min_order() const {
  switch (kind) {
    case ShapeKind::kNonNegative:
    case ShapeKind::kNonPositive:
      return 0;
    case ShapeKind::kFixedBoundaries:
    case ShapeKind::kNonDecreasing:
    case ShapeKind::kNonIncreasing:
    case ShapeKind::kBivariateMonotone:
    case ShapeKind::kQuantileMonotone:
      return 1;
    case ShapeKind::kConvex:
    case ShapeKind::kConcave:
    case ShapeKind::kPartialConvex:
      return 2;
    case ShapeKind::kCombination: {
      int m = 0;
      for (const auto& p : parts) m = std::max(m, p.min_order());
      return m;
    }
  }
  return 0;
}

void ShapeSpec::validate() const {
  switch (kind) {
    case ShapeKind::kFixedBoundaries:
      if (!a0 && !a1) throw ConfigError("FixedBoundaries needs at least one of a0, a1");
      break;
    case ShapeKind::kBivariateMonotone:
    case ShapeKind::kPartialConvex:
      if (!in_s && !in_t) throw ConfigError(to_string(kind) + " needs in_s or in_t");
      break;
    case ShapeKind::kQuantileMonotone:
      if (predictors < 1) throw ConfigError("QuantileMonotone requires J >= 1 predictors");
      break;
    case ShapeKind::kCombination: {
      if (parts.empty()) throw ConfigError("Combination needs at least one part");
      const bool biv = is_bivariate();
      for (const auto& part : parts) {
        part.validate();
        if (part.kind == ShapeKind::kQuantileMonotone) {
          throw ConfigError("QuantileMonotone cannot be combined; stack block shapes in qfosr");
        }
        const bool generic =
            part.kind == ShapeKind::kNonNegative || part.kind == ShapeKind::kNonPositive;
        if (biv && !part.is_bivariate() && !generic && part.kind != ShapeKind::kCombination) {
          throw ConfigError("Combination mixes univariate and bivariate kinds");
        }
      }
      break;
    }
    default:
      break;
  }
}

ConstraintSystem ConstraintSystem::none(int coef_len) {
  ConstraintSystem sys;
  sys.A = Eigen::MatrixXd::Zero(0, coef_len);
  sys.b = Eigen::VectorXd::Zero(0);
  sys.coef_len = coef_len;
  return sys;
}

void ConstraintSystem::append(const ConstraintSystem& other) {
  if (other.coef_len != coef_len) {
    throw ConfigError("cannot stack constraint systems of different coefficient length");
  }
  if (other.empty()) return;
  Eigen::MatrixXd a(A.rows() + other.A.rows(), coef_len);
  a << A, other.A;
  Eigen::VectorXd bb(b.size() + other.b.size());
  bb << b, other.b;
  A = std::move(a);
  b = std::move(bb);
  equality.insert(equality.end(), other.equality.begin(), other.equality.end());
}

void ConstraintSystem::deduplicate() {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const bool dup = std::any_of(keep.begin(), keep.end(), [&](Eigen::Index q) {
      return equality[static_cast<std::size_t>(q)] == equality[static_cast<std::size_t>(r)] &&
             b[q] == b[r] && A.row(q) == A.row(r);
    });
    if (!dup) keep.push_back(r);
  }
  if (static_cast<Eigen::Index>(keep.size()) == A.rows()) return;
  ConstraintSystem out;
  out.coef_len = coef_len;
  out.A.resize(static_cast<Eigen::Index>(keep.size()), coef_len);
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.A.row(static_cast<Eigen::Index>(i)) = A.row(keep[i]);
    out.b[static_cast<Eigen::Index>(i)] = b[keep[i]];
    out.equality.push_back(equality[static_cast<std::size_t>(keep[i])]);
  }
  *this = std::move(out);
}

ConstraintSystem ConstraintSystem::embed(int offset, int total_len) const {
  if (offset < 0 || offset + coef_len > total_len) {
    throw ConfigError("constraint embedding out of range");
  }
  ConstraintSystem out;
  out.coef_len = total_len;
  out.A = Eigen::MatrixXd::Zero(A.rows(), total_len);
  out.A.middleCols(offset, coef_len) = A;
  out.b = b;
  out.equality = equality;
  return out;
}

ConstraintSystem build_constraints(const ShapeSpec& shape, const BasisSpec& spec,
                                   const ConstraintOptions& options) {
  shape.validate();
  if (shape.is_bivariate()) throw ConfigError(to_string(shape.kind) + " needs a tensor basis");
  if (shape.kind == ShapeKind::kQuantileMonotone) {
    ConstraintSystem sys = build_quantile_monotone(shape.predictors, spec);
    if (options.coefficient_bound) {
      sys.append(coefficient_bound_rows(sys.coef_len, *options.coefficient_bound));
    }
    return sys;
  }
  require_order(shape, spec.order);
  const int p = spec.size();
  ConstraintSystem sys = ConstraintSystem::none(p);
  if (shape.kind == ShapeKind::kCombination) {
    for (const auto& part : shape.parts) sys.append(build_constraints(part, spec));
    sys.deduplicate();
  } else {
    sys = univariate(shape, spec.order);
  }
  if (options.coefficient_bound) sys.append(coefficient_bound_rows(p, *options.coefficient_bound));
  return sys;
}

ConstraintSystem build_constraints(const ShapeSpec& shape, const TensorBasisSpec& spec,
                                   const ConstraintOptions& options) {
  shape.validate();
  spec.validate();
  require_order(shape, spec.order());
  const int p = spec.size();
  ConstraintSystem sys = ConstraintSystem::none(p);
  if (shape.kind == ShapeKind::kCombination) {
    for (const auto& part : shape.parts) sys.append(build_constraints(part, spec));
    sys.deduplicate();
  } else {
    sys = bivariate(shape, spec.order());
  }
  if (options.coefficient_bound) sys.append(coefficient_bound_rows(p, *options.coefficient_bound));
  return sys;
}

ConstraintSystem build_quantile_monotone(int predictors, const BasisSpec& spec) {
  if (predictors < 1) throw ConfigError("QuantileMonotone requires J >= 1 predictors");
  if (predictors > 20) {
    throw ConfigError("QuantileMonotone with J = " + std::to_string(predictors) +
                      " would emit N*2^J rows; prune predictors or constrain subsets");
  }
  if (spec.order < 1) throw ConfigError("QuantileMonotone requires Bernstein order N >= 1");
  const int n = spec.order;
  const int k = n + 1;
  const int p = k * (predictors + 1);
  const Eigen::Index subsets = Eigen::Index{1} << predictors;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * subsets, p);
  Eigen::Index row = 0;
  for (int diff = 1; diff <= n; ++diff) {
    for (Eigen::Index mask = 0; mask < subsets; ++mask) {
      for (int j = 0; j <= predictors; ++j) {
        if (j > 0 && !((mask >> (j - 1)) & 1)) continue;
        a(row, j * k + diff) += n;
        a(row, j * k + diff - 1) -= n;
      }
      ++row;
    }
  }
  return inequalities(std::move(a), p);
}

ShapeReport check_constraints(const Eigen::VectorXd& beta, const ConstraintSystem& system,
                              double tol) {
  if (beta.size() != system.coef_len) {
    throw ConfigError("coefficient length " + std::to_string(beta.size()) +
                      " does not match constraint system length " +
                      std::to_string(system.coef_len));
  }
  ShapeReport report;
  if (system.empty()) return report;
  const Eigen::VectorXd slack = system.A * beta - system.b;
  for (Eigen::Index r = 0; r < slack.size(); ++r) {
    const double v = system.equality[static_cast<std::size_t>(r)] ? std::abs(slack[r])
                                                                   : std::max(0.0, -slack[r]);
    report.worst_violation = std::max(report.worst_violation, v);
    if (v > tol) report.violated_rows.push_back(r);
  }
  report.feasible = report.worst_violation <= tol;
  return report;
}

ShapeReport check_shape(const Eigen::VectorXd& beta, const ShapeSpec& shape, double tol) {
  const auto len = static_cast<int>(beta.size());
  if (shape.kind == ShapeKind::kQuantileMonotone) {
    const int blocks = shape.predictors + 1;
    if (shape.predictors < 1 || len % blocks != 0) {
      throw ConfigError("coefficient length does not match QuantileMonotone block layout");
    }
    return check_constraints(beta, build_quantile_monotone(shape.predictors, {len / blocks - 1}), tol);
  }
  if (shape.is_bivariate()) {
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(len))));
    if (k * k != len) throw ConfigError("bivariate coefficient length must be a perfect square");
    TensorBasisSpec tensor;
    tensor.order_s = tensor.order_t = k - 1;
    return check_constraints(beta, build_constraints(shape, tensor), tol);
  }
  return check_constraints(beta, build_constraints(shape, BasisSpec{len - 1}), tol);
}

}  // namespace bernfit
