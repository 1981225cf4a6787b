#include "bernfit/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bernfit/basis.hpp"
#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out(a, b) = m(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
    }
  }
  return out;
}

Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& s) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const double floor = std::max(eig.eigenvalues().maxCoeff(), 1.0) * 1e-14;
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd out = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Eigen-expansion of a symmetric kernel matrix on a grid with quadrature
// weights w: solve W^{1/2} G W^{1/2} u = lambda u, phi = W^{-1/2} u.
void fill_components(const Eigen::MatrixXd& g, const std::vector<double>& grid, double pve,
                     CovarianceModel& model) {
  const Eigen::VectorXd w = trapezoid_weights(grid);
  const Eigen::VectorXd ws = w.cwiseSqrt();
  const Eigen::MatrixXd scaled = ws.asDiagonal() * g * ws.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (scaled + scaled.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("FPCA eigendecomposition failed");
  const Eigen::Index m = g.rows();
  // Eigen returns ascending order.
  std::vector<double> vals;
  std::vector<Eigen::VectorXd> vecs;
  for (Eigen::Index k = m - 1; k >= 0; --k) {
    vals.push_back(std::max(0.0, eig.eigenvalues()[k]));
    vecs.push_back(eig.eigenvectors().col(k));
  }
  double total = 0.0;
  for (double v : vals) total += v;
  std::size_t keep = 0;
  if (total > 0.0) {
    double acc = 0.0;
    while (keep < vals.size() && vals[keep] > 0.0) {
      acc += vals[keep];
      ++keep;
      if (acc >= pve * total) break;
    }
  }
  model.eigenvalues.resize(static_cast<Eigen::Index>(keep));
  model.eigenfunctions.resize(m, static_cast<Eigen::Index>(keep));
  for (std::size_t k = 0; k < keep; ++k) {
    Eigen::VectorXd phi = vecs[k].cwiseQuotient(ws);
    Eigen::Index arg = 0;
    phi.cwiseAbs().maxCoeff(&arg);
    if (phi[arg] < 0.0) phi = -phi;
    model.eigenvalues[static_cast<Eigen::Index>(k)] = vals[k];
    model.eigenfunctions.col(static_cast<Eigen::Index>(k)) = phi;
  }
}

void finish(CovarianceModel& model) {
  const auto m = static_cast<double>(model.grid.size());
  double trace = model.nugget * m;
  const Eigen::VectorXd w = trapezoid_weights(model.grid);
  for (Eigen::Index k = 0; k < model.eigenvalues.size(); ++k) {
    trace += model.eigenvalues[k] * model.eigenfunctions.col(k).squaredNorm();
  }
  model.noise_floor = std::max(model.nugget, 1e-8 * trace / m);
  if (model.noise_floor <= 0.0) {
    model.identity = true;
    model.noise_floor = 1.0;
  }
}

// Symmetric tensor Bernstein surface fitted by least squares to the
// off-diagonal entries of `products` (pooled cross products), each weighted by
// its pair count. Returns the smooth kernel on the grid and sets `nugget` from
// the mean excess of the raw diagonal over the surface.
Eigen::MatrixXd smooth_covariance(const Eigen::MatrixXd& products, const Eigen::MatrixXd& counts,
                                  const std::vector<double>& grid, int order, double& nugget) {
  const Eigen::Index m = products.cols();
  const double lo = grid.front();
  const double hi = grid.back();
  const BasisSpec spec{order, Domain{lo, hi > lo ? hi : lo + 1.0}};
  const Eigen::MatrixXd basis = eval_basis_matrix(std::span<const double>(grid), spec);
  const Eigen::Index k = basis.cols();
  const Eigen::Index p = k * k;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd row(p);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      if (a == b || counts(a, b) <= 0.0) continue;
      for (Eigen::Index k1 = 0; k1 < k; ++k1) {
        row.segment(k1 * k, k) = basis(a, k1) * basis.row(b).transpose();
      }
      gram.selfadjointView<Eigen::Lower>().rankUpdate(row, counts(a, b));
      rhs += products(a, b) * row;
    }
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += 1e-10 * std::max(gram.trace() / static_cast<double>(p), 1e-300);
  const Eigen::VectorXd theta = gram.ldlt().solve(rhs);
  Eigen::MatrixXd coef(k, k);
  for (Eigen::Index k1 = 0; k1 < k; ++k1) coef.row(k1) = theta.segment(k1 * k, k).transpose();
  coef = 0.5 * (coef + coef.transpose());
  Eigen::MatrixXd g = basis * coef * basis.transpose();
  double excess = 0.0;
  double count = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (counts(j, j) > 0.0) {
      excess += std::max(0.0, products(j, j) / counts(j, j) - g(j, j));
      count += 1.0;
    }
  }
  nugget = count > 0.0 ? excess / count : 0.0;
  return g;
}

// Pooled cross products of sparse centered rows.
void pool_products(const Eigen::MatrixXd& centered, Eigen::MatrixXd& products, Eigen::MatrixXd& counts) {
  const Eigen::Index m = centered.cols();
  products = Eigen::MatrixXd::Zero(m, m);
  counts = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < centered.rows(); ++i) {
    std::vector<Eigen::Index> obs;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!std::isnan(centered(i, j))) obs.push_back(j);
    }
    for (Eigen::Index a : obs) {
      for (Eigen::Index b : obs) {
        products(a, b) += centered(i, a) * centered(i, b);
        counts(a, b) += 1.0;
      }
    }
  }
}

}  // namespace

CovarianceModel CovarianceModel::make_identity(std::vector<double> grid) {
  CovarianceModel c;
  c.grid = std::move(grid);
  c.eigenvalues.resize(0);
  c.eigenfunctions.resize(static_cast<Eigen::Index>(c.grid.size()), 0);
  c.nugget = 0.0;
  c.noise_floor = 1.0;
  c.identity = true;
  return c;
}

Eigen::MatrixXd CovarianceModel::sigma() const {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    s.selfadjointView<Eigen::Lower>().rankUpdate(eigenfunctions.col(k), eigenvalues[k]);
  }
  s = s.selfadjointView<Eigen::Lower>();
  s.diagonal().array() += noise_floor;
  return s;
}

Eigen::MatrixXd CovarianceModel::sigma(const std::vector<std::size_t>& idx) const {
  return select(sigma(), idx);
}

Eigen::MatrixXd CovarianceModel::inverse_sqrt() const {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (identity) return Eigen::MatrixXd::Identity(m, m);
  return inv_sqrt_spd(sigma());
}

Eigen::MatrixXd CovarianceModel::inverse_sqrt(const std::vector<std::size_t>& idx) const {
  if (identity) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    return Eigen::MatrixXd::Identity(k, k);
  }
  return inv_sqrt_spd(sigma(idx));
}

CovarianceModel estimate_covariance(const Eigen::MatrixXd& residuals,
                                    const std::vector<double>& grid,
                                    const CovarianceOptions& options,
                                    std::vector<std::string>* warnings) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index m = residuals.cols();
  if (static_cast<std::size_t>(m) != grid.size()) {
    throw ConfigError("residual matrix has " + std::to_string(m) + " columns but the grid has " +
                      std::to_string(grid.size()) + " points");
  }
  if (n < 3) throw DataError("covariance estimation needs at least 3 residual curves");
  if (!(options.pve > 0.0 && options.pve <= 1.0)) throw ConfigError("pve must lie in (0, 1]");

  CovarianceModel model;
  model.grid = grid;
  model.pve = options.pve;

  const bool sparse = residuals.hasNaN();
  Eigen::MatrixXd g;
  if (!sparse) {
    const Eigen::RowVectorXd mean = residuals.colwise().mean();
    const Eigen::MatrixXd centered = residuals.rowwise() - mean;
    Eigen::MatrixXd c = (centered.transpose() * centered) / static_cast<double>(n - 1);
    c = 0.5 * (c + c.transpose());
    g = c;
    if (m < 3) {
      if (warnings) warnings->push_back("grid has fewer than 3 points; nugget set to 0");
      model.nugget = 0.0;
    } else if (options.smooth_dense) {
      g = smooth_covariance(c, Eigen::MatrixXd::Ones(m, m), grid, options.smoothing_order, model.nugget);
    } else {
      double excess = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        double neighbour;
        if (j == 0) {
          neighbour = c(0, 1);
        } else if (j == m - 1) {
          neighbour = c(m - 1, m - 2);
        } else {
          neighbour = 0.5 * (c(j, j - 1) + c(j, j + 1));
        }
        excess += std::max(0.0, c(j, j) - neighbour);
        g(j, j) = neighbour;
      }
      model.nugget = excess / static_cast<double>(m);
    }
  } else {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = 0.0;
      double cnt = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isnan(residuals(i, j))) {
          s += residuals(i, j);
          cnt += 1.0;
        }
      }
      mean[j] = cnt > 0.0 ? s / cnt : 0.0;
    }
    const Eigen::MatrixXd centered = residuals.rowwise() - mean;
    Eigen::MatrixXd products;
    Eigen::MatrixXd counts;
    pool_products(centered, products, counts);
    g = smooth_covariance(products, counts, grid, options.smoothing_order, model.nugget);
  }
  fill_components(g, grid, options.pve, model);
  finish(model);
  if (model.identity && warnings) {
    warnings->push_back("residual covariance is zero; using identity whitening");
  }
  return model;
}

Eigen::MatrixXd whiten(const Eigen::MatrixXd& block, const CovarianceModel& cov) {
  if (block.rows() != static_cast<Eigen::Index>(cov.size())) {
    throw ConfigError("whiten: block rows do not match covariance grid");
  }
  if (cov.identity) return block;
  return cov.inverse_sqrt() * block;
}

Eigen::VectorXd whiten(const Eigen::VectorXd& values, const CovarianceModel& cov) {
  return whiten(Eigen::MatrixXd(values), cov).col(0);
}

FunctionalDataset reconstruct_sparse(const FunctionalDataset& data,
                                     const CovarianceOptions& options,
                                     std::vector<std::string>* warnings) {
  if (!data.sparse_x()) return data;
  const auto m = static_cast<Eigen::Index>(data.x_grid.size());
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (data.x_indices(i).size() >= 2) {
      kept.push_back(i);
    } else if (warnings) {
      warnings->push_back("subject " + data.subjects[i].id +
                          " has fewer than 2 covariate samples and was excluded");
    }
  }
  FunctionalDataset out = data.subset(kept);
  const auto n = static_cast<Eigen::Index>(out.n());
  Eigen::MatrixXd raw = Eigen::MatrixXd::Constant(n, m, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = out.x_indices(static_cast<std::size_t>(i));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      raw(i, static_cast<Eigen::Index>(idx[r])) = out.subjects[static_cast<std::size_t>(i)].x[r];
    }
  }
  // Smooth mean: least squares on a Bernstein basis over all pooled samples.
  const BasisSpec mean_spec{std::min(6, static_cast<int>(m) - 1), out.domain};
  const Eigen::MatrixXd bm = eval_basis_matrix(out.x_grid, mean_spec);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(bm.cols(), bm.cols());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(bm.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::isnan(raw(i, j))) continue;
      gram += bm.row(j).transpose() * bm.row(j);
      rhs += raw(i, j) * bm.row(j).transpose();
    }
  }
  gram.diagonal().array() += 1e-12 * std::max(gram.trace(), 1.0);
  const Eigen::VectorXd mean = bm * gram.ldlt().solve(rhs);
  const Eigen::MatrixXd centered = raw.rowwise() - mean.transpose();
  std::vector<double> grid = out.x_grid.points;
  CovarianceModel cov = estimate_covariance(centered, grid, options, warnings);
  const Eigen::MatrixXd sigma = cov.sigma();
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& s = out.subjects[static_cast<std::size_t>(i)];
    const auto idx = out.x_indices(static_cast<std::size_t>(i));
    Eigen::VectorXd xc(static_cast<Eigen::Index>(idx.size()));
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(idx.size()), cov.eigenfunctions.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto j = static_cast<Eigen::Index>(idx[r]);
      xc[static_cast<Eigen::Index>(r)] = raw(i, j) - mean[j];
      phi.row(static_cast<Eigen::Index>(r)) = cov.eigenfunctions.row(j);
    }
    const Eigen::MatrixXd s_i = select(sigma, idx);
    const Eigen::VectorXd alpha = s_i.ldlt().solve(xc);
    const Eigen::VectorXd scores = cov.eigenvalues.asDiagonal() * (phi.transpose() * alpha);
    const Eigen::VectorXd completed = mean + cov.eigenfunctions * scores;
    s.x.assign(completed.data(), completed.data() + completed.size());
    s.x_idx.clear();
  }
  out.sync_grid_patterns();
  return out;
}

}  // namespace bernfit
