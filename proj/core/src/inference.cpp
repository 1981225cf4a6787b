#include "bernfit/inference.hpp"

#include <cmath>
#include <limits>

#include "bernfit/covariance.hpp"
#include "bernfit/errors.hpp"
#include "bernfit/parallel.hpp"
#include "bernfit/qp.hpp"
#include "bernfit/rng.hpp"
#include "bernfit/sofr.hpp"
#include "bernfit/stats.hpp"

namespace bernfit {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, std::vector<std::string>& warnings) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of Omega failed");
  Eigen::VectorXd vals = eig.eigenvalues();
  const double floor = 1e-12 * std::max(vals.cwiseAbs().maxCoeff(), 1e-300);
  bool clipped = false;
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    if (vals[k] < floor) {
      vals[k] = floor;
      clipped = true;
    }
  }
  if (clipped) warnings.emplace_back("Omega is near singular; small eigenvalues floored");
  return eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

// Symmetric square root with negative eigenvalues clipped at zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, std::vector<std::string>& warnings) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of Delta failed");
  Eigen::VectorXd vals = eig.eigenvalues();
  const double scale = std::max(vals.cwiseAbs().maxCoeff(), 1e-300);
  if (vals.minCoeff() < -1e-10 * scale) {
    warnings.emplace_back("sandwich covariance not PSD; negative eigenvalues clipped to 0");
  }
  vals = vals.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd block_evaluation(const FunctionalDesign& design, std::size_t block,
                                 const std::vector<double>& grid, const std::vector<double>& grid_s) {
  const Eigen::Index offset = design.block_offset[block];
  if (!design.block_bivariate[block]) {
    const int order = block == 0 ? design.spec.intercept_order : design.spec.order;
    const Eigen::MatrixXd b = eval_basis_matrix(grid, BasisSpec{order, design.domain});
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(b.rows(), design.coef_count);
    e.middleCols(offset, b.cols()) = b;
    return e;
  }
  const BasisSpec spec{design.spec.order, design.domain};
  const Eigen::MatrixXd bs = eval_basis_matrix(grid_s, spec);
  const Eigen::MatrixXd bt = eval_basis_matrix(grid, spec);
  const Eigen::Index k = spec.size();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(bs.rows() * bt.rows(), design.coef_count);
  for (Eigen::Index a = 0; a < bs.rows(); ++a) {
    for (Eigen::Index c = 0; c < bt.rows(); ++c) {
      for (Eigen::Index k1 = 0; k1 < k; ++k1) {
        e.block(a * bt.rows() + c, offset + k1 * k, 1, k) = bs(a, k1) * bt.row(c);
      }
    }
  }
  return e;
}

double test_statistic(double rss_c, double rss_u, double yty, bool feasible, bool* degenerate) {
  if (feasible) return 0.0;
  const double gap = std::max(0.0, rss_c - rss_u);
  if (rss_u <= 1e-24 * std::max(yty, 1e-300)) {
    if (degenerate != nullptr) *degenerate = true;
    return gap > 1e-24 * std::max(yty, 1e-300) ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return gap / rss_u;
}

double bootstrap_pvalue(const std::vector<double>& stats, double observed) {
  std::size_t count = 0;
  for (double t : stats) {
    if (t >= observed) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(stats.size());
}

void check_draws(int draws, const char* what) {
  if (draws < 100) throw ConfigError(std::string(what) + " needs at least 100 bootstrap draws");
}

}  // namespace

double CiBand::average_width() const {
  if (lower.size() == 0) return 0.0;
  return (upper - lower).mean();
}

SandwichEstimate sandwich_estimate(const FunctionalDataset& data, const FunctionalSpec& spec,
                                   const std::optional<ShapeSpec>& shape, const CiOptions& options,
                                   std::vector<double>* grid, std::vector<double>* grid_s) {
  SandwichEstimate est;
  if (spec.kind == ModelKind::kSofr) {
    const BasisSpec basis{spec.order, data.domain};
    const SofrDesign design = build_sofr_design(data, basis, &est.warnings);
    const auto n = static_cast<double>(design.n());
    est.constraints = sofr_constraints(design, shape);
    QpProblem qp{design.X, design.y, ConstraintSystem::none(static_cast<int>(design.coef_count())), 0.0};
    est.theta = solve_clsq(qp).beta;
    const Eigen::VectorXd e = design.y - design.X * est.theta;
    est.omega = design.X.transpose() * design.X / n;
    const Eigen::MatrixXd meat =
        design.X.transpose() * e.array().square().matrix().asDiagonal() * design.X / n;
    const Eigen::MatrixXd inv = spd_inverse(est.omega, est.warnings);
    est.delta = inv * meat * inv / n;
    std::vector<double> pts = options.points.empty() ? data.x_grid.points : options.points;
    const Eigen::MatrixXd b = eval_basis_matrix(pts, basis);
    est.evaluation = Eigen::MatrixXd::Zero(b.rows(), design.coef_count());
    est.evaluation.middleCols(design.beta_offset, b.cols()) = b;
    if (grid != nullptr) *grid = pts;
    return est;
  }

  const FunctionalDesign design = build_functional_design(data, spec, &est.warnings);
  const auto block = static_cast<std::size_t>(options.block);
  if (block >= design.block_size.size()) throw ConfigError("CI block index out of range");
  est.constraints = functional_constraints(design, shape);
  std::optional<CovarianceModel> cov;
  if (options.whiten) {
    const FunctionalFit ols = fit_functional(design, design.Y,
                                             ConstraintSystem::none(static_cast<int>(design.coef_count)),
                                             std::nullopt, nullptr);
    CovarianceOptions copt;
    copt.pve = options.pve;
    cov = estimate_covariance(ols.residual_matrix, design.grid, copt, &est.warnings);
  }
  const FunctionalSolver solver(design, cov ? &*cov : nullptr);
  est.theta = solver.solve(design.Y, ConstraintSystem::none(static_cast<int>(design.coef_count))).beta;
  const auto n = static_cast<double>(design.n());
  est.omega = solver.gram() / n;
  const auto& zw = solver.whitened_design();
  const auto yw = solver.whiten_responses(design.Y);
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(design.coef_count, design.coef_count);
  for (std::size_t i = 0; i < design.n(); ++i) {
    const Eigen::VectorXd s = zw[i].transpose() * (yw[i] - zw[i] * est.theta);
    meat.noalias() += s * s.transpose();
  }
  meat /= n;
  const Eigen::MatrixXd inv = spd_inverse(est.omega, est.warnings);
  est.delta = inv * meat * inv / n;

  std::vector<double> pts = options.points.empty() ? design.grid : options.points;
  std::vector<double> pts_s;
  if (design.block_bivariate[block]) pts_s = options.points.empty() ? data.x_grid.points : options.points;
  est.evaluation = block_evaluation(design, block, pts, pts_s);
  if (grid != nullptr) *grid = pts;
  if (grid_s != nullptr) *grid_s = pts_s;
  return est;
}

CiBand projection_band(const SandwichEstimate& est, const CiOptions& options) {
  check_draws(options.draws, "projection CI");
  if (!(options.level > 0.0 && options.level < 1.0)) throw ConfigError("CI level must lie in (0,1)");
  CiBand band;
  band.level = options.level;
  band.draws = options.draws;
  band.seed = options.seed;
  band.block = options.block;
  band.warnings = est.warnings;
  const Eigen::MatrixXd root = psd_sqrt(est.delta, band.warnings);
  const OmegaProjector project(est.omega, est.constraints, &band.warnings);
  band.estimate = est.evaluation * project(est.theta);

  const auto draws = static_cast<std::size_t>(options.draws);
  const Eigen::Index p = est.theta.size();
  Eigen::MatrixXd values(est.evaluation.rows(), options.draws);
  parallel_for(draws, resolve_threads(options.threads), [&](std::size_t b) {
    Rng rng({options.seed, static_cast<std::uint64_t>(b),
             static_cast<std::uint64_t>(StreamRole::kProjectionDraw)});
    Eigen::VectorXd xi(p);
    for (Eigen::Index k = 0; k < p; ++k) xi[k] = rng.normal();
    const Eigen::VectorXd z = est.theta + root * xi;
    values.col(static_cast<Eigen::Index>(b)) = est.evaluation * project(z);
  });
  const double alpha = 1.0 - options.level;
  band.lower.resize(values.rows());
  band.upper.resize(values.rows());
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    std::vector<double> row(static_cast<std::size_t>(values.cols()));
    for (Eigen::Index b = 0; b < values.cols(); ++b) row[static_cast<std::size_t>(b)] = values(j, b);
    band.lower[j] = quantile(row, alpha / 2.0);
    band.upper[j] = quantile(std::move(row), 1.0 - alpha / 2.0);
  }
  return band;
}

CiBand projection_ci(const FunctionalDataset& data, const FunctionalSpec& spec,
                     const std::optional<ShapeSpec>& shape, const CiOptions& options) {
  check_draws(options.draws, "projection CI");
  std::vector<double> grid;
  std::vector<double> grid_s;
  const SandwichEstimate est = sandwich_estimate(data, spec, shape, options, &grid, &grid_s);
  CiBand band = projection_band(est, options);
  band.grid = std::move(grid);
  band.grid_s = std::move(grid_s);
  return band;
}

TestReport bootstrap_shape_test_scalar(const FunctionalDataset& data, const BasisSpec& spec,
                                       const ShapeSpec& shape_null, const TestOptions& options) {
  check_draws(options.draws, "bootstrap test");
  TestReport report;
  report.seed = options.seed;
  report.draws = options.draws;
  const SofrDesign design = build_sofr_design(data, BasisSpec{spec.order, data.domain}, &report.warnings);
  const auto p = static_cast<int>(design.coef_count());
  const ConstraintSystem cons = sofr_constraints(design, shape_null);
  const ConstraintSystem none = ConstraintSystem::none(p);
  const Eigen::MatrixXd gram = design.X.transpose() * design.X;

  struct Pair {
    double rss_c, rss_u, stat;
    Eigen::VectorXd theta_c;
    bool degenerate = false;
  };
  auto evaluate = [&](const Eigen::VectorXd& y, Eigen::VectorXd* residuals) {
    QpGramProblem qp{gram, design.X.transpose() * y, y.squaredNorm(), none, 0.0};
    const Eigen::VectorXd theta_u = solve_clsq(qp, options.tol).beta;
    Pair out;
    const Eigen::VectorXd e_u = y - design.X * theta_u;
    out.rss_u = e_u.squaredNorm();
    if (residuals != nullptr) *residuals = e_u;
    const bool feasible = check_constraints(theta_u, cons, options.tol).feasible;
    if (feasible) {
      out.theta_c = theta_u;
      out.rss_c = out.rss_u;
    } else {
      qp.constraints = cons;
      out.theta_c = solve_clsq(qp, options.tol).beta;
      out.rss_c = (y - design.X * out.theta_c).squaredNorm();
    }
    out.stat = test_statistic(out.rss_c, out.rss_u, y.squaredNorm(), feasible, &out.degenerate);
    return out;
  };

  Eigen::VectorXd resid;
  const Pair obs = evaluate(design.y, &resid);
  report.statistic = obs.stat;
  report.rss_constrained = obs.rss_c;
  report.rss_unconstrained = obs.rss_u;
  if (obs.degenerate) {
    report.warnings.emplace_back("unconstrained RSS is zero; statistic set to " +
                                 std::string(std::isinf(obs.stat) ? "+inf" : "0"));
  }
  const Eigen::VectorXd fitted_null = design.X * obs.theta_c;
  const auto n = design.n();
  report.bootstrap_stats.assign(static_cast<std::size_t>(options.draws), 0.0);
  parallel_for(report.bootstrap_stats.size(), resolve_threads(options.threads), [&](std::size_t b) {
    Rng rng({options.seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(StreamRole::kBootstrap)});
    Eigen::VectorXd ystar = fitted_null;
    for (Eigen::Index i = 0; i < n; ++i) ystar[i] += resid[rng.uniform_int(0, n - 1)];
    report.bootstrap_stats[b] = evaluate(ystar, nullptr).stat;
  });
  report.p_value = bootstrap_pvalue(report.bootstrap_stats, report.statistic);
  return report;
}

TestReport bootstrap_shape_test_functional(const FunctionalDataset& data, const FunctionalSpec& spec,
                                           const ShapeSpec& shape_null, const TestOptions& options) {
  check_draws(options.draws, "bootstrap test");
  if (spec.kind == ModelKind::kSofr) throw ConfigError("use the scalar test for sofr");
  TestReport report;
  report.seed = options.seed;
  report.draws = options.draws;
  const FunctionalDesign design = build_functional_design(data, spec, &report.warnings);
  if (!design.dense()) {
    throw ConfigError("the functional shape test resamples whole residual curves and needs a common grid");
  }
  const ConstraintSystem cons = functional_constraints(design, shape_null);
  const ConstraintSystem none = ConstraintSystem::none(static_cast<int>(design.coef_count));
  std::optional<CovarianceModel> cov;
  if (options.whiten) {
    const FunctionalFit ols = fit_functional(design, design.Y, none, std::nullopt, nullptr, options.tol);
    CovarianceOptions copt;
    copt.pve = options.pve;
    cov = estimate_covariance(ols.residual_matrix, design.grid, copt, &report.warnings);
  }
  const FunctionalSolver solver(design, cov ? &*cov : nullptr);
  const auto& zw = solver.whitened_design();

  struct Pair {
    double rss_c, rss_u, stat;
    Eigen::VectorXd theta_c;
    bool degenerate = false;
  };
  auto rss_of = [&](const std::vector<Eigen::VectorXd>& yw, const Eigen::VectorXd& theta) {
    double rss = 0.0;
    for (std::size_t i = 0; i < yw.size(); ++i) rss += (yw[i] - zw[i] * theta).squaredNorm();
    return rss;
  };
  auto evaluate = [&](const std::vector<Eigen::VectorXd>& y) {
    const auto yw = solver.whiten_responses(y);
    double yty = 0.0;
    for (const auto& v : yw) yty += v.squaredNorm();
    const Eigen::VectorXd theta_u = solver.solve(y, none, options.tol).beta;
    Pair out;
    out.rss_u = rss_of(yw, theta_u);
    const bool feasible = check_constraints(theta_u, cons, options.tol).feasible;
    if (feasible) {
      out.theta_c = theta_u;
      out.rss_c = out.rss_u;
    } else {
      out.theta_c = solver.solve(y, cons, options.tol).beta;
      out.rss_c = rss_of(yw, out.theta_c);
    }
    out.stat = test_statistic(out.rss_c, out.rss_u, yty, feasible, &out.degenerate);
    return out;
  };

  const Pair obs = evaluate(design.Y);
  report.statistic = obs.stat;
  report.rss_constrained = obs.rss_c;
  report.rss_unconstrained = obs.rss_u;
  if (obs.degenerate) {
    report.warnings.emplace_back("unconstrained RSS is zero; statistic set to " +
                                 std::string(std::isinf(obs.stat) ? "+inf" : "0"));
  }
  // Raw residual curves of the full fit are the resampling units.
  const Eigen::VectorXd theta_full = solver.solve(design.Y, none, options.tol).beta;
  std::vector<Eigen::VectorXd> resid(design.n());
  std::vector<Eigen::VectorXd> fitted_null(design.n());
  for (std::size_t i = 0; i < design.n(); ++i) {
    resid[i] = design.Y[i] - design.Z[i] * theta_full;
    fitted_null[i] = design.Z[i] * obs.theta_c;
  }
  const auto n = static_cast<std::int64_t>(design.n());
  report.bootstrap_stats.assign(static_cast<std::size_t>(options.draws), 0.0);
  parallel_for(report.bootstrap_stats.size(), resolve_threads(options.threads), [&](std::size_t b) {
    Rng rng({options.seed, static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(StreamRole::kBootstrap)});
    std::vector<Eigen::VectorXd> ystar(design.n());
    for (std::size_t i = 0; i < design.n(); ++i) {
      ystar[i] = fitted_null[i] + resid[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
    }
    report.bootstrap_stats[b] = evaluate(ystar).stat;
  });
  report.p_value = bootstrap_pvalue(report.bootstrap_stats, report.statistic);
  return report;
}

}  // namespace bernfit
