#include "bernfit/qfosr.hpp"

#include <algorithm>
#include <cmath>

#include "bernfit/covariance.hpp"
#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

void check_monotone(const FunctionalDataset& data, double rel_tol, std::vector<std::string>& warnings) {
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const auto& s : data.subjects) {
    for (double v : s.y_curve) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  const double tol = rel_tol * std::max(hi - lo, 1e-300);
  std::vector<std::string> bad;
  std::size_t minor = 0;
  for (const auto& s : data.subjects) {
    double worst = 0.0;
    for (std::size_t j = 1; j < s.y_curve.size(); ++j) {
      worst = std::max(worst, s.y_curve[j - 1] - s.y_curve[j]);
    }
    if (worst > tol) {
      bad.push_back(s.id);
    } else if (worst > 0.0) {
      ++minor;
    }
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t k = 0; k < bad.size(); ++k) list += (k ? ", " : "") + bad[k];
    throw DataError("quantile responses decrease in p for subjects: " + list);
  }
  if (minor > 0) {
    warnings.push_back(std::to_string(minor) +
                       " subject(s) have tiny decreases in their quantile curves (within tolerance)");
  }
}

}  // namespace

Eigen::VectorXd QfosrFit::mu_coefs(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != predictors) {
    throw ConfigError("expected " + std::to_string(predictors) + " covariate values");
  }
  Eigen::VectorXd mu = fit.blocks.at(0);
  for (std::size_t j = 0; j < x.size(); ++j) mu += x[j] * fit.blocks.at(j + 1);
  return mu;
}

double QfosrFit::predict_scaled(const std::vector<double>& x, double p) const {
  return eval_bernstein(mu_coefs(x), fit.domain.to_unit(p));
}

double QfosrFit::predict(const std::vector<double>& raw, double p) const {
  std::vector<double> x(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) x[j] = j < rescale.size() ? rescale[j].apply(raw[j]) : raw[j];
  return predict_scaled(x, p);
}

QfosrFit fit_qfosr(FunctionalDataset data, const QfosrOptions& options) {
  QfosrFit out;
  if (!data.has_functional_response()) throw DataError("qfosr needs a quantile curve per subject");
  if (data.sparse_y()) throw DataError("qfosr needs every quantile curve on the common p-grid");
  if (data.covariate_count() == 0) throw DataError("qfosr needs at least one scalar covariate");
  check_monotone(data, options.monotone_tol, out.warnings);
  if (data.rescale.empty()) rescale_covariates(data);
  out.rescale = data.rescale;
  out.predictors = static_cast<int>(data.covariate_count());

  FunctionalSpec spec;
  spec.kind = ModelKind::kQfosr;
  spec.order = options.order;
  spec.intercept_order = options.order;
  spec.shape_term = options.extra_term;
  const FunctionalDesign design = build_functional_design(data, spec, &out.warnings);
  const ShapeSpec qm = ShapeSpec::quantile_monotone(out.predictors);
  out.constraints = functional_constraints(design, qm);
  if (options.extra_shape) {
    out.constraints.append(functional_constraints(design, options.extra_shape));
    out.constraints.deduplicate();
  }
  std::optional<CovarianceModel> cov;
  if (options.whiten) {
    const FunctionalFit ols = fit_functional(design, design.Y,
                                             ConstraintSystem::none(static_cast<int>(design.coef_count)),
                                             std::nullopt, nullptr, options.tol);
    CovarianceOptions copt;
    copt.pve = options.pve;
    cov = estimate_covariance(ols.residual_matrix, design.grid, copt, &out.warnings);
  }
  out.fit = fit_functional(design, design.Y, out.constraints, qm, cov ? &*cov : nullptr, options.tol);
  out.certificate = out.fit.certificate;
  out.warnings.insert(out.warnings.end(), out.fit.warnings.begin(), out.fit.warnings.end());

  if (options.ci_draws > 0) {
    CiOptions ci;
    ci.draws = options.ci_draws;
    ci.level = options.level;
    ci.seed = options.seed;
    ci.threads = options.threads;
    ci.pve = options.pve;
    ci.whiten = options.whiten;
    // Projection uses the same constraint rows as the fit.
    ci.block = 0;
    std::vector<double> grid;
    SandwichEstimate est = sandwich_estimate(data, spec, std::nullopt, ci, &grid);
    est.constraints = out.constraints;
    for (int b = 0; b <= out.predictors; ++b) {
      ci.block = b;
      const auto k = static_cast<std::size_t>(b);
      est.evaluation = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), design.coef_count);
      est.evaluation.middleCols(design.block_offset[k], design.block_size[k]) =
          eval_basis_matrix(grid, BasisSpec{options.order, design.domain});
      CiBand band = projection_band(est, ci);
      band.grid = grid;
      out.bands.push_back(std::move(band));
    }
  }
  return out;
}

}  // namespace bernfit
