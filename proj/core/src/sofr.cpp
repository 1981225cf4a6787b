#include "bernfit/sofr.hpp"

#include "bernfit/covariance.hpp"
#include "bernfit/errors.hpp"

namespace bernfit {

double SofrFit::beta(double t) const {
  return eval_bernstein(beta_coefs, basis.domain.to_unit(t));
}

SofrDesign build_sofr_design(const FunctionalDataset& data, const BasisSpec& spec,
                             std::vector<std::string>* warnings) {
  if (spec.order < 0) throw ConfigError("Bernstein order must be non-negative");
  const FunctionalDataset& source = data;
  FunctionalDataset completed;
  const FunctionalDataset* use = &source;
  if (data.sparse_x()) {
    completed = reconstruct_sparse(data, {}, warnings);
    use = &completed;
  }
  const auto n = static_cast<Eigen::Index>(use->n());
  const auto q = static_cast<Eigen::Index>(use->covariate_count());
  SofrDesign d;
  d.basis = BasisSpec{spec.order, use->domain};
  d.beta_offset = 1 + q;
  d.X.resize(n, 1 + q + d.basis.size());
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = use->subjects[static_cast<std::size_t>(i)];
    if (!s.has_x()) throw DataError("subject " + s.id + " has no functional covariate");
    d.X(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < q; ++j) d.X(i, 1 + j) = s.z[static_cast<std::size_t>(j)];
    d.X.row(i).tail(d.basis.size()) =
        integrate_against_basis(use->x_curve(static_cast<std::size_t>(i)), d.basis).transpose();
    d.y[i] = s.y.value_or(0.0);
  }
  return d;
}

ConstraintSystem sofr_constraints(const SofrDesign& design, const std::optional<ShapeSpec>& shape,
                                  const ConstraintOptions& options) {
  const auto p = static_cast<int>(design.coef_count());
  if (!shape) return ConstraintSystem::none(p);
  return build_constraints(*shape, design.basis, options)
      .embed(static_cast<int>(design.beta_offset), p);
}

SofrFit fit_sofr(const SofrDesign& design, const Eigen::VectorXd& y,
                 const ConstraintSystem& constraints, const std::optional<ShapeSpec>& shape,
                 double tol) {
  QpProblem qp{design.X, y, constraints, 0.0};
  SofrFit fit;
  fit.solution = solve_clsq(qp, tol);
  fit.basis = design.basis;
  fit.shape = shape;
  fit.coefficients = fit.solution.beta;
  fit.alpha = fit.coefficients[0];
  fit.gamma = fit.coefficients.segment(1, design.beta_offset - 1);
  fit.beta_coefs = fit.coefficients.tail(design.basis.size());
  fit.fitted = design.X * fit.coefficients;
  fit.residuals = y - fit.fitted;
  fit.rss = fit.residuals.squaredNorm();
  fit.certificate = check_constraints(fit.coefficients, constraints, tol);
  if (fit.solution.ridge_bumped) {
    fit.warnings.push_back("design Gram matrix near singular; ridge " +
                           std::to_string(fit.solution.ridge) + " added");
  }
  return fit;
}

SofrFit fit_sofr(const FunctionalDataset& data, const BasisSpec& spec,
                 const std::optional<ShapeSpec>& shape, const SofrOptions& options) {
  if (!data.has_scalar_response()) throw DataError("SOFR needs a scalar response for every subject");
  const auto need = static_cast<std::size_t>(spec.order) + 2 + data.covariate_count();
  if (data.n() < need) {
    throw DataError("SOFR with order " + std::to_string(spec.order) + " needs at least " +
                    std::to_string(need) + " subjects, got " + std::to_string(data.n()));
  }
  std::vector<std::string> warnings;
  const SofrDesign design = build_sofr_design(data, spec, &warnings);
  const ConstraintSystem cons = sofr_constraints(design, shape, options.constraint_options);
  SofrFit fit = fit_sofr(design, design.y, cons, shape, options.tol);
  fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
  return fit;
}

Eigen::VectorXd predict_sofr(const SofrFit& fit, const FunctionalDataset& newdata) {
  if (newdata.covariate_count() != static_cast<std::size_t>(fit.gamma.size())) {
    throw ConfigError("new data has a different number of scalar covariates than the fit");
  }
  if (newdata.domain.lower != fit.basis.domain.lower || newdata.domain.upper != fit.basis.domain.upper) {
    throw ConfigError("new data domain differs from the training domain");
  }
  const SofrDesign d = build_sofr_design(newdata, fit.basis);
  return d.X * fit.coefficients;
}

}  // namespace bernfit
