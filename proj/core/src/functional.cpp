#include "bernfit/functional.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

const std::map<ModelKind, std::string>& model_names() {
  static const std::map<ModelKind, std::string> names{
      {ModelKind::kSofr, "sofr"}, {ModelKind::kFosr, "fosr"}, {ModelKind::kFlcm, "flcm"},
      {ModelKind::kFofr, "fofr"}, {ModelKind::kQfosr, "qfosr"}};
  return names;
}

// Covariate values at the subject's observed response points (concurrent model).
Eigen::VectorXd concurrent_covariate(const FunctionalDataset& data, std::size_t i,
                                     const std::vector<std::size_t>& y_obs) {
  const auto& s = data.subjects[i];
  if (!s.has_x()) throw DataError("subject " + s.id + " has no functional covariate");
  if (data.x_grid.points != data.y_grid.points) {
    throw DataError("concurrent model needs the covariate and response on the same grid");
  }
  const auto x_obs = data.x_indices(i);
  std::map<std::size_t, double> lookup;
  for (std::size_t r = 0; r < x_obs.size(); ++r) lookup[x_obs[r]] = s.x[r];
  Eigen::VectorXd out(static_cast<Eigen::Index>(y_obs.size()));
  for (std::size_t r = 0; r < y_obs.size(); ++r) {
    const auto it = lookup.find(y_obs[r]);
    if (it == lookup.end()) {
      throw DataError("subject " + s.id + ": covariate missing at an observed response point");
    }
    out[static_cast<Eigen::Index>(r)] = it->second;
  }
  return out;
}

}  // namespace

std::string to_string(ModelKind kind) { return model_names().at(kind); }

ModelKind model_kind_from_string(const std::string& name) {
  for (const auto& [kind, text] : model_names()) {
    if (text == name) return kind;
  }
  throw ConfigError("unknown model kind '" + name + "'");
}

bool FunctionalDesign::dense() const {
  for (const auto& o : obs) {
    if (o.size() != grid.size()) return false;
  }
  return true;
}

FunctionalDesign build_functional_design(const FunctionalDataset& data, const FunctionalSpec& spec,
                                         std::vector<std::string>* warnings) {
  if (spec.kind == ModelKind::kSofr) throw ConfigError("sofr is a scalar-response model");
  if (!data.has_functional_response()) {
    throw DataError("functional-response model needs a response curve for every subject");
  }
  if (spec.intercept_order < 0 || spec.order < 0) throw ConfigError("Bernstein orders must be >= 0");
  FunctionalDataset completed;
  const FunctionalDataset* use = &data;
  if (spec.kind == ModelKind::kFofr && data.sparse_x()) {
    completed = reconstruct_sparse(data, {}, warnings);
    use = &completed;
  }
  FunctionalDesign d;
  d.spec = spec;
  d.domain = use->domain;
  d.grid = use->y_grid.points;
  const BasisSpec b0{spec.intercept_order, use->domain};
  const BasisSpec b1{spec.order, use->domain};
  TensorBasisSpec tensor{spec.order, spec.order, use->domain, use->domain};

  d.block_offset.push_back(0);
  d.block_size.push_back(b0.size());
  d.block_bivariate.push_back(false);
  auto add_block = [&](Eigen::Index size, bool biv) {
    d.block_offset.push_back(d.block_offset.back() + d.block_size.back());
    d.block_size.push_back(size);
    d.block_bivariate.push_back(biv);
  };
  switch (spec.kind) {
    case ModelKind::kFosr:
    case ModelKind::kQfosr:
      if (use->covariate_count() == 0) throw DataError("FOSR needs at least one scalar covariate");
      for (std::size_t j = 0; j < use->covariate_count(); ++j) add_block(b1.size(), false);
      break;
    case ModelKind::kFlcm:
      add_block(b1.size(), false);
      break;
    case ModelKind::kFofr:
      tensor.validate();
      add_block(tensor.size(), true);
      break;
    default:
      break;
  }
  d.coef_count = d.block_offset.back() + d.block_size.back();
  if (spec.shape_term < 0 || spec.shape_term >= static_cast<int>(d.block_size.size())) {
    throw ConfigError("shape_term " + std::to_string(spec.shape_term) + " has no coefficient block");
  }

  const Eigen::MatrixXd b0_full = eval_basis_matrix(use->y_grid, b0);
  const Eigen::MatrixXd b1_full = eval_basis_matrix(use->y_grid, b1);
  for (std::size_t i = 0; i < use->n(); ++i) {
    const auto& s = use->subjects[i];
    const auto obs = use->y_indices(i);
    const auto mi = static_cast<Eigen::Index>(obs.size());
    Eigen::MatrixXd rows0(mi, b0.size());
    Eigen::MatrixXd rows1(mi, b1.size());
    std::vector<double> times(obs.size());
    for (Eigen::Index r = 0; r < mi; ++r) {
      const auto j = static_cast<Eigen::Index>(obs[static_cast<std::size_t>(r)]);
      rows0.row(r) = b0_full.row(j);
      rows1.row(r) = b1_full.row(j);
      times[static_cast<std::size_t>(r)] = use->y_grid.points[static_cast<std::size_t>(j)];
    }
    Eigen::MatrixXd z(mi, d.coef_count);
    z.leftCols(b0.size()) = rows0;
    switch (spec.kind) {
      case ModelKind::kFosr:
      case ModelKind::kQfosr:
        for (std::size_t j = 0; j < use->covariate_count(); ++j) {
          z.middleCols(d.block_offset[j + 1], b1.size()) = s.z[j] * rows1;
        }
        break;
      case ModelKind::kFlcm: {
        const Eigen::VectorXd x = concurrent_covariate(*use, i, obs);
        z.middleCols(d.block_offset[1], b1.size()) =
            flcm_design(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), rows1);
        break;
      }
      case ModelKind::kFofr:
        if (!s.has_x()) throw DataError("subject " + s.id + " has no functional covariate");
        z.middleCols(d.block_offset[1], tensor.size()) = fofr_design(use->x_curve(i), tensor, times);
        break;
      default:
        break;
    }
    d.Z.push_back(std::move(z));
    d.Y.push_back(Eigen::Map<const Eigen::VectorXd>(s.y_curve.data(), mi));
    d.obs.push_back(obs);
  }
  return d;
}

ConstraintSystem functional_constraints(const FunctionalDesign& design,
                                        const std::optional<ShapeSpec>& shape,
                                        const ConstraintOptions& options) {
  const auto p = static_cast<int>(design.coef_count);
  if (!shape) return ConstraintSystem::none(p);
  if (shape->kind == ShapeKind::kQuantileMonotone) {
    const int j = static_cast<int>(design.block_size.size()) - 1;
    if (design.spec.kind != ModelKind::kQfosr && design.spec.kind != ModelKind::kFosr) {
      throw ConfigError("QuantileMonotone applies to quantile function-on-scalar models only");
    }
    if (shape->predictors != j) {
      throw ConfigError("QuantileMonotone declares J = " + std::to_string(shape->predictors) +
                        " but the model has " + std::to_string(j) + " predictors");
    }
    if (design.spec.intercept_order != design.spec.order) {
      throw ConfigError("QuantileMonotone needs a common order across all blocks");
    }
    return build_constraints(*shape, BasisSpec{design.spec.order, design.domain}, options);
  }
  const auto term = static_cast<std::size_t>(design.spec.shape_term);
  const bool biv = design.block_bivariate[term];
  if (shape->is_bivariate() && !biv) {
    throw ConfigError(to_string(shape->kind) + " requires a bivariate (function-on-function) coefficient");
  }
  ConstraintSystem block;
  if (biv) {
    block = build_constraints(*shape,
                              TensorBasisSpec{design.spec.order, design.spec.order, design.domain,
                                              design.domain},
                              options);
  } else {
    const int order = term == 0 ? design.spec.intercept_order : design.spec.order;
    block = build_constraints(*shape, BasisSpec{order, design.domain}, options);
  }
  return block.embed(static_cast<int>(design.block_offset[term]), p);
}

FunctionalSolver::FunctionalSolver(const FunctionalDesign& design, const CovarianceModel* covariance)
    : design_(&design) {
  const bool whiten = covariance != nullptr && !covariance->identity;
  const Eigen::Index p = design.coef_count;
  gram_ = Eigen::MatrixXd::Zero(p, p);
  std::map<std::vector<std::size_t>, Eigen::MatrixXd> cache;
  zw_.reserve(design.n());
  for (std::size_t i = 0; i < design.n(); ++i) {
    if (whiten) {
      auto it = cache.find(design.obs[i]);
      if (it == cache.end()) {
        it = cache.emplace(design.obs[i], covariance->inverse_sqrt(design.obs[i])).first;
      }
      wh_.push_back(it->second);
      zw_.push_back(it->second * design.Z[i]);
    } else {
      zw_.push_back(design.Z[i]);
    }
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(zw_.back().transpose());
  }
  gram_ = gram_.selfadjointView<Eigen::Lower>();
}

std::vector<Eigen::VectorXd> FunctionalSolver::whiten_responses(
    const std::vector<Eigen::VectorXd>& y) const {
  if (wh_.empty()) return y;
  std::vector<Eigen::VectorXd> out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.push_back(wh_[i] * y[i]);
  return out;
}

QpSolution FunctionalSolver::solve(const std::vector<Eigen::VectorXd>& responses,
                                   const ConstraintSystem& constraints, double tol) const {
  if (responses.size() != design_->n()) throw ConfigError("response count differs from design");
  QpGramProblem qp;
  qp.gram = gram_;
  qp.zty = Eigen::VectorXd::Zero(design_->coef_count);
  qp.yty = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const Eigen::VectorXd yi = wh_.empty() ? responses[i] : Eigen::VectorXd(wh_[i] * responses[i]);
    qp.zty.noalias() += zw_[i].transpose() * yi;
    qp.yty += yi.squaredNorm();
  }
  qp.constraints = constraints;
  return solve_clsq(qp, tol);
}

double FunctionalFit::eval(std::size_t block, double t) const {
  if (block_bivariate.at(block)) throw ConfigError("block is bivariate; pass (s, t)");
  return eval_bernstein(blocks.at(block), domain.to_unit(t));
}

double FunctionalFit::eval(std::size_t block, double s, double t) const {
  if (!block_bivariate.at(block)) throw ConfigError("block is univariate; pass t only");
  return eval_bernstein_2d(blocks.at(block), spec.order, domain.to_unit(s), domain.to_unit(t));
}

FunctionalFit fit_functional(const FunctionalDesign& design,
                             const std::vector<Eigen::VectorXd>& responses,
                             const ConstraintSystem& constraints,
                             const std::optional<ShapeSpec>& shape,
                             const CovarianceModel* covariance, double tol) {
  const FunctionalSolver solver(design, covariance);
  FunctionalFit fit;
  fit.spec = design.spec;
  fit.domain = design.domain;
  fit.shape = shape;
  fit.solution = solver.solve(responses, constraints, tol);
  fit.coefficients = fit.solution.beta;
  fit.block_bivariate = design.block_bivariate;
  for (std::size_t b = 0; b < design.block_size.size(); ++b) {
    fit.blocks.push_back(fit.coefficients.segment(design.block_offset[b], design.block_size[b]));
  }
  if (covariance != nullptr) fit.covariance = *covariance;
  fit.residual_matrix = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(design.n()),
                                                  static_cast<Eigen::Index>(design.grid.size()),
                                                  std::numeric_limits<double>::quiet_NaN());
  const auto& zw = solver.whitened_design();
  const auto yw = solver.whiten_responses(responses);
  for (std::size_t i = 0; i < design.n(); ++i) {
    const Eigen::VectorXd e = responses[i] - design.Z[i] * fit.coefficients;
    fit.rss_raw += e.squaredNorm();
    fit.rss_whitened += (yw[i] - zw[i] * fit.coefficients).squaredNorm();
    for (std::size_t r = 0; r < design.obs[i].size(); ++r) {
      fit.residual_matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(design.obs[i][r])) =
          e[static_cast<Eigen::Index>(r)];
    }
  }
  fit.certificate = check_constraints(fit.coefficients, constraints, tol);
  if (fit.solution.ridge_bumped) {
    fit.warnings.push_back("design Gram matrix near singular; ridge " +
                           std::to_string(fit.solution.ridge) + " added");
  }
  return fit;
}

FunctionalFit fit_unconstrained_ols(const FunctionalDataset& data, const FunctionalSpec& spec,
                                    const FunctionalOptions& options) {
  std::vector<std::string> warnings;
  const FunctionalDesign design = build_functional_design(data, spec, &warnings);
  FunctionalFit fit = fit_functional(design, design.Y, ConstraintSystem::none(static_cast<int>(design.coef_count)),
                                     std::nullopt, nullptr, options.tol);
  fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
  return fit;
}

FunctionalFit fit_constrained_gls(const FunctionalDataset& data, const FunctionalSpec& spec,
                                  const std::optional<ShapeSpec>& shape,
                                  const FunctionalOptions& options) {
  std::vector<std::string> warnings;
  const FunctionalDesign design = build_functional_design(data, spec, &warnings);
  const ConstraintSystem cons = functional_constraints(design, shape, options.constraint_options);
  if (!options.whiten) {
    FunctionalFit fit = fit_functional(design, design.Y, cons, shape, nullptr, options.tol);
    fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
    return fit;
  }
  const FunctionalFit step1 =
      fit_functional(design, design.Y, ConstraintSystem::none(static_cast<int>(design.coef_count)),
                     std::nullopt, nullptr, options.tol);
  CovarianceOptions copt = options.covariance;
  copt.pve = options.pve;
  const CovarianceModel cov = estimate_covariance(step1.residual_matrix, design.grid, copt, &warnings);
  FunctionalFit fit = fit_functional(design, design.Y, cons, shape, &cov, options.tol);
  fit.warnings.insert(fit.warnings.begin(), warnings.begin(), warnings.end());
  return fit;
}

FunctionalFit fit_constrained_gls(const FunctionalDataset& data, const FunctionalSpec& spec,
                                  const std::optional<ShapeSpec>& shape,
                                  const CovarianceModel& covariance,
                                  const FunctionalOptions& options) {
  const FunctionalDesign design = build_functional_design(data, spec);
  const ConstraintSystem cons = functional_constraints(design, shape, options.constraint_options);
  return fit_functional(design, design.Y, cons, shape, &covariance, options.tol);
}

std::vector<Eigen::VectorXd> predict_functional(const FunctionalFit& fit,
                                                const FunctionalDataset& data) {
  const FunctionalDesign design = build_functional_design(data, fit.spec);
  if (design.coef_count != fit.coefficients.size()) {
    throw ConfigError("new data produce a design of different width than the fit");
  }
  std::vector<Eigen::VectorXd> out;
  for (const auto& z : design.Z) out.push_back(z * fit.coefficients);
  return out;
}

}  // namespace bernfit
