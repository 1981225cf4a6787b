#include "serialize.hpp"

#include <cmath>
#include <limits>

#include "bernfit/errors.hpp"

namespace bernfit::cli {

json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? std::numeric_limits<double>::max() : -std::numeric_limits<double>::max();
  return v;
}

json numbers(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(number(v[k]));
  return a;
}

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

json to_json(const ShapeSpec& shape) {
  json j;
  j["kind"] = to_string(shape.kind);
  switch (shape.kind) {
    case ShapeKind::kFixedBoundaries:
      j["a0"] = shape.a0 ? number(*shape.a0) : json(nullptr);
      j["a1"] = shape.a1 ? number(*shape.a1) : json(nullptr);
      break;
    case ShapeKind::kBivariateMonotone:
    case ShapeKind::kPartialConvex:
      j["in_s"] = shape.in_s;
      j["in_t"] = shape.in_t;
      break;
    case ShapeKind::kQuantileMonotone:
      j["predictors"] = shape.predictors;
      break;
    case ShapeKind::kCombination: {
      json parts = json::array();
      for (const auto& p : shape.parts) parts.push_back(to_json(p));
      j["parts"] = parts;
      break;
    }
    default:
      break;
  }
  return j;
}

ShapeSpec shape_from_json(const json& j) {
  if (j.is_string()) return ShapeSpec::of(shape_kind_from_string(j.get<std::string>()));
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("shape must be a name or an object with 'kind'");
  ShapeSpec s;
  s.kind = shape_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("a0") && !j["a0"].is_null()) s.a0 = j["a0"].get<double>();
  if (j.contains("a1") && !j["a1"].is_null()) s.a1 = j["a1"].get<double>();
  if (j.contains("in_s")) s.in_s = j["in_s"].get<bool>();
  if (j.contains("in_t")) s.in_t = j["in_t"].get<bool>();
  if (j.contains("predictors")) s.predictors = j["predictors"].get<int>();
  if (j.contains("parts")) {
    for (const auto& p : j["parts"]) s.parts.push_back(shape_from_json(p));
  }
  s.validate();
  return s;
}

json to_json(const ShapeReport& report) {
  json j;
  j["feasible"] = report.feasible;
  j["worst_violation"] = number(report.worst_violation);
  j["violated_rows"] = report.violated_rows;
  return j;
}

json to_json(const QpSolution& s) {
  json j;
  j["objective"] = number(s.objective);
  j["kkt_residual"] = number(s.kkt_residual);
  j["iterations"] = s.iterations;
  j["active_set"] = s.active_set;
  j["multipliers"] = numbers(s.multipliers);
  j["ridge"] = number(s.ridge);
  j["ridge_bumped"] = s.ridge_bumped;
  return j;
}

json to_json(const CovarianceModel& cov) {
  json j;
  j["identity"] = cov.identity;
  j["pve"] = number(cov.pve);
  j["components"] = cov.components();
  j["eigenvalues"] = numbers(cov.eigenvalues);
  j["nugget"] = number(cov.nugget);
  j["noise_floor"] = number(cov.noise_floor);
  return j;
}

json to_json(const SofrFit& fit, const std::vector<double>& grid) {
  json j;
  j["model"] = "sofr";
  j["order"] = fit.basis.order;
  j["domain"] = {number(fit.basis.domain.lower), number(fit.basis.domain.upper)};
  j["shape"] = fit.shape ? to_json(*fit.shape) : json(nullptr);
  j["alpha"] = number(fit.alpha);
  j["gamma"] = numbers(fit.gamma);
  j["beta_coefs"] = numbers(fit.beta_coefs);
  j["coefficients"] = numbers(fit.coefficients);
  std::vector<double> values;
  for (double t : grid) values.push_back(fit.beta(t));
  j["beta"] = {{"t", numbers(grid)}, {"value", numbers(values)}};
  j["rss"] = number(fit.rss);
  j["certificate"] = to_json(fit.certificate);
  j["solver"] = to_json(fit.solution);
  j["warnings"] = fit.warnings;
  return j;
}

json to_json(const FunctionalFit& fit, const std::vector<double>& grid,
             const std::vector<double>& surface_grid) {
  json j;
  j["model"] = to_string(fit.spec.kind);
  j["order"] = fit.spec.order;
  j["intercept_order"] = fit.spec.intercept_order;
  j["shape_term"] = fit.spec.shape_term;
  j["domain"] = {number(fit.domain.lower), number(fit.domain.upper)};
  j["shape"] = fit.shape ? to_json(*fit.shape) : json(nullptr);
  j["coefficients"] = numbers(fit.coefficients);
  json blocks = json::array();
  for (std::size_t b = 0; b < fit.blocks.size(); ++b) {
    json blk;
    blk["index"] = b;
    blk["bivariate"] = static_cast<bool>(fit.block_bivariate[b]);
    blk["coefs"] = numbers(fit.blocks[b]);
    if (fit.block_bivariate[b]) {
      json rows = json::array();
      for (double s : surface_grid) {
        std::vector<double> row;
        for (double t : surface_grid) row.push_back(fit.eval(b, s, t));
        rows.push_back(numbers(row));
      }
      blk["surface"] = {{"s", numbers(surface_grid)}, {"t", numbers(surface_grid)}, {"value", rows}};
    } else {
      std::vector<double> values;
      for (double t : grid) values.push_back(fit.eval(b, t));
      blk["curve"] = {{"t", numbers(grid)}, {"value", numbers(values)}};
    }
    blocks.push_back(blk);
  }
  j["blocks"] = blocks;
  j["rss_raw"] = number(fit.rss_raw);
  j["rss_whitened"] = number(fit.rss_whitened);
  j["covariance"] = fit.covariance ? to_json(*fit.covariance) : json(nullptr);
  j["certificate"] = to_json(fit.certificate);
  j["solver"] = to_json(fit.solution);
  j["warnings"] = fit.warnings;
  return j;
}

json to_json(const CiBand& band) {
  json j;
  j["level"] = number(band.level);
  j["draws"] = band.draws;
  j["seed"] = band.seed;
  j["block"] = band.block;
  j["grid"] = numbers(band.grid);
  if (!band.grid_s.empty()) j["grid_s"] = numbers(band.grid_s);
  j["estimate"] = numbers(band.estimate);
  j["lower"] = numbers(band.lower);
  j["upper"] = numbers(band.upper);
  j["average_width"] = number(band.average_width());
  j["warnings"] = band.warnings;
  return j;
}

json to_json(const TestReport& r) {
  json j;
  j["statistic"] = number(r.statistic);
  j["p_value"] = number(r.p_value);
  j["rss_constrained"] = number(r.rss_constrained);
  j["rss_unconstrained"] = number(r.rss_unconstrained);
  j["draws"] = r.draws;
  j["seed"] = r.seed;
  j["bootstrap_stats"] = numbers(r.bootstrap_stats);
  std::vector<std::string> warnings = r.warnings;
  if (std::isinf(r.statistic)) warnings.emplace_back("statistic is infinite; written as the largest double");
  j["warnings"] = warnings;
  return j;
}

json to_json(const CvResult& cv) {
  json j;
  j["candidate_orders"] = cv.candidate_orders;
  j["scores"] = numbers(cv.scores);
  j["chosen"] = cv.chosen;
  j["folds"] = cv.folds;
  j["fold_assignment"] = cv.fold_assignment;
  j["seed"] = cv.seed;
  j["notices"] = cv.notices;
  return j;
}

json to_json(const MetricTable& t) {
  json j;
  j["scenario"] = to_string(t.scenario.kind);
  j["n"] = t.scenario.n;
  j["m"] = t.scenario.grid_size();
  j["replications"] = t.scenario.replications;
  j["seed"] = t.scenario.seed;
  j["failures"] = t.failures;
  j["orders"] = t.orders;
  j["orders_unconstrained"] = t.orders_unconstrained;
  if (!t.imse_constrained.empty()) {
    j["imse_constrained"] = numbers(t.imse_constrained);
    j["imse_unconstrained"] = numbers(t.imse_unconstrained);
    j["mean_constrained"] = number(t.mean_constrained());
    j["sd_constrained"] = number(t.sd_constrained());
    j["mean_unconstrained"] = number(t.mean_unconstrained());
    j["sd_unconstrained"] = number(t.sd_unconstrained());
    j["p_value_two_sample"] = number(t.unpaired_p_value());
    j["p_value_paired"] = number(t.paired_p_value());
  }
  if (!t.coverage.empty()) {
    j["grid"] = numbers(t.grid);
    j["coverage"] = numbers(t.coverage);
    j["average_coverage"] = number(t.average_coverage());
    j["average_width"] = number(t.average_width());
  }
  if (!t.rejections.empty()) {
    j["rejections"] = t.rejections;
    j["rejection_rate"] = number(t.rejection_rate());
  }
  return j;
}

json to_json(const QfosrFit& fit, const std::vector<double>& grid) {
  json j = to_json(fit.fit, grid, {});
  j["model"] = "qfosr";
  json rescale = json::array();
  for (const auto& r : fit.rescale) {
    rescale.push_back({{"name", r.name}, {"min", number(r.min)}, {"max", number(r.max)}});
  }
  j["rescale"] = rescale;
  j["quantile_certificate"] = to_json(fit.certificate);
  json bands = json::array();
  for (const auto& b : fit.bands) bands.push_back(to_json(b));
  j["bands"] = bands;
  j["warnings"] = fit.warnings;
  return j;
}

}  // namespace bernfit::cli
