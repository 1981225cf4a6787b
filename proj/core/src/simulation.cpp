#include "bernfit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "bernfit/errors.hpp"
#include "bernfit/inference.hpp"
#include "bernfit/model_selection.hpp"
#include "bernfit/parallel.hpp"
#include "bernfit/rng.hpp"
#include "bernfit/sofr.hpp"
#include "bernfit/stats.hpp"

namespace bernfit {

namespace {

constexpr double kPi = std::numbers::pi;

const std::map<ScenarioKind, std::string>& scenario_names() {
  static const std::map<ScenarioKind, std::string> names{{ScenarioKind::kA, "A"},
                                                         {ScenarioKind::kB, "B"},
                                                         {ScenarioKind::kBSparse, "B_sparse"},
                                                         {ScenarioKind::kC, "C"},
                                                         {ScenarioKind::kS1, "S1"}};
  return names;
}

std::uint64_t key(ScenarioKind k) { return static_cast<std::uint64_t>(k) + 1; }

struct Replicate {
  bool ok = false;
  std::string failure;
  double imse_c = 0.0;
  double imse_u = 0.0;
  int order = 0;
  int order_u = 0;
  std::vector<double> covered;
  double width = 0.0;
  int rejected = 0;
};

}  // namespace

std::string to_string(ScenarioKind kind) { return scenario_names().at(kind); }

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (const auto& [kind, text] : scenario_names()) {
    if (text == name) return kind;
  }
  throw ConfigError("unknown scenario '" + name + "' (expected A, B, B_sparse, C or S1)");
}

int ScenarioSpec::grid_size() const {
  if (m > 0) return m;
  return kind == ScenarioKind::kA ? 50 : 40;
}

void ScenarioSpec::validate() const {
  if (n < 10) throw ConfigError("scenario sample size must be at least 10");
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (m != 0 && m < 10) throw ConfigError("scenario grid needs at least 10 points");
}

Eigen::MatrixXd scenario_polynomials(const std::vector<double>& grid, int count) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  if (count < 1 || count > m) throw ConfigError("polynomial count must lie in [1, grid size]");
  Eigen::MatrixXd phi(m, count);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double x = 2.0 * grid[static_cast<std::size_t>(j)] - 1.0;
    double p0 = 1.0;
    double p1 = x;
    for (int k = 0; k < count; ++k) {
      double v;
      if (k == 0) {
        v = p0;
      } else if (k == 1) {
        v = p1;
      } else {
        v = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = v;
      }
      phi(j, k) = v * std::sqrt(2.0 * k + 1.0);
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (int k = 0; k < count; ++k) {
      for (int l = 0; l < k; ++l) phi.col(k) -= phi.col(k).dot(phi.col(l)) * phi.col(l);
      phi.col(k).normalize();
    }
  }
  return phi;
}

ModelKind scenario_model(ScenarioKind kind) {
  return kind == ScenarioKind::kA ? ModelKind::kSofr : ModelKind::kFlcm;
}

ShapeSpec scenario_shape(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kA:
      return ShapeSpec::of(ShapeKind::kNonNegative);
    case ScenarioKind::kC:
      return ShapeSpec::combination(
          {ShapeSpec::of(ShapeKind::kNonDecreasing), ShapeSpec::of(ShapeKind::kConcave)});
    default:
      return ShapeSpec::of(ShapeKind::kNonIncreasing);
  }
}

int scenario_default_order(ScenarioKind kind) { return kind == ScenarioKind::kA ? 4 : 5; }

ScenarioData generate_scenario(const ScenarioSpec& spec, int replication) {
  spec.validate();
  const int m = spec.grid_size();
  const Domain domain{0.0, 1.0};
  const Grid grid = Grid::equispaced(static_cast<std::size_t>(m), domain);
  const bool scalar = spec.kind == ScenarioKind::kA;
  const int terms = scalar ? 20 : 5;
  const Eigen::MatrixXd phi = scenario_polynomials(grid.points, terms);

  ScenarioData out;
  switch (spec.kind) {
    case ScenarioKind::kA:
      out.alpha = 0.15;
      out.beta = [](double t) { return 0.1 * std::sin(kPi * t); };
      out.beta0 = [](double) { return 0.15; };
      break;
    case ScenarioKind::kB:
    case ScenarioKind::kBSparse:
      out.beta0 = [](double t) { return 8.0 * std::sin(kPi * t); };
      out.beta = [](double t) { return 5.0 * std::cos(kPi * t); };
      break;
    case ScenarioKind::kC:
      out.beta0 = [](double t) { return 3.0 * std::cos(kPi * t); };
      out.beta = [](double t) { return 5.0 * std::sin(kPi / 2.0 * t); };
      break;
    case ScenarioKind::kS1:
      out.beta0 = [](double t) { return 8.0 * std::sin(kPi * t); };
      out.beta = [](double) { return 2.5; };
      break;
  }

  FunctionalDataset& data = out.data;
  data.domain = domain;
  data.x_grid = grid;
  data.y_grid = grid;
  const Eigen::VectorXd w = trapezoid_weights(grid.points);
  const auto rep = static_cast<std::uint64_t>(replication);
  for (int i = 0; i < spec.n; ++i) {
    const auto subj = static_cast<std::uint64_t>(i);
    Rng cov_rng({spec.seed, key(spec.kind), rep, subj, static_cast<std::uint64_t>(StreamRole::kCovariate)});
    Rng noise_rng({spec.seed, key(spec.kind), rep, subj, static_cast<std::uint64_t>(StreamRole::kNoise)});
    Eigen::VectorXd psi(terms);
    for (int k = 0; k < terms; ++k) psi[k] = cov_rng.normal(0.0, std::sqrt(static_cast<double>(terms - k)));
    const Eigen::VectorXd x = phi * psi;

    Subject s;
    s.id = "s" + std::to_string(i + 1);
    if (scalar) {
      double integral = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) integral += w[j] * x[j] * out.beta(grid.points[static_cast<std::size_t>(j)]);
      s.y = out.alpha + integral + noise_rng.normal(0.0, 0.05);
      s.x.assign(x.data(), x.data() + m);
    } else {
      const double xi1 = noise_rng.normal(0.0, 0.5);
      const double xi2 = noise_rng.normal(0.0, 0.75);
      std::vector<double> y(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) {
        const double t = grid.points[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(j)] = out.beta0(t) + x[j] * out.beta(t) + xi1 * std::cos(t) +
                                         xi2 * std::sin(t) + noise_rng.normal(0.0, 0.5);
      }
      if (spec.kind == ScenarioKind::kBSparse) {
        Rng pat({spec.seed, key(spec.kind), rep, subj, static_cast<std::uint64_t>(StreamRole::kSparsePattern)});
        const auto mi = static_cast<std::size_t>(pat.uniform_int(5, 10));
        std::vector<std::size_t> idx(static_cast<std::size_t>(m));
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
        for (std::size_t j = 0; j < mi; ++j) {
          const auto r = static_cast<std::size_t>(pat.uniform_int(static_cast<std::int64_t>(j), m - 1));
          std::swap(idx[j], idx[r]);
        }
        idx.resize(mi);
        std::sort(idx.begin(), idx.end());
        for (std::size_t j : idx) {
          s.x.push_back(x[static_cast<Eigen::Index>(j)]);
          s.y_curve.push_back(y[j]);
        }
        s.x_idx = idx;
        s.y_idx = idx;
      } else {
        s.x.assign(x.data(), x.data() + m);
        s.y_curve = std::move(y);
      }
    }
    data.subjects.push_back(std::move(s));
  }
  data.sync_grid_patterns();
  data.validate();
  return out;
}

double imse(const CoefFunction& beta_hat, const CoefFunction& beta_true, const Domain& domain,
            int points) {
  if (points < 2) throw ConfigError("IMSE needs at least two points");
  const Grid g = Grid::equispaced(static_cast<std::size_t>(points), domain);
  const Eigen::VectorXd w = trapezoid_weights(g.points);
  double total = 0.0;
  for (std::size_t j = 0; j < g.points.size(); ++j) {
    const double d = beta_hat(g.points[j]) - beta_true(g.points[j]);
    total += w[static_cast<Eigen::Index>(j)] * d * d;
  }
  return total;
}

double MetricTable::mean_constrained() const { return mean(imse_constrained); }
double MetricTable::mean_unconstrained() const { return mean(imse_unconstrained); }
double MetricTable::sd_constrained() const { return stddev(imse_constrained); }
double MetricTable::sd_unconstrained() const { return stddev(imse_unconstrained); }
double MetricTable::paired_p_value() const {
  return paired_t_pvalue(imse_constrained, imse_unconstrained);
}
double MetricTable::unpaired_p_value() const {
  return welch_t_pvalue(imse_constrained, imse_unconstrained);
}
double MetricTable::average_coverage() const { return mean(coverage); }
double MetricTable::average_width() const { return mean(widths); }
double MetricTable::rejection_rate() const {
  if (rejections.empty()) return 0.0;
  double s = 0.0;
  for (int r : rejections) s += r;
  return s / static_cast<double>(rejections.size());
}

MetricTable run_benchmark(const ScenarioSpec& spec, const BenchmarkOptions& options) {
  spec.validate();
  MetricTable table;
  table.scenario = spec;
  const ModelKind model = scenario_model(spec.kind);
  const ShapeSpec shape = options.shape.value_or(scenario_shape(spec.kind));
  const ShapeSpec test_shape = options.test_shape.value_or(scenario_shape(spec.kind));
  const auto reps = static_cast<std::size_t>(spec.replications);
  std::vector<Replicate> results(reps);

  parallel_for(reps, resolve_threads(options.threads), [&](std::size_t r) {
    Replicate& out = results[r];
    try {
      const ScenarioData sd = generate_scenario(spec, static_cast<int>(r));
      const auto rep = static_cast<std::uint64_t>(r);
      FunctionalSpec fspec;
      fspec.kind = model;
      int order = options.order;
      int order_u = options.order;
      if (order <= 0) {
        CvOptions cv;
        cv.folds = options.cv_folds;
        cv.seed = stream_seed({spec.seed, rep, static_cast<std::uint64_t>(StreamRole::kFolds)});
        order = cv_select_order(sd.data, fspec, shape, options.cv_candidates, cv).chosen;
        if (options.estimate) {
          order_u = cv_select_order(sd.data, fspec, std::nullopt, options.cv_candidates, cv).chosen;
        }
      }
      out.order = order;
      out.order_u = order_u;
      fspec.order = order;
      fspec.intercept_order = order;
      FunctionalSpec uspec = fspec;
      uspec.order = order_u;
      uspec.intercept_order = order_u;

      if (options.estimate) {
        if (model == ModelKind::kSofr) {
          const BasisSpec basis{order, sd.data.domain};
          const SofrFit c = fit_sofr(sd.data, basis, shape);
          const SofrFit u = fit_sofr(sd.data, BasisSpec{order_u, sd.data.domain}, std::nullopt);
          out.imse_c = imse([&](double t) { return c.beta(t); }, sd.beta);
          out.imse_u = imse([&](double t) { return u.beta(t); }, sd.beta);
        } else {
          FunctionalOptions fo;
          fo.pve = options.pve;
          fo.whiten = options.whiten;
          const FunctionalFit c = fit_constrained_gls(sd.data, fspec, shape, fo);
          const FunctionalFit u = fit_unconstrained_ols(sd.data, uspec);
          out.imse_c = imse([&](double t) { return c.eval(1, t); }, sd.beta);
          out.imse_u = imse([&](double t) { return u.eval(1, t); }, sd.beta);
        }
      }
      if (options.coverage) {
        CiOptions ci;
        ci.draws = options.ci_draws;
        ci.level = options.level;
        ci.pve = options.pve;
        ci.whiten = options.whiten;
        ci.seed = stream_seed({spec.seed, rep, static_cast<std::uint64_t>(StreamRole::kProjectionDraw)});
        const CiBand band = projection_ci(sd.data, fspec, shape, ci);
        out.covered.resize(band.grid.size());
        for (std::size_t j = 0; j < band.grid.size(); ++j) {
          const double truth = sd.beta(band.grid[j]);
          const auto jj = static_cast<Eigen::Index>(j);
          out.covered[j] = band.lower[jj] <= truth && truth <= band.upper[jj] ? 1.0 : 0.0;
        }
        out.width = band.average_width();
      }
      if (options.test) {
        TestOptions to;
        to.draws = options.test_draws;
        to.seed = stream_seed({spec.seed, rep, static_cast<std::uint64_t>(StreamRole::kBootstrap)});
        const TestReport rep_report =
            model == ModelKind::kSofr
                ? bootstrap_shape_test_scalar(sd.data, BasisSpec{order, sd.data.domain}, test_shape, to)
                : bootstrap_shape_test_functional(sd.data, fspec, test_shape, to);
        out.rejected = rep_report.rejects(options.alpha) ? 1 : 0;
      }
      out.ok = true;
    } catch (const Error& e) {
      out.failure = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  std::vector<double> coverage_sum;
  std::size_t coverage_count = 0;
  for (const auto& r : results) {
    if (!r.ok) {
      table.failures.push_back(r.failure);
      continue;
    }
    table.orders.push_back(r.order);
    table.orders_unconstrained.push_back(r.order_u);
    if (options.estimate) {
      table.imse_constrained.push_back(r.imse_c);
      table.imse_unconstrained.push_back(r.imse_u);
    }
    if (options.coverage) {
      if (coverage_sum.empty()) coverage_sum.assign(r.covered.size(), 0.0);
      for (std::size_t j = 0; j < r.covered.size(); ++j) coverage_sum[j] += r.covered[j];
      table.widths.push_back(r.width);
      ++coverage_count;
    }
    if (options.test) table.rejections.push_back(r.rejected);
  }
  if (coverage_count > 0) {
    table.grid = Grid::equispaced(static_cast<std::size_t>(spec.grid_size())).points;
    for (double& c : coverage_sum) c /= static_cast<double>(coverage_count);
    table.coverage = std::move(coverage_sum);
  }
  return table;
}

}  // namespace bernfit
