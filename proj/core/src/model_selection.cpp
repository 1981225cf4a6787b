#include "bernfit/model_selection.hpp"

#include <algorithm>
#include <numeric>

#include "bernfit/errors.hpp"
#include "bernfit/parallel.hpp"
#include "bernfit/qp.hpp"
#include "bernfit/rng.hpp"
#include "bernfit/sofr.hpp"

namespace bernfit {

namespace {

FunctionalDesign rows_of(const FunctionalDesign& d, const std::vector<std::size_t>& rows) {
  FunctionalDesign out = d;
  out.Z.clear();
  out.Y.clear();
  out.obs.clear();
  for (std::size_t i : rows) {
    out.Z.push_back(d.Z[i]);
    out.Y.push_back(d.Y[i]);
    out.obs.push_back(d.obs[i]);
  }
  return out;
}

double total_sum_of_squares(const FunctionalDataset& data, bool functional) {
  double sum = 0.0;
  double sq = 0.0;
  double count = 0.0;
  for (const auto& s : data.subjects) {
    if (functional) {
      for (double v : s.y_curve) {
        sum += v;
        sq += v * v;
        count += 1.0;
      }
    } else if (s.y) {
      sum += *s.y;
      sq += *s.y * *s.y;
      count += 1.0;
    }
  }
  return count > 0.0 ? sq - sum * sum / count : 0.0;
}

}  // namespace

std::vector<int> default_candidates(ModelKind kind) {
  std::vector<int> out;
  int lo = 2;
  int hi = 10;
  if (kind == ModelKind::kFofr) hi = 6;
  if (kind == ModelKind::kQfosr) {
    lo = 4;
    hi = 9;
  }
  for (int n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs V >= 2");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng({seed, static_cast<std::uint64_t>(StreamRole::kFolds)});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  return fold;
}

CvResult cv_select_order(const FunctionalDataset& data, const FunctionalSpec& spec,
                         const std::optional<ShapeSpec>& shape, std::vector<int> candidates,
                         const CvOptions& options) {
  if (candidates.empty()) candidates = default_candidates(spec.kind);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  CvResult result;
  result.folds = options.folds;
  result.seed = options.seed;
  result.fold_assignment = assign_folds(data.n(), options.folds, options.seed);

  std::vector<int> usable;
  for (int n : candidates) {
    if (n < 0) throw ConfigError("candidate orders must be non-negative");
    if (shape && n < shape->min_order()) {
      result.notices.push_back("order " + std::to_string(n) + " skipped: " + to_string(shape->kind) +
                               " needs N >= " + std::to_string(shape->min_order()));
      continue;
    }
    usable.push_back(n);
  }
  if (usable.empty()) throw ConfigError("no candidate order is compatible with the shape");
  const auto folds = static_cast<std::size_t>(options.folds);
  std::vector<std::vector<std::size_t>> train(folds);
  std::vector<std::vector<std::size_t>> held(folds);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto v = static_cast<std::size_t>(result.fold_assignment[i]);
    held[v].push_back(i);
    for (std::size_t w = 0; w < folds; ++w) {
      if (w != v) train[w].push_back(i);
    }
  }
  const int max_order = usable.back();
  for (const auto& t : train) {
    if (t.size() < static_cast<std::size_t>(max_order + 2)) {
      throw ConfigError("a training fold has " + std::to_string(t.size()) +
                        " subjects; need at least " + std::to_string(max_order + 2));
    }
  }

  const bool scalar = spec.kind == ModelKind::kSofr;
  std::vector<std::string> warnings;
  // Designs are built once per order on all subjects; folds only select rows.
  std::vector<SofrDesign> sofr_designs;
  std::vector<FunctionalDesign> fdesigns;
  std::vector<ConstraintSystem> cons;
  for (int n : usable) {
    if (scalar) {
      sofr_designs.push_back(build_sofr_design(data, BasisSpec{n, data.domain}, &warnings));
      cons.push_back(sofr_constraints(sofr_designs.back(), shape));
    } else {
      FunctionalSpec s = spec;
      s.order = n;
      s.intercept_order = n;
      fdesigns.push_back(build_functional_design(data, s, &warnings));
      cons.push_back(functional_constraints(fdesigns.back(), shape));
    }
  }

  result.fold_scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(usable.size()),
                                             static_cast<Eigen::Index>(folds));
  const std::size_t jobs = usable.size() * folds;
  parallel_for(jobs, resolve_threads(options.threads), [&](std::size_t job) {
    const std::size_t c = job / folds;
    const std::size_t v = job % folds;
    double score = 0.0;
    if (scalar) {
      const SofrDesign& d = sofr_designs[c];
      Eigen::MatrixXd x(static_cast<Eigen::Index>(train[v].size()), d.X.cols());
      Eigen::VectorXd y(x.rows());
      for (std::size_t r = 0; r < train[v].size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = d.X.row(static_cast<Eigen::Index>(train[v][r]));
        y[static_cast<Eigen::Index>(r)] = d.y[static_cast<Eigen::Index>(train[v][r])];
      }
      const Eigen::VectorXd theta = solve_clsq(QpProblem{x, y, cons[c], 0.0}, options.tol).beta;
      for (std::size_t i : held[v]) {
        const double e = d.y[static_cast<Eigen::Index>(i)] - d.X.row(static_cast<Eigen::Index>(i)).dot(theta);
        score += e * e;
      }
    } else {
      const FunctionalDesign& d = fdesigns[c];
      const FunctionalDesign sub = rows_of(d, train[v]);
      const FunctionalSolver solver(sub, nullptr);
      const Eigen::VectorXd theta = solver.solve(sub.Y, cons[c], options.tol).beta;
      for (std::size_t i : held[v]) score += (d.Y[i] - d.Z[i] * theta).squaredNorm();
    }
    result.fold_scores(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(v)) = score;
  });

  result.candidate_orders = usable;
  for (Eigen::Index c = 0; c < result.fold_scores.rows(); ++c) {
    double s = 0.0;
    for (Eigen::Index v = 0; v < result.fold_scores.cols(); ++v) s += result.fold_scores(c, v);
    result.scores.push_back(s);
  }
  const double best = *std::min_element(result.scores.begin(), result.scores.end());
  const double slack = 1e-12 * total_sum_of_squares(data, !scalar);
  for (std::size_t c = 0; c < usable.size(); ++c) {
    if (result.scores[c] <= best + slack) {
      result.chosen = usable[c];
      break;
    }
  }
  result.notices.insert(result.notices.end(), warnings.begin(), warnings.end());
  return result;
}

}  // namespace bernfit
