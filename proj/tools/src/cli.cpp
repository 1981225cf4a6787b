#include "bernfit_cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bernfit/errors.hpp"
#include "bernfit/functional.hpp"
#include "bernfit/inference.hpp"
#include "bernfit/io.hpp"
#include "bernfit/model_selection.hpp"
#include "bernfit/parallel.hpp"
#include "bernfit/qfosr.hpp"
#include "bernfit/simulation.hpp"
#include "bernfit/sofr.hpp"
#include "serialize.hpp"

namespace bernfit::cli {

namespace {

constexpr std::size_t kReportPoints = 200;
constexpr std::size_t kSurfacePoints = 50;

struct RunConfig {
  std::optional<std::string> model;
  int order = 5;
  std::optional<int> intercept_order;
  std::optional<ShapeSpec> shape;
  int shape_term = 1;
  std::optional<ShapeSpec> extra_shape;
  int extra_term = 1;
  double pve = 0.95;
  std::optional<int> draws;
  double level = 0.95;
  int folds = 5;
  std::vector<int> candidates;
  bool whiten = true;
  bool whiten_test = false;
  std::optional<Domain> domain;
  std::optional<double> coefficient_bound;
  int block = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string format = "wide_csv";
  std::optional<std::string> data;
  std::optional<std::string> scalars;
  std::optional<std::string> out;
  // simulate / bench
  std::string scenario = "A";
  int n = 50;
  int m = 0;
  int reps = 200;
  int replication = 0;
  bool coverage = false;
  bool test = false;
  bool cv = false;
};

// Flags as typed on the command line; unset ones leave the config untouched.
struct Flags {
  std::string data, scalars, config, out, format, model, shape, scenario;
  std::uint64_t seed = 0;
  int threads = 0, order = 0, draws = 0, folds = 0, n = 0, m = 0, reps = 0, replication = 0, block = 0;
  double level = 0.0, pve = 0.0;
  std::vector<int> candidates;
  bool no_whiten = false, whiten_test = false, coverage = false, test = false, cv = false;
};

void apply_json(RunConfig& c, const json& j) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key) && !j[key].is_null()) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  if (j.contains("model")) c.model = j["model"].get<std::string>();
  take("order", c.order);
  if (j.contains("intercept_order")) c.intercept_order = j["intercept_order"].get<int>();
  if (j.contains("shape") && !j["shape"].is_null()) c.shape = shape_from_json(j["shape"]);
  take("shape_term", c.shape_term);
  if (j.contains("extra_shape") && !j["extra_shape"].is_null()) c.extra_shape = shape_from_json(j["extra_shape"]);
  take("extra_term", c.extra_term);
  take("pve", c.pve);
  if (j.contains("B")) c.draws = j["B"].get<int>();
  take("level", c.level);
  if (j.contains("V")) c.folds = j["V"].get<int>();
  take("candidates", c.candidates);
  take("whiten", c.whiten);
  take("whiten_test", c.whiten_test);
  if (j.contains("domain")) {
    const auto d = j["domain"].get<std::vector<double>>();
    if (d.size() != 2) throw ConfigError("domain must be [lower, upper]");
    c.domain = Domain{d[0], d[1]};
  }
  if (j.contains("coefficient_bound")) c.coefficient_bound = j["coefficient_bound"].get<double>();
  take("block", c.block);
  take("seed", c.seed);
  take("threads", c.threads);
  take("format", c.format);
  if (j.contains("data")) c.data = j["data"].get<std::string>();
  if (j.contains("scalars")) c.scalars = j["scalars"].get<std::string>();
  take("scenario", c.scenario);
  take("n", c.n);
  take("m", c.m);
  take("reps", c.reps);
  take("replication", c.replication);
  take("coverage", c.coverage);
  take("test", c.test);
  take("cv", c.cv);
}

RunConfig resolve(const Flags& f, const CLI::App& sub) {
  RunConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("cannot open config file " + f.config);
    json j;
    try {
      j = json::parse(in);
      apply_json(c, j);
    } catch (const json::exception& e) {
      throw ConfigError("config " + f.config + ": " + e.what());
    }
  }
  auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--data")) c.data = f.data;
  if (given("--scalars")) c.scalars = f.scalars;
  if (given("--out")) c.out = f.out;
  if (given("--format")) c.format = f.format;
  if (given("--model")) c.model = f.model;
  if (given("--shape")) {
    // "None" asks for the unconstrained fit, overriding any config shape.
    if (f.shape == "None" || f.shape == "none") {
      c.shape.reset();
    } else {
      c.shape = shape_from_json(json(f.shape));
    }
  }
  if (given("--seed")) c.seed = f.seed;
  if (given("--threads")) c.threads = f.threads;
  if (given("--order")) c.order = f.order;
  if (given("--B")) c.draws = f.draws;
  if (given("--V")) c.folds = f.folds;
  if (given("--level")) c.level = f.level;
  if (given("--pve")) c.pve = f.pve;
  if (given("--candidates")) c.candidates = f.candidates;
  if (given("--no-whiten")) c.whiten = false;
  if (given("--whiten-test")) c.whiten_test = true;
  if (given("--block")) c.block = f.block;
  if (given("--scenario")) c.scenario = f.scenario;
  if (given("--n")) c.n = f.n;
  if (given("--m")) c.m = f.m;
  if (given("--reps")) c.reps = f.reps;
  if (given("--replication")) c.replication = f.replication;
  if (given("--coverage")) c.coverage = true;
  if (given("--test")) c.test = true;
  if (given("--cv")) c.cv = true;
  c.threads = resolve_threads(c.threads);
  return c;
}

void check_consistency(const RunConfig& c, ModelKind kind) {
  auto check = [&](const ShapeSpec& s) {
    if (s.is_bivariate() && kind != ModelKind::kFofr) {
      throw ConfigError(to_string(s.kind) + " is a bivariate shape and needs model fofr");
    }
    if (s.kind == ShapeKind::kQuantileMonotone && kind != ModelKind::kQfosr) {
      throw ConfigError("QuantileMonotone is only available for model qfosr");
    }
  };
  if (c.shape) check(*c.shape);
  if (c.extra_shape) check(*c.extra_shape);
  if (!(c.pve > 0.0 && c.pve <= 1.0)) throw ConfigError("pve must lie in (0, 1]");
}

FunctionalDataset load(const RunConfig& c, ModelKind kind) {
  if (!c.data) throw ConfigError("--data is required");
  FunctionalDataset d = read_dataset(*c.data, data_format_from_string(c.format), c.scalars, c.domain);
  if (kind == ModelKind::kFosr || kind == ModelKind::kQfosr) promote_covariate_to_response(d);
  return d;
}

FunctionalSpec model_spec(const RunConfig& c, ModelKind kind) {
  FunctionalSpec s;
  s.kind = kind;
  s.order = c.order;
  s.intercept_order = c.intercept_order.value_or(c.order);
  s.shape_term = c.shape_term;
  return s;
}

ConstraintOptions constraint_options(const RunConfig& c) {
  ConstraintOptions o;
  o.coefficient_bound = c.coefficient_bound;
  return o;
}

std::vector<double> report_grid(const Domain& d, std::size_t points) {
  return Grid::equispaced(points, d).points;
}

// Writes the JSON document to --out (or `out`) and returns the stem used for
// companion CSV files, if any.
std::optional<std::filesystem::path> emit(const RunConfig& c, const json& doc, std::ostream& out) {
  if (!c.out) {
    out << doc.dump(2) << '\n';
    return std::nullopt;
  }
  std::filesystem::path p(*c.out);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw DataError("cannot write " + p.string());
  f << doc.dump(2) << '\n';
  return p.parent_path() / p.stem();
}

std::ofstream companion(const std::filesystem::path& stem, const std::string& suffix) {
  std::ofstream f(stem.string() + suffix);
  if (!f) throw DataError("cannot write " + stem.string() + suffix);
  f << std::setprecision(17);
  return f;
}

void write_band_csv(const CiBand& band, std::ostream& f) {
  const bool surface = !band.grid_s.empty();
  f << (surface ? "s,t" : "t") << ",estimate,lower,upper\n";
  const std::size_t nt = band.grid.size();
  for (Eigen::Index r = 0; r < band.lower.size(); ++r) {
    const auto k = static_cast<std::size_t>(r);
    if (surface) f << band.grid_s[k / nt] << ',';
    f << band.grid[k % nt] << ',' << band.estimate[r] << ',' << band.lower[r] << ',' << band.upper[r] << '\n';
  }
}

json header(const std::string& command, const RunConfig& c) {
  json j;
  j["command"] = command;
  j["seed"] = c.seed;
  return j;
}

int fit_command(const std::string& name, ModelKind kind, const RunConfig& c, std::ostream& out) {
  check_consistency(c, kind);
  const FunctionalDataset data = load(c, kind);
  const auto grid = report_grid(data.domain, kReportPoints);
  json doc = header(name, c);
  if (kind == ModelKind::kSofr) {
    SofrOptions o;
    o.constraint_options = constraint_options(c);
    const SofrFit fit = fit_sofr(data, BasisSpec{c.order, data.domain}, c.shape, o);
    doc["fit"] = to_json(fit, grid);
    if (auto stem = emit(c, doc, out)) {
      auto f = companion(*stem, "_coef.csv");
      f << "t,beta\n";
      for (double t : grid) f << t << ',' << fit.beta(t) << '\n';
    }
    return kOk;
  }
  if (kind == ModelKind::kQfosr) {
    QfosrOptions o;
    o.order = c.order;
    o.extra_shape = c.extra_shape ? c.extra_shape : c.shape;
    o.extra_term = c.extra_shape ? c.extra_term : c.shape_term;
    o.whiten = c.whiten;
    o.pve = c.pve;
    o.ci_draws = c.draws.value_or(0);
    o.level = c.level;
    o.seed = c.seed;
    o.threads = c.threads;
    const QfosrFit fit = fit_qfosr(data, o);
    doc["fit"] = to_json(fit, grid);
    if (auto stem = emit(c, doc, out)) {
      auto f = companion(*stem, "_coef.csv");
      f << "p";
      for (std::size_t b = 0; b < fit.fit.blocks.size(); ++b) f << ",beta" << b;
      f << '\n';
      for (double t : grid) {
        f << t;
        for (std::size_t b = 0; b < fit.fit.blocks.size(); ++b) f << ',' << fit.fit.eval(b, t);
        f << '\n';
      }
      for (std::size_t b = 0; b < fit.bands.size(); ++b) {
        auto bf = companion(*stem, "_band" + std::to_string(b) + ".csv");
        write_band_csv(fit.bands[b], bf);
      }
    }
    return kOk;
  }
  FunctionalOptions o;
  o.pve = c.pve;
  o.whiten = c.whiten;
  o.constraint_options = constraint_options(c);
  const FunctionalFit fit = fit_constrained_gls(data, model_spec(c, kind), c.shape, o);
  doc["fit"] = to_json(fit, grid, report_grid(data.domain, kSurfacePoints));
  if (auto stem = emit(c, doc, out)) {
    auto f = companion(*stem, "_coef.csv");
    f << "t";
    for (std::size_t b = 0; b < fit.blocks.size(); ++b) {
      if (!fit.block_bivariate[b]) f << ",beta" << b;
    }
    f << '\n';
    for (double t : grid) {
      f << t;
      for (std::size_t b = 0; b < fit.blocks.size(); ++b) {
        if (!fit.block_bivariate[b]) f << ',' << fit.eval(b, t);
      }
      f << '\n';
    }
  }
  return kOk;
}

ModelKind required_model(const RunConfig& c) {
  if (!c.model) throw ConfigError("--model is required (sofr, fosr, flcm, fofr or qfosr)");
  return model_kind_from_string(*c.model);
}

int test_command(const RunConfig& c, std::ostream& out) {
  const ModelKind kind = required_model(c);
  check_consistency(c, kind);
  if (!c.shape) throw ConfigError("test-shape needs the null shape (--shape)");
  const FunctionalDataset data = load(c, kind);
  TestOptions o;
  o.draws = c.draws.value_or(200);
  o.seed = c.seed;
  o.threads = c.threads;
  o.whiten = c.whiten_test;
  o.pve = c.pve;
  const TestReport r = kind == ModelKind::kSofr
                           ? bootstrap_shape_test_scalar(data, BasisSpec{c.order, data.domain}, *c.shape, o)
                           : bootstrap_shape_test_functional(data, model_spec(c, kind), *c.shape, o);
  json doc = header("test-shape", c);
  doc["model"] = to_string(kind);
  doc["order"] = c.order;
  doc["shape_null"] = to_json(*c.shape);
  doc["test"] = to_json(r);
  if (auto stem = emit(c, doc, out)) {
    auto f = companion(*stem, "_bootstrap.csv");
    f << "replicate,statistic\n";
    for (std::size_t b = 0; b < r.bootstrap_stats.size(); ++b) {
      f << b << ',' << number(r.bootstrap_stats[b]).get<double>() << '\n';
    }
  }
  return kOk;
}

int ci_command(const RunConfig& c, std::ostream& out) {
  const ModelKind kind = required_model(c);
  check_consistency(c, kind);
  const FunctionalDataset data = load(c, kind);
  CiOptions o;
  o.level = c.level;
  o.draws = c.draws.value_or(500);
  o.seed = c.seed;
  o.threads = c.threads;
  o.block = c.block;
  o.pve = c.pve;
  o.whiten = c.whiten;
  FunctionalSpec spec = model_spec(c, kind);
  const bool surface = kind == ModelKind::kFofr && c.block == 1;
  o.points = report_grid(data.domain, surface ? kSurfacePoints : kReportPoints);
  const CiBand band = projection_ci(data, spec, c.shape, o);
  json doc = header("ci", c);
  doc["model"] = to_string(kind);
  doc["order"] = c.order;
  doc["shape"] = c.shape ? to_json(*c.shape) : json(nullptr);
  doc["band"] = to_json(band);
  if (auto stem = emit(c, doc, out)) {
    auto f = companion(*stem, "_band.csv");
    write_band_csv(band, f);
  }
  return kOk;
}

int cv_command(const RunConfig& c, std::ostream& out) {
  const ModelKind kind = required_model(c);
  check_consistency(c, kind);
  const FunctionalDataset data = load(c, kind);
  CvOptions o;
  o.folds = c.folds;
  o.seed = c.seed;
  o.threads = c.threads;
  const CvResult r = cv_select_order(data, model_spec(c, kind), c.shape, c.candidates, o);
  json doc = header("cv-order", c);
  doc["model"] = to_string(kind);
  doc["shape"] = c.shape ? to_json(*c.shape) : json(nullptr);
  doc["cv"] = to_json(r);
  emit(c, doc, out);
  return kOk;
}

ScenarioSpec scenario_spec(const RunConfig& c) {
  ScenarioSpec s;
  s.kind = scenario_kind_from_string(c.scenario);
  s.n = c.n;
  s.m = c.m;
  s.seed = c.seed;
  s.replications = c.reps;
  s.validate();
  return s;
}

int simulate_command(const RunConfig& c, std::ostream& out) {
  const ScenarioSpec s = scenario_spec(c);
  const ScenarioData sd = generate_scenario(s, c.replication);
  if (!c.out) {
    write_wide_csv(sd.data, out);
    return kOk;
  }
  write_dataset(sd.data, *c.out);
  return kOk;
}

int bench_command(const RunConfig& c, std::ostream& out) {
  const ScenarioSpec s = scenario_spec(c);
  BenchmarkOptions o;
  o.order = c.cv ? 0 : c.order;
  o.cv_candidates = c.candidates;
  o.cv_folds = c.folds;
  o.pve = c.pve;
  o.coverage = c.coverage;
  o.test = c.test;
  o.ci_draws = c.draws.value_or(300);
  o.test_draws = c.draws.value_or(200);
  o.level = c.level;
  o.shape = c.shape;
  o.test_shape = c.shape;
  o.whiten = c.whiten;
  o.threads = c.threads;
  const MetricTable t = run_benchmark(s, o);
  const double scale = s.kind == ScenarioKind::kA ? 1000.0 : 100.0;
  if (!c.out) {
    write_metric_summary_csv(t, out, scale);
    return kOk;
  }
  std::filesystem::path p(*c.out);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw DataError("cannot write " + p.string());
  write_metric_summary_csv(t, f, scale);
  const auto stem = p.parent_path() / p.stem();
  std::ofstream reps(stem.string() + "_replications.csv");
  write_metric_replications_csv(t, reps);
  json doc = header("bench", c);
  doc["metrics"] = to_json(t);
  std::ofstream js(stem.string() + ".json");
  js << doc.dump(2) << '\n';
  return kOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "Input dataset (CSV)");
  sub->add_option("--scalars", f.scalars, "Companion scalar file for long_csv data");
  sub->add_option("--config", f.config, "RunConfig JSON file");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--out", f.out, "Result file (JSON, or CSV for bench/simulate)");
  sub->add_option("--threads", f.threads, "Worker threads (default: BERNFIT_THREADS or 1)");
  sub->add_option("--format", f.format, "Data format: wide_csv or long_csv");
  sub->add_option("--order", f.order, "Bernstein order N");
  sub->add_option("--shape", f.shape, "Shape kind, e.g. NonIncreasing");
  sub->add_option("--pve", f.pve, "FPCA percent of variance explained");
  sub->add_flag("--no-whiten", f.no_whiten, "Skip FPCA pre-whitening");
}

int dispatch(const std::string& name, const RunConfig& c, std::ostream& out) {
  if (name == "fit-sofr") return fit_command(name, ModelKind::kSofr, c, out);
  if (name == "fit-fosr") return fit_command(name, ModelKind::kFosr, c, out);
  if (name == "fit-flcm") return fit_command(name, ModelKind::kFlcm, c, out);
  if (name == "fit-fofr") return fit_command(name, ModelKind::kFofr, c, out);
  if (name == "fit-qfosr") return fit_command(name, ModelKind::kQfosr, c, out);
  if (name == "test-shape") return test_command(c, out);
  if (name == "ci") return ci_command(c, out);
  if (name == "cv-order") return cv_command(c, out);
  if (name == "simulate") return simulate_command(c, out);
  if (name == "bench") return bench_command(c, out);
  throw ConfigError("unknown subcommand " + name);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape-constrained functional regression with Bernstein polynomials", "bernfit"};
  app.require_subcommand(1);
  Flags f;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"fit-sofr", "Scalar-on-function regression"},
      {"fit-fosr", "Function-on-scalar regression"},
      {"fit-flcm", "Functional linear concurrent model"},
      {"fit-fofr", "Function-on-function regression"},
      {"fit-qfosr", "Quantile function-on-scalar regression"},
      {"test-shape", "Bootstrap test of a shape null"},
      {"ci", "Projection-based pointwise confidence band"},
      {"cv-order", "Choose the Bernstein order by V-fold CV"},
      {"simulate", "Write one simulated scenario dataset"},
      {"bench", "Monte Carlo benchmark of a scenario"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, f);
    if (name == "test-shape" || name == "ci" || name == "cv-order") {
      sub->add_option("--model", f.model, "sofr, fosr, flcm, fofr or qfosr");
    }
    if (name == "test-shape" || name == "ci" || name == "bench" || name == "fit-qfosr") {
      sub->add_option("--B", f.draws, "Bootstrap or projection draws");
    }
    if (name == "test-shape") sub->add_flag("--whiten-test", f.whiten_test, "Whiten the functional test fits");
    if (name == "ci" || name == "bench" || name == "fit-qfosr") sub->add_option("--level", f.level, "Confidence level");
    if (name == "ci") sub->add_option("--block", f.block, "Coefficient block (0 = intercept)");
    if (name == "cv-order" || name == "bench") {
      sub->add_option("--V", f.folds, "Number of folds");
      sub->add_option("--candidates", f.candidates, "Candidate orders");
    }
    if (name == "simulate" || name == "bench") {
      sub->add_option("--scenario", f.scenario, "A, B, B_sparse, C or S1");
      sub->add_option("--n", f.n, "Sample size");
      sub->add_option("--m", f.m, "Grid size");
    }
    if (name == "simulate") sub->add_option("--replication", f.replication, "Replication index");
    if (name == "bench") {
      sub->add_option("--reps", f.reps, "Monte Carlo replications");
      sub->add_flag("--coverage", f.coverage, "Record projection-CI coverage");
      sub->add_flag("--test", f.test, "Record bootstrap-test rejections");
      sub->add_flag("--cv", f.cv, "Choose N per replication by cross-validation");
    }
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "bernfit: " << e.what() << '\n';
    return kConfigError;
  }
  const CLI::App* sub = app.get_subcommands().front();
  try {
    const RunConfig c = resolve(f, *sub);
    return dispatch(sub->get_name(), c, out);
  } catch (const DataError& e) {
    err << "bernfit: data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ConfigError& e) {
    err << "bernfit: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "bernfit: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "bernfit: numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "bernfit: numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace bernfit::cli
