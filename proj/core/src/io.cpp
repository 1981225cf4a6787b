#include "bernfit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

std::string where(const std::string& source, std::size_t row, std::size_t col) {
  return source + ": row " + std::to_string(row) + ", column " + std::to_string(col + 1);
}

double parse_number(const std::string& cell, const std::string& loc) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError(loc + ": cannot parse '" + cell + "' as a finite number");
  }
  return v;
}

bool read_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

// Sorted grid from column times; `order[k]` is the grid index of column k.
std::vector<double> column_grid(const std::vector<double>& times, std::vector<std::size_t>& order,
                                const std::string& source, const char* what) {
  std::vector<double> grid = times;
  std::sort(grid.begin(), grid.end());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k] == grid[k - 1]) {
      std::ostringstream os;
      os << source << ": duplicate " << what << " time " << grid[k] << " in header";
      throw DataError(os.str());
    }
  }
  order.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    order[k] = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), times[k]) - grid.begin());
  }
  return grid;
}

void set_domain(FunctionalDataset& data, const std::optional<Domain>& domain) {
  if (domain) {
    data.domain = *domain;
    return;
  }
  std::vector<double> all = data.x_grid.points;
  all.insert(all.end(), data.y_grid.points.begin(), data.y_grid.points.end());
  if (all.size() < 2) throw DataError("dataset grid needs at least two time points");
  const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  data.domain = Domain{*lo, *hi};
}

// Fills samples for one subject from (grid index, value) pairs.
void store(std::vector<std::pair<std::size_t, double>> samples, std::size_t grid_size,
           std::vector<std::size_t>& idx, std::vector<double>& values) {
  std::sort(samples.begin(), samples.end());
  idx.clear();
  values.clear();
  for (const auto& [j, v] : samples) {
    idx.push_back(j);
    values.push_back(v);
  }
  if (idx.size() == grid_size) idx.clear();
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

DataFormat data_format_from_string(const std::string& name) {
  if (name == "wide" || name == "wide_csv") return DataFormat::kWideCsv;
  if (name == "long" || name == "long_csv") return DataFormat::kLongCsv;
  throw ConfigError("unknown data format '" + name + "' (expected wide_csv or long_csv)");
}

FunctionalDataset read_wide_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!read_line(in, line)) throw DataError(source + ": empty file");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "id") throw DataError(source + ": first column must be 'id'");
  FunctionalDataset data;
  std::optional<std::size_t> y_col;
  std::vector<std::size_t> z_cols, x_cols, yc_cols;
  std::vector<double> x_times, y_times;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    const std::string loc = where(source, 1, c);
    if (h == "y") {
      y_col = c;
    } else if (h.rfind("z_", 0) == 0) {
      z_cols.push_back(c);
      data.z_names.push_back(h.substr(2));
    } else if (h.rfind("y:t=", 0) == 0 || h.rfind("y:p=", 0) == 0) {
      yc_cols.push_back(c);
      y_times.push_back(parse_number(h.substr(4), loc));
    } else if (h.rfind("t=", 0) == 0 || h.rfind("p=", 0) == 0) {
      x_cols.push_back(c);
      x_times.push_back(parse_number(h.substr(2), loc));
    } else {
      throw DataError(loc + ": unrecognised column '" + h + "'");
    }
  }
  std::vector<std::size_t> x_order, y_order;
  data.x_grid.points = column_grid(x_times, x_order, source, "covariate");
  data.y_grid.points = column_grid(y_times, y_order, source, "response");

  std::size_t row = 1;
  while (read_line(in, line)) {
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    }
    Subject s;
    s.id = cells[0];
    if (s.id.empty()) throw DataError(where(source, row, 0) + ": empty id");
    if (y_col && !cells[*y_col].empty()) s.y = parse_number(cells[*y_col], where(source, row, *y_col));
    for (std::size_t c : z_cols) s.z.push_back(parse_number(cells[c], where(source, row, c)));
    std::vector<std::pair<std::size_t, double>> xs, ys;
    for (std::size_t k = 0; k < x_cols.size(); ++k) {
      const auto& cell = cells[x_cols[k]];
      if (!cell.empty()) xs.emplace_back(x_order[k], parse_number(cell, where(source, row, x_cols[k])));
    }
    for (std::size_t k = 0; k < yc_cols.size(); ++k) {
      const auto& cell = cells[yc_cols[k]];
      if (!cell.empty()) ys.emplace_back(y_order[k], parse_number(cell, where(source, row, yc_cols[k])));
    }
    store(std::move(xs), data.x_grid.size(), s.x_idx, s.x);
    store(std::move(ys), data.y_grid.size(), s.y_idx, s.y_curve);
    data.subjects.push_back(std::move(s));
  }
  return data;
}

FunctionalDataset read_long_csv(std::istream& in, std::istream* scalars, const std::string& source) {
  std::string line;
  if (!read_line(in, line)) throw DataError(source + ": empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "t" || header[2] != "x" ||
      (header.size() == 4 && header[3] != "y_t") || header.size() > 4) {
    throw DataError(source + ": long format header must be id,t,x[,y_t]");
  }
  struct Sample {
    double t;
    std::optional<double> x, y;
    std::size_t row;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Sample>> rows;
  std::vector<double> times;
  std::size_t row = 1;
  while (read_line(in, line)) {
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    }
    if (cells[0].empty()) throw DataError(where(source, row, 0) + ": empty id");
    Sample s{parse_number(cells[1], where(source, row, 1)), std::nullopt, std::nullopt, row};
    if (!cells[2].empty()) s.x = parse_number(cells[2], where(source, row, 2));
    if (header.size() == 4 && !cells[3].empty()) s.y = parse_number(cells[3], where(source, row, 3));
    if (!rows.count(cells[0])) order.push_back(cells[0]);
    rows[cells[0]].push_back(s);
    times.push_back(s.t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  FunctionalDataset data;
  data.x_grid.points = times;
  data.y_grid.points = header.size() == 4 ? times : std::vector<double>{};
  for (const auto& id : order) {
    auto samples = rows[id];
    std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
    std::vector<std::pair<std::size_t, double>> xs, ys;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (k > 0 && samples[k].t == samples[k - 1].t) {
        throw DataError(source + ": row " + std::to_string(samples[k].row) + " repeats time " +
                        format_double(samples[k].t) + " for subject " + id);
      }
      const auto j = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), samples[k].t) - times.begin());
      if (samples[k].x) xs.emplace_back(j, *samples[k].x);
      if (samples[k].y) ys.emplace_back(j, *samples[k].y);
    }
    Subject s;
    s.id = id;
    store(std::move(xs), data.x_grid.size(), s.x_idx, s.x);
    store(std::move(ys), data.y_grid.size(), s.y_idx, s.y_curve);
    data.subjects.push_back(std::move(s));
  }

  if (scalars != nullptr) {
    const FunctionalDataset sc = read_wide_csv(*scalars, source + " (scalars)");
    if (!sc.x_grid.points.empty() || !sc.y_grid.points.empty()) {
      throw DataError(source + " (scalars): companion file may only hold id, y and z_ columns");
    }
    data.z_names = sc.z_names;
    std::map<std::string, const Subject*> by_id;
    for (const auto& s : sc.subjects) by_id[s.id] = &s;
    for (auto& s : data.subjects) {
      const auto it = by_id.find(s.id);
      if (it == by_id.end()) {
        if (!data.z_names.empty()) throw DataError(source + " (scalars): no row for subject " + s.id);
        continue;
      }
      s.y = it->second->y;
      s.z = it->second->z;
    }
  }
  return data;
}

FunctionalDataset read_dataset(const std::string& path, DataFormat format,
                               const std::optional<std::string>& scalar_path,
                               const std::optional<Domain>& domain) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path);
  FunctionalDataset data;
  if (format == DataFormat::kWideCsv) {
    data = read_wide_csv(in, path);
  } else {
    std::ifstream sc;
    if (scalar_path) {
      sc.open(*scalar_path);
      if (!sc) throw DataError("cannot open scalar file " + *scalar_path);
    }
    data = read_long_csv(in, scalar_path ? &sc : nullptr, path);
  }
  set_domain(data, domain);
  data.sync_grid_patterns();
  data.validate();
  return data;
}

void write_wide_csv(const FunctionalDataset& data, std::ostream& out) {
  const bool scalar_y = std::any_of(data.subjects.begin(), data.subjects.end(),
                                    [](const Subject& s) { return s.y.has_value(); });
  out << "id";
  if (scalar_y) out << ",y";
  for (const auto& z : data.z_names) out << ",z_" << z;
  for (double t : data.x_grid.points) out << ",t=" << format_double(t);
  for (double t : data.y_grid.points) out << ",y:t=" << format_double(t);
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Subject& s = data.subjects[i];
    out << s.id;
    if (scalar_y) out << ',' << (s.y ? format_double(*s.y) : std::string());
    for (double z : s.z) out << ',' << format_double(z);
    std::vector<std::string> xs(data.x_grid.size()), ys(data.y_grid.size());
    const auto xi = data.x_indices(i);
    for (std::size_t r = 0; r < xi.size(); ++r) xs[xi[r]] = format_double(s.x[r]);
    const auto yi = data.y_indices(i);
    for (std::size_t r = 0; r < yi.size(); ++r) ys[yi[r]] = format_double(s.y_curve[r]);
    for (const auto& c : xs) out << ',' << c;
    for (const auto& c : ys) out << ',' << c;
    out << '\n';
  }
}

void write_dataset(const FunctionalDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_wide_csv(data, out);
}

void promote_covariate_to_response(FunctionalDataset& data) {
  if (data.has_functional_response()) return;
  data.y_grid = data.x_grid;
  for (auto& s : data.subjects) {
    s.y_curve = std::move(s.x);
    s.y_idx = std::move(s.x_idx);
    s.x.clear();
    s.x_idx.clear();
  }
  data.x_grid = Grid{};
  data.sync_grid_patterns();
}

void write_metric_summary_csv(const MetricTable& table, std::ostream& out, double scale) {
  out << "scenario,n,replications,failures,scale,constrained_mean,constrained_sd,"
         "unconstrained_mean,unconstrained_sd,p_value_two_sample,p_value_paired";
  const bool cov = !table.coverage.empty();
  const bool rej = !table.rejections.empty();
  if (cov) out << ",average_coverage,average_width";
  if (rej) out << ",rejection_rate";
  out << '\n';
  out << to_string(table.scenario.kind) << ',' << table.scenario.n << ',' << table.scenario.replications
      << ',' << table.failures.size() << ',' << format_double(scale) << ','
      << format_double(scale * table.mean_constrained()) << ','
      << format_double(scale * table.sd_constrained()) << ','
      << format_double(scale * table.mean_unconstrained()) << ','
      << format_double(scale * table.sd_unconstrained()) << ',' << format_double(table.unpaired_p_value())
      << ',' << format_double(table.paired_p_value());
  if (cov) out << ',' << format_double(table.average_coverage()) << ',' << format_double(table.average_width());
  if (rej) out << ',' << format_double(table.rejection_rate());
  out << '\n';
}

void write_metric_replications_csv(const MetricTable& table, std::ostream& out) {
  out << "replication,order,order_unconstrained,imse_constrained,imse_unconstrained";
  const bool rej = !table.rejections.empty();
  const bool width = !table.widths.empty();
  if (width) out << ",ci_width";
  if (rej) out << ",rejected";
  out << '\n';
  for (std::size_t r = 0; r < table.orders.size(); ++r) {
    out << r << ',' << table.orders[r] << ',';
    out << (r < table.orders_unconstrained.size() ? std::to_string(table.orders_unconstrained[r]) : "") << ',';
    out << (r < table.imse_constrained.size() ? format_double(table.imse_constrained[r]) : "") << ',';
    out << (r < table.imse_unconstrained.size() ? format_double(table.imse_unconstrained[r]) : "");
    if (width) out << ',' << format_double(table.widths[r]);
    if (rej) out << ',' << table.rejections[r];
    out << '\n';
  }
}

}  // namespace bernfit
