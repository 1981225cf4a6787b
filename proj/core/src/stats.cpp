#include "bernfit/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "bernfit/errors.hpp"

namespace bernfit {

namespace {

double two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  if (!(df > 0.0)) return 1.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

}  // namespace

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double paired_t_pvalue(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("paired t-test needs equal sample sizes");
  if (a.size() < 2) return 1.0;
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double sd = stddev(d);
  const double m = mean(d);
  if (sd == 0.0) return m == 0.0 ? 1.0 : 0.0;
  const double n = static_cast<double>(d.size());
  return two_sided(m / (sd / std::sqrt(n)), n - 1.0);
}

double welch_t_pvalue(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return 1.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = std::pow(stddev(a), 2) / na;
  const double vb = std::pow(stddev(b), 2) / nb;
  const double diff = mean(a) - mean(b);
  if (va + vb == 0.0) return diff == 0.0 ? 1.0 : 0.0;
  const double df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return two_sided(diff / std::sqrt(va + vb), df);
}

}  // namespace bernfit
