#pragma once

#include <span>
#include <vector>

namespace bernfit {

/// Empirical quantile with linear interpolation between order statistics
/// (h = (n-1) p). Throws ConfigError on empty input or p outside [0,1].
double quantile(std::vector<double> values, double p);

double mean(std::span<const double> v);
/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> v);

/// Two-sided p-value of the paired t-test on a - b.
double paired_t_pvalue(std::span<const double> a, std::span<const double> b);
/// Two-sided p-value of the Welch two-sample t-test.
double welch_t_pvalue(std::span<const double> a, std::span<const double> b);

}  // namespace bernfit
