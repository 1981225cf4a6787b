#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "bernfit/dataset.hpp"
#include "bernfit/simulation.hpp"

namespace bernfit {

enum class DataFormat { kWideCsv, kLongCsv };

DataFormat data_format_from_string(const std::string& name);

// Wide CSV: one row per subject with header
//   id,[y],[z_<name>...],t=<v>...,[y:t=<v>...]
// `t=` (or `p=`) columns hold the functional covariate, `y:t=` columns the
// functional response. Empty cells mark unobserved grid points.
// Long CSV: columns id,t,x[,y_t], one row per sample; scalar response and
// covariates come from a companion wide file with columns id,[y],[z_<name>...].
FunctionalDataset read_wide_csv(std::istream& in, const std::string& source = "<stream>");
FunctionalDataset read_long_csv(std::istream& in, std::istream* scalars,
                                const std::string& source = "<stream>");

/// Reads and validates a dataset. The domain is the range of the pooled grid
/// unless `domain` is given.
FunctionalDataset read_dataset(const std::string& path, DataFormat format,
                               const std::optional<std::string>& scalar_path = std::nullopt,
                               const std::optional<Domain>& domain = std::nullopt);

/// Wide CSV with values printed to 17 significant digits (exact round-trip).
void write_wide_csv(const FunctionalDataset& data, std::ostream& out);
void write_dataset(const FunctionalDataset& data, const std::string& path);

/// For function-on-scalar data given with only `t=` columns: the covariate
/// curves become the response curves.
void promote_covariate_to_response(FunctionalDataset& data);

/// One summary row per benchmark (means, SDs, p-values), IMSE values
/// multiplied by `scale`.
void write_metric_summary_csv(const MetricTable& table, std::ostream& out, double scale);
/// One row per replication.
void write_metric_replications_csv(const MetricTable& table, std::ostream& out);

}  // namespace bernfit
