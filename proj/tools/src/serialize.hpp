#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bernfit/covariance.hpp"
#include "bernfit/inference.hpp"
#include "bernfit/model_selection.hpp"
#include "bernfit/qfosr.hpp"
#include "bernfit/qp.hpp"
#include "bernfit/shape.hpp"
#include "bernfit/simulation.hpp"
#include "bernfit/sofr.hpp"

namespace bernfit::cli {

using json = nlohmann::ordered_json;

// Non-finite values are capped at +-DBL_MAX (NaN becomes null) so that
// result files only carry finite numbers.
json number(double v);
json numbers(const Eigen::VectorXd& v);
json numbers(const std::vector<double>& v);

json to_json(const ShapeSpec& shape);
ShapeSpec shape_from_json(const json& j);

json to_json(const ShapeReport& report);
json to_json(const QpSolution& solution);
json to_json(const CovarianceModel& cov);
json to_json(const SofrFit& fit, const std::vector<double>& grid);
json to_json(const FunctionalFit& fit, const std::vector<double>& grid,
             const std::vector<double>& surface_grid);
json to_json(const CiBand& band);
json to_json(const TestReport& report);
json to_json(const CvResult& cv);
json to_json(const MetricTable& table);
json to_json(const QfosrFit& fit, const std::vector<double>& grid);

}  // namespace bernfit::cli
