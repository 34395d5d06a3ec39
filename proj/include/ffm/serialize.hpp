#pragma once

// JSON documents for estimates, tuning reports, forecast reports and ground
// truth. Objects use sorted keys and shortest round-trip numbers, so equal
// inputs always give byte-identical text.

#include <string>

#include <json.hpp>

#include "ffm/estimator.hpp"
#include "ffm/forecast.hpp"
#include "ffm/simgen.hpp"
#include "ffm/sparse.hpp"

namespace ffm {

using Json = nlohmann::json;

/// Row-major nested arrays.
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);

Json to_json(const WeightSpec& w);
WeightSpec weight_from_json(const Json& j);

/// Fields: eigenvalues, ratios, r_hat, loadings, weight, k0, c_r, seed.
Json to_json(const FactorEstimate& est);
FactorEstimate estimate_from_json(const Json& j);

Json to_json(const CvThresholdResult& r);
Json to_json(const CvCardinalityResult& r);
Json to_json(const SparsePcaConfig& c);
Json to_json(const SparsePcaResult& r);
Json to_json(const TspcaResult& r);

Json to_json(const ForecastReport& r);
Json to_json(const GroundTruth& t);
Json to_json(const SimConfig& c);

/// Pretty-printed text with a trailing newline.
std::string dump(const Json& j);
/// Throws DataError when the file cannot be written.
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

} // namespace ffm
