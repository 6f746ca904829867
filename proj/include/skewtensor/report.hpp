#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "skewtensor/ecm.hpp"
#include "skewtensor/simulate.hpp"

namespace skewtensor {

using Json = nlohmann::json;

// Tensors serialize as nested arrays, outermost mode first, so the JSON
// shape mirrors the declared dims.
Json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// Parameter serialization carries only the scalars of the active family and
// rejects unknown keys.
Json params_to_json(const FamilyParams& p);
FamilyParams params_from_json(const Json& j);

Json fit_report_to_json(const FitResult& r);

// Both config parsers fail closed: an unrecognized key is a value_error.
FitConfig fit_config_from_json(const Json& j);
StudySpec study_spec_from_json(const Json& j);

std::string format_double(double v);  // %.17g

std::string study_csv(const StudyResult& r);
std::vector<StudyRow> study_rows_from_csv(const std::string& csv);

// Per-family curves of the Kronecker-scale relative error across study
// cells: mean line with a 2.5th-97.5th percentile band, log10 y axis.
std::string study_svg(const std::vector<StudyRow>& rows);

}  // namespace skewtensor
