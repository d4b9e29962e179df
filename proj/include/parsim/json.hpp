#pragma once

#include "parsim/system_model.hpp"

#include <json.hpp>

namespace parsim {

using Json = nlohmann::json;

/// Row-major nested arrays. An empty matrix becomes [].
Json matrix_to_json(const Matrix& m);
/// Accepts nested arrays or a bare number (1x1). Throws ConfigError on
/// ragged or non-numeric input.
Matrix matrix_from_json(const Json& j, const char* name);

Json model_to_json(const StateSpaceModel& m);
StateSpaceModel model_from_json(const Json& j);

}  // namespace parsim
