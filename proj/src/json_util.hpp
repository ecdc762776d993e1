#pragma once

#include "ftns/tensor.hpp"

#include <json.hpp>

namespace ftns::detail {

nlohmann::json tensor_to_json(const MultiIndexTensor& t);
// False when the object is empty (tensor absent).
bool tensor_from_json(const nlohmann::json& j, int D, MultiIndexTensor& out);
nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

}  // namespace ftns::detail
