#pragma once

#include <json.hpp>
#include <string>

namespace unicam {

/// Deterministic serialization: keys sorted, floats printed with 17
/// significant digits, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& doc);

}  // namespace unicam
