#pragma once

#include <string>

#include "json.hpp"

namespace dsa::detail {

// Deterministic JSON text; doubles carry 17 significant digits.
std::string dump_json(const nlohmann::json& value, int indent = 2);

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace dsa::detail
