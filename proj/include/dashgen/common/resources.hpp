#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dashgen::resources {

/// Raw bytes of a bundled data file, addressed by its path relative to the
/// repository's data/ directory (e.g. "palettes.json").
/// Throws ResourceNotFound.
std::string_view text(std::string_view path);

/// Parsed JSON of a bundled data file. Parsed once, then cached.
const nlohmann::json& json(std::string_view path);

/// Paths of bundled files under `prefix`, sorted.
std::vector<std::string> list(std::string_view prefix);

bool exists(std::string_view path);

}  // namespace dashgen::resources
