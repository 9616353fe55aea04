#pragma once

#include <string>
#include <vector>

#include "dashgen/common/errors.hpp"
#include "json.hpp"

namespace dashgen::schema {

/// Validates `instance` against a JSON Schema (draft-07 subset).
///
/// Supported keywords: type, enum, const, properties, required,
/// additionalProperties, items, minItems, maxItems, minimum, maximum,
/// exclusiveMinimum, exclusiveMaximum, minLength, maxLength, pattern,
/// anyOf, oneOf, $ref (local "#/definitions/..." only).
///
/// Paths use dotted member access with bracketed indices, rooted at
/// `root_path` (e.g. "views[0].charts[1].chart_type"). Every violation
/// carries rule id "schema".
std::vector<Violation> validate(const nlohmann::json& instance, const nlohmann::json& schema,
                                const std::string& root_path = "$");

}  // namespace dashgen::schema
