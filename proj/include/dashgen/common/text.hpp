#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dashgen {

/// Fixed-point rendering with at most `max_decimals` digits after the point,
/// trailing zeros and a trailing point removed, "-0" normalised to "0".
std::string format_decimal(double value, int max_decimals = 3);

std::string to_lower(std::string_view s);

/// Lower-cased alphanumeric tokens; everything else separates.
std::vector<std::string> tokenize(std::string_view s);

bool contains_word(std::string_view haystack, std::string_view word);

std::string xml_escape(std::string_view s);

/// Removes a Markdown code fence around a model answer, if any.
std::string strip_code_fence(std::string text);

/// Byte offset to 1-based (line, column).
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset);

using SystemTime = std::chrono::sys_time<std::chrono::milliseconds>;

/// "2025-01-01T00:00:00.000Z"
std::string format_utc(SystemTime t);
SystemTime parse_utc(std::string_view s);

}  // namespace dashgen
