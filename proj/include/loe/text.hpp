#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loe::text {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Whole-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);

}  // namespace loe::text
