#pragma once

// Small text helpers for the CSV files the library reads and writes.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sparseica::csv {

/// Splits on commas; surrounding whitespace is trimmed from each field.
std::vector<std::string> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

/// Parses a full field as a double ("nan" and "inf" accepted).
std::optional<double> parse_double(std::string_view s);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

}  // namespace sparseica::csv
