#pragma once

// Small text and file helpers shared by the file formats.

#include <string>
#include <string_view>
#include <vector>

namespace bmi {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Strict decimal parse; throws FormatError on trailing junk or empty input.
double parse_double(std::string_view s);

/// Shortest-round-trip-safe decimal rendering ("%.17g").
std::string format_double(double v);

std::string read_file(const std::string& path);

/// Write to a sibling temporary and rename over the target, so readers see
/// either the previous file or the complete new one.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace bmi
