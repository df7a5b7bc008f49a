#pragma once

// Locale-independent number parsing/formatting and atomic file output.

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace chainbound::io {

/// Parses a full token as a double; throws ValidationError otherwise.
/// Accepts "inf" and "-inf".
double parse_double(std::string_view token);
long long parse_int(std::string_view token);
std::size_t parse_size(std::string_view token);

/// Shortest round-trip representation.
std::string format_double(double x);

std::vector<std::string_view> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

/// Reads the next line that is not blank and not a '#' comment.
bool next_content_line(std::istream& in, std::string& line);

/// Writes `contents` to `path` via a temporary sibling and rename, so readers
/// never observe partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace chainbound::io
