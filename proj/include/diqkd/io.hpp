#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace diqkd {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

/// Strict parse of a whole token as a double. Throws ConfigError.
double parse_double(std::string_view token);

/// Writes to a sibling temporary file, then renames over `path`, so readers
/// never observe a partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace diqkd
