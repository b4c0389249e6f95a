#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace linkbench::detail {

/// Splits one comma-delimited row. No quoting: identifiers and numbers in the
/// project's file formats never contain commas.
std::vector<std::string_view> split_row(std::string_view line);

/// Reads a whole file into lines with trailing '\r' stripped. Raises IoError.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::ofstream open_for_write(const std::filesystem::path& path);

/// Parses a finite double; returns false on garbage or trailing characters.
bool parse_double(std::string_view s, double& out);
bool parse_u64(std::string_view s, std::uint64_t& out);

}  // namespace linkbench::detail
