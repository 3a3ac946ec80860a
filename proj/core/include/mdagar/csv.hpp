#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mdagar::csv {

struct Row {
  std::size_t line = 0;  // 1-based source line
  std::vector<std::string> fields;
};

/// Splits a comma-separated line and trims surrounding whitespace from each
/// field. No quoting support; none of the formats need it.
std::vector<std::string> split(std::string_view line);

/// Reads every non-blank line. Lines whose first non-space character is '#'
/// are skipped when `allow_comments` is set.
std::vector<Row> read_rows(std::istream& in, bool allow_comments);

std::vector<Row> read_file(const std::filesystem::path& path, bool allow_comments);

/// Parses a finite double; throws ValidationError mentioning `context`.
double parse_double(std::string_view text, std::string_view context);

std::string trim(std::string_view s);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace mdagar::csv
