#include "mdagar/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "mdagar/errors.hpp"

namespace mdagar::csv {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::vector<Row> read_rows(std::istream& in, bool allow_comments) {
  std::vector<Row> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (allow_comments && t.front() == '#') continue;
    // Strip a UTF-8 byte-order mark on the first line.
    std::string_view view = t;
    if (number == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    rows.push_back({number, split(view)});
  }
  return rows;
}

std::vector<Row> read_file(const std::filesystem::path& path, bool allow_comments) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_rows(in, allow_comments);
}

double parse_double(std::string_view text, std::string_view context) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ValidationError(std::string(context) + ": expected a finite number, got '" +
                          t + "'");
  }
  return value;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace mdagar::csv
