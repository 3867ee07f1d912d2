#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fairrep::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Position of a header column, or -1.
  int column(std::string_view name) const;
};

/// Parses delimited text with a header row. Fields may be double-quoted
/// ("" escapes a quote); CRLF line endings are accepted. Throws
/// std::runtime_error on a missing file or a row with the wrong field count.
Table read(const std::filesystem::path& path, char delimiter = ',');
Table parse(std::string_view text, char delimiter = ',');

/// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delimiter = ',');

/// Round-trip formatting for doubles; non-finite values become empty cells.
std::string format_number(double value);

}  // namespace fairrep::csv
