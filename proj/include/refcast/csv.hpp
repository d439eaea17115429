#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace refcast::csv {

struct Row {
  std::size_t line = 0; // 1-based line number in the source
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index for `name`; throws InputError naming `source` if absent.
  std::size_t column(std::string_view name, std::string_view source) const;
};

/// Parses comma-separated text with optional double-quoted fields.
/// The first non-empty line is the header. Blank lines are skipped.
Table read(std::istream &in);
Table read_file(const std::string &path);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Shortest representation that round-trips through strtod.
std::string format_double(double value);

void write_row(std::ostream &out, const std::vector<std::string> &fields);

} // namespace refcast::csv
