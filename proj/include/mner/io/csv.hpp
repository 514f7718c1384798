#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mner::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  long column(std::string_view name) const;
};

/// RFC 4180-style reader: comma delimiter, double-quote quoting, LF or CRLF
/// line ends, optional UTF-8 BOM. Blank lines are skipped. Throws
/// DuplicateHeader, InvalidInput on ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);
/// Strict parse of a whole cell; returns false on anything but a number.
bool parse_double(std::string_view cell, double& out);

std::string quote_csv(std::string_view cell);
void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

/// Column-name suffix for entry (i, j) of a flattened matrix, 1-based:
/// "11", "12", ... (with an underscore separator once an index reaches 10).
std::string matrix_suffix(long i, long j);

}  // namespace mner::io
