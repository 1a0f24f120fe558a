#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cforge::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // each row padded/validated against header size

  bool empty() const { return header.empty() && rows.empty(); }
  int find(const std::string& column) const;  // -1 when absent
};

// RFC-4180-ish reader: quoted fields, embedded commas/quotes, \r\n tolerant.
// An empty stream yields an empty Table; the caller decides whether that is an error.
Table read(std::istream& in);
Table read_file(const std::string& path);

void write(std::ostream& out, const Table& table);
void write_file(const std::string& path, const Table& table);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
// Fixed significant digits (%.6g style), the documented table printing precision.
std::string format_sig(double value, int digits = 6);
// Fixed decimals with optional forced sign, used for paper-style table cells.
std::string format_fixed(double value, int decimals, bool force_sign = false);

// Throws a parse error naming `context` when the cell is not a finite number.
double parse_double(const std::string& cell, const std::string& context);
long parse_long(const std::string& cell, const std::string& context);

}  // namespace cforge::csv
