#include "cforge/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cforge/error.hpp"

namespace cforge::csv {

int Table::find(const std::string& column) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n") != std::string::npos;
}

std::string quote(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Table read(std::istream& in) {
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      if (line.empty()) continue;  // skip leading blank lines before the header
      table.header = split_line(line);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line);
    cells.resize(table.header.size());  // short rows read as missing trailing fields
    table.rows.push_back(std::move(cells));
  }
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open file " + path);
  return read(in);
}

void write(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << quote(table.header[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << quote(row[i]);
    }
    out << '\n';
  }
}

void write_file(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) fail(errc::io, "cannot write file " + path);
  write(out, table);
}

std::string format_double(double value) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_sig(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return buf;
}

std::string format_fixed(double value, int decimals, bool force_sign) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), force_sign ? "%+.*f" : "%.*f", decimals, value);
  return buf;
}

double parse_double(const std::string& cell, const std::string& context) {
  double value = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    fail(errc::parse, "non-numeric value '" + cell + "' in " + context);
  }
  return value;
}

long parse_long(const std::string& cell, const std::string& context) {
  long value = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    fail(errc::parse, "non-integer value '" + cell + "' in " + context);
  }
  return value;
}

}  // namespace cforge::csv
