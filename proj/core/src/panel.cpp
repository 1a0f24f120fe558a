#include "cforge/panel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cforge/csv.hpp"
#include "cforge/error.hpp"

namespace cforge::panel {

namespace {

bool is_iso3(const std::string& code) {
  if (code.size() != 3) return false;
  for (char c : code) {
    if (c < 'A' || c > 'Z') return false;
  }
  return true;
}

std::optional<double> parse_optional(const std::string& cell, const std::string& context) {
  if (cell.empty()) return std::nullopt;
  return csv::parse_double(cell, context);
}

std::string canonical_name(const SchemaMap& schema, const std::string& header) {
  auto it = schema.find(header);
  return it == schema.end() ? header : it->second;
}

}  // namespace

std::vector<std::string> Panel::countries() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (seen.insert(r.country).second) out.push_back(r.country);
  }
  return out;
}

int Panel::min_year() const {
  int y = records.empty() ? 0 : records.front().year;
  for (const auto& r : records) y = std::min(y, r.year);
  return y;
}

int Panel::max_year() const {
  int y = records.empty() ? 0 : records.front().year;
  for (const auto& r : records) y = std::max(y, r.year);
  return y;
}

Panel load_panel(std::istream& in, const SchemaMap& schema) {
  csv::Table table = csv::read(in);
  if (table.empty()) fail(errc::empty_input, "panel stream is empty");

  std::vector<std::string> columns;
  columns.reserve(table.header.size());
  for (const auto& h : table.header) columns.push_back(canonical_name(schema, h));

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < columns.size(); ++i) index[columns[i]] = static_cast<int>(i);
  for (const char* required : kRequiredColumns) {
    if (!index.count(required)) {
      fail(errc::schema, std::string("panel header is missing required column '") + required + "'");
    }
  }
  if (table.rows.empty()) fail(errc::empty_input, "panel has a header but no data rows");

  Panel panel;
  panel.columns = columns;
  std::set<std::pair<std::string, int>> seen;
  auto cell = [&](const std::vector<std::string>& row, const char* name) -> const std::string& {
    return row[static_cast<std::size_t>(index.at(name))];
  };
  auto optional_cell = [&](const std::vector<std::string>& row, const char* name)
      -> std::optional<std::string> {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return row[static_cast<std::size_t>(it->second)];
  };

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string row_label = "row " + std::to_string(r + 2);  // 1-based, after header
    PanelRecord rec;
    rec.country = cell(row, "country");
    if (!is_iso3(rec.country)) {
      fail(errc::schema, "country '" + rec.country + "' in " + row_label +
                             " is not a 3-letter uppercase ISO code");
    }
    rec.year = static_cast<int>(csv::parse_long(cell(row, "year"), "column year, " + row_label));
    rec.regime = cell(row, "regime");
    if (rec.regime.empty()) fail(errc::schema, "empty regime label in " + row_label);
    rec.inst_quality = parse_optional(cell(row, "inst_quality"), "column inst_quality, " + row_label);
    rec.complexity = parse_optional(cell(row, "complexity"), "column complexity, " + row_label);
    rec.human_capital =
        parse_optional(cell(row, "human_capital"), "column human_capital, " + row_label);
    if (auto c = optional_cell(row, "gdp_pc")) rec.gdp_pc = parse_optional(*c, "column gdp_pc, " + row_label);
    if (auto c = optional_cell(row, "hdi")) rec.hdi = parse_optional(*c, "column hdi, " + row_label);
    if (auto c = optional_cell(row, "eci")) rec.eci = parse_optional(*c, "column eci, " + row_label);
    if (auto c = optional_cell(row, "gini")) rec.gini = parse_optional(*c, "column gini, " + row_label);

    if (!seen.insert({rec.country, rec.year}).second) {
      fail(errc::schema, "duplicate (country, year) pair " + rec.country + "," +
                             std::to_string(rec.year));
    }
    panel.records.push_back(std::move(rec));
  }
  return panel;
}

Panel load_panel_file(const std::string& path, const SchemaMap& schema) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open panel file " + path);
  return load_panel(in, schema);
}

namespace {

std::string optional_to_cell(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

void write_panel(std::ostream& out, const Panel& panel) {
  csv::Table table;
  table.header = panel.columns;
  for (const auto& rec : panel.records) {
    std::vector<std::string> row;
    row.reserve(panel.columns.size());
    for (const auto& col : panel.columns) {
      if (col == "country") row.push_back(rec.country);
      else if (col == "year") row.push_back(std::to_string(rec.year));
      else if (col == "inst_quality") row.push_back(optional_to_cell(rec.inst_quality));
      else if (col == "complexity") row.push_back(optional_to_cell(rec.complexity));
      else if (col == "human_capital") row.push_back(optional_to_cell(rec.human_capital));
      else if (col == "regime") row.push_back(rec.regime);
      else if (col == "gdp_pc") row.push_back(optional_to_cell(rec.gdp_pc));
      else if (col == "hdi") row.push_back(optional_to_cell(rec.hdi));
      else if (col == "eci") row.push_back(optional_to_cell(rec.eci));
      else if (col == "gini") row.push_back(optional_to_cell(rec.gini));
      else row.push_back("");
    }
    table.rows.push_back(std::move(row));
  }
  csv::write(out, table);
}

void write_panel_file(const std::string& path, const Panel& panel) {
  std::ofstream out(path);
  if (!out) fail(errc::io, "cannot write panel file " + path);
  write_panel(out, panel);
}

const std::string& RegimeScheme::label_for(const std::string& country) const {
  auto it = assignment.find(country);
  if (it == assignment.end()) {
    fail(errc::scheme, "scheme '" + name + "' has no assignment for country " + country);
  }
  return it->second;
}

void RegimeScheme::validate_covers(const Panel& panel) const {
  for (const auto& country : panel.countries()) {
    if (!assignment.count(country)) {
      fail(errc::scheme, "scheme '" + name + "' has no assignment for country " + country);
    }
  }
}

RegimeScheme load_regime_scheme(std::istream& in, const std::string& name) {
  csv::Table table = csv::read(in);
  if (table.empty() || table.rows.empty()) fail(errc::empty_input, "regime scheme file is empty");
  int ci = table.find("country");
  int ri = table.find("regime");
  if (ci < 0 || ri < 0) fail(errc::schema, "regime scheme needs country,regime columns");
  RegimeScheme scheme;
  scheme.name = name;
  if (name == "geographic") scheme.kind = SchemeKind::geographic;
  else if (name == "governance") scheme.kind = SchemeKind::governance;
  else if (name == "network") scheme.kind = SchemeKind::network;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& country = row[static_cast<std::size_t>(ci)];
    const std::string& regime = row[static_cast<std::size_t>(ri)];
    if (country.empty()) fail(errc::schema, "empty country in scheme row " + std::to_string(r + 2));
    if (!regime.empty()) scheme.assignment[country] = regime;
  }
  return scheme;
}

RegimeScheme load_regime_scheme_file(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open scheme file " + path);
  return load_regime_scheme(in, name);
}

void load_similarity(std::istream& in, RegimeScheme& scheme) {
  csv::Table table = csv::read(in);
  if (table.empty() || table.rows.empty()) fail(errc::empty_input, "similarity matrix is empty");
  const std::size_t n = table.header.size() - 1;  // first header cell is a corner label
  if (table.rows.size() != n) {
    fail(errc::schema, "similarity matrix must be square, got " + std::to_string(table.rows.size()) +
                           " rows for " + std::to_string(n) + " columns");
  }
  scheme.similarity_countries.assign(table.header.begin() + 1, table.header.end());
  scheme.similarity = nn::Tensor(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (row[0] != scheme.similarity_countries[i]) {
      fail(errc::schema, "similarity matrix row label '" + row[0] + "' does not match column '" +
                             scheme.similarity_countries[i] + "'");
    }
    for (std::size_t j = 0; j < n; ++j) {
      scheme.similarity.at(i, j) =
          csv::parse_double(row[j + 1], "similarity cell (" + row[0] + "," +
                                            scheme.similarity_countries[j] + ")");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(scheme.similarity.at(i, i) - 1.0) > 1e-9) {
      fail(errc::schema, "similarity diagonal must be 1 for " + scheme.similarity_countries[i]);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(scheme.similarity.at(i, j) - scheme.similarity.at(j, i)) > 1e-9) {
        fail(errc::schema, "similarity matrix is not symmetric at (" +
                               scheme.similarity_countries[i] + "," +
                               scheme.similarity_countries[j] + ")");
      }
    }
  }
}

void load_similarity_file(const std::string& path, RegimeScheme& scheme) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open similarity file " + path);
  load_similarity(in, scheme);
}

void resolve_network_assignments(RegimeScheme& scheme,
                                 const std::vector<const RegimeScheme*>& references,
                                 const Panel& panel) {
  if (scheme.similarity_countries.empty()) {
    fail(errc::scheme, "network scheme '" + scheme.name + "' has no similarity matrix");
  }
  std::map<std::string, std::size_t> sim_index;
  for (std::size_t i = 0; i < scheme.similarity_countries.size(); ++i) {
    sim_index[scheme.similarity_countries[i]] = i;
  }
  // Anchors: countries whose label is identical across every reference scheme.
  std::vector<std::pair<std::string, std::string>> anchors;  // (country, label)
  for (const auto& country : panel.countries()) {
    if (references.empty()) break;
    bool agree = true;
    const std::string* label = nullptr;
    for (const RegimeScheme* ref : references) {
      auto it = ref->assignment.find(country);
      if (it == ref->assignment.end()) { agree = false; break; }
      if (label == nullptr) label = &it->second;
      else if (*label != it->second) { agree = false; break; }
    }
    if (agree && label != nullptr && sim_index.count(country)) anchors.push_back({country, *label});
  }
  if (anchors.empty()) {
    fail(errc::scheme, "network scheme '" + scheme.name + "' has no anchors to derive labels from");
  }
  for (const auto& country : panel.countries()) {
    if (scheme.assignment.count(country)) continue;
    auto it = sim_index.find(country);
    if (it == sim_index.end()) {
      fail(errc::scheme, "similarity matrix does not cover country " + country);
    }
    double best = -1.0;
    const std::string* best_label = nullptr;
    for (const auto& [anchor, label] : anchors) {
      const double s = scheme.similarity.at(it->second, sim_index.at(anchor));
      if (s > best) {
        best = s;
        best_label = &label;
      }
    }
    scheme.assignment[country] = *best_label;
  }
}

}  // namespace cforge::panel
