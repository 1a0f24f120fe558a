#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cforge/tensor.hpp"

namespace cforge::panel {

// One country-year observation. The three core indicators are optional at the
// record level; gaps are filled (or flagged) by the imputation pass.
struct PanelRecord {
  std::string country;  // ISO-3166 alpha-3
  int year = 0;
  std::optional<double> inst_quality;
  std::optional<double> complexity;
  std::optional<double> human_capital;
  std::string regime;
  std::optional<double> gdp_pc;
  std::optional<double> hdi;
  std::optional<double> eci;
  std::optional<double> gini;
};

struct Panel {
  std::vector<PanelRecord> records;            // input order preserved
  std::vector<std::string> columns;            // header as ingested (canonical names)
  std::string schema_version = "cforge-panel-1";

  std::vector<std::string> countries() const;  // unique, order of first appearance
  int min_year() const;
  int max_year() const;
};

// Canonical column names. A schema map renames source headers onto these.
inline constexpr const char* kRequiredColumns[] = {
    "country", "year", "inst_quality", "complexity", "human_capital", "regime"};
inline constexpr const char* kOptionalColumns[] = {"gdp_pc", "hdi", "eci", "gini"};

using SchemaMap = std::map<std::string, std::string>;  // source header -> canonical name

// CSV ingestion. Header row required; empty cells are missing values; a
// duplicate (country, year) pair is a schema error naming the pair; a file
// with no data rows is an empty-input error.
Panel load_panel(std::istream& in, const SchemaMap& schema = {});
Panel load_panel_file(const std::string& path, const SchemaMap& schema = {});

// Writes the ingested columns back out; numeric cells use shortest round-trip
// formatting so a write/read cycle reproduces every field exactly.
void write_panel(std::ostream& out, const Panel& panel);
void write_panel_file(const std::string& path, const Panel& panel);

enum class SchemeKind { geographic, governance, network, custom };

struct RegimeScheme {
  std::string name = "custom";
  SchemeKind kind = SchemeKind::custom;
  std::map<std::string, std::string> assignment;  // country -> regime label

  // Pairwise institutional similarity in [0, 1]; required for network schemes.
  std::vector<std::string> similarity_countries;
  Tensor similarity;  // symmetric, unit diagonal

  const std::string& label_for(const std::string& country) const;
  void validate_covers(const Panel& panel) const;
};

RegimeScheme load_regime_scheme(std::istream& in, const std::string& name = "custom");
RegimeScheme load_regime_scheme_file(const std::string& path, const std::string& name = "custom");

// Square similarity matrix with country codes as both header row and first
// column. Checks symmetry and unit diagonal.
void load_similarity(std::istream& in, RegimeScheme& scheme);
void load_similarity_file(const std::string& path, RegimeScheme& scheme);

// Network schemes carry similarity but may lack assignments: each unassigned
// country takes the label of its most similar anchor. Anchors are the
// countries on whose label every reference scheme agrees.
void resolve_network_assignments(RegimeScheme& scheme,
                                 const std::vector<const RegimeScheme*>& references,
                                 const Panel& panel);

}  // namespace cforge::panel
