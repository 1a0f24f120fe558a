#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cforge/panel.hpp"
#include "cforge/tensor.hpp"

namespace cforge::panel {

// ---- elementary series transforms -----------------------------------------

enum class ConstantPolicy { error, midpoint };  // midpoint maps a constant series to 0.5

// (x - min) / (max - min); constant series follow the policy.
std::vector<double> minmax_normalize(const std::vector<double>& series,
                                     ConstantPolicy policy = ConstantPolicy::error);

// Zero mean, unit population (1/n) variance.
std::vector<double> standardize(const std::vector<double>& series);

// Linear-interpolation ("type 7") quantile of an unsorted series.
double quantile_type7(std::vector<double> series, double p);

// Upper-tail winsorization: values above the upper_pct quantile clamp to it.
std::vector<double> winsorize(const std::vector<double>& series, double upper_pct = 0.99);

struct ImputationLog {
  struct Entry {
    std::string country;
    int year = 0;
    std::string variable;
    double value = 0.0;  // imputed value (unset for unresolved entries)
  };
  std::vector<Entry> imputed;
  std::vector<Entry> unresolved;  // still missing after the pass
};

// Replaces missing values of `variable` with the median of the same country's
// observed values within +/-(window_years-1)/2 years. Entries with no observed
// neighbour stay missing and are flagged in the log.
Panel impute_rolling_median(const Panel& panel, const std::string& variable, int window_years,
                            ImputationLog* log = nullptr);

// ---- PCA -------------------------------------------------------------------

struct PcaResult {
  nn::Tensor components;  // d x k, orthonormal columns, largest loading positive
  std::vector<double> explained_variance_ratio;  // non-increasing, sums to <= 1
  std::vector<double> means;                     // per-column centering
};

PcaResult pca_fit(const nn::Tensor& matrix, int k);
nn::Tensor pca_project(const PcaResult& pca, const nn::Tensor& matrix);
nn::Tensor pca_reconstruct(const PcaResult& pca, const nn::Tensor& scores);

// ---- the full pipeline -------------------------------------------------------

struct PreprocessConfig {
  int impute_window = 5;
  bool winsorize = true;
  double winsorize_pct = 0.99;
  ConstantPolicy constant_policy = ConstantPolicy::error;
  bool pca_embedding = false;  // train on PCA scores instead of the raw normalized triplet
  int pca_components = 2;
};

inline constexpr std::array<const char*, 3> kIndicatorColumns = {
    "inst_quality", "complexity", "human_capital"};

struct ColumnTransform {
  std::string name;
  bool winsorized = false;
  double winsor_cutoff = 0.0;
  double min = 0.0;  // post-winsorization bounds used by the [0,1] map
  double max = 1.0;
};

// Everything needed to map raw records into model space and back.
struct FittedTransforms {
  std::vector<ColumnTransform> columns;  // the three indicators, fixed order

  bool pca_embedding = false;
  std::vector<double> embed_mean, embed_sd;  // standardization before the embedding PCA
  PcaResult embedding_pca;                   // fitted when pca_embedding

  // Two-component PCA of the normalized triplets; first component backs the
  // pca_first development index, both back the latent embedding diagnostics.
  PcaResult index_pca;
  double index_score_min = 0.0;
  double index_score_max = 1.0;

  std::size_t output_dim() const;
  std::vector<std::string> output_names() const;

  // Raw indicator triplet -> normalized triplet in [0,1]^3 (winsor clamp then
  // min-max). Missing components yield nullopt.
  std::optional<std::array<double, 3>> normalize_record(const PanelRecord& record) const;
  // Normalized triplet -> model space (identity, or standardize + PCA scores).
  std::vector<double> embed(const std::array<double, 3>& normalized) const;
  // Model-space row -> raw indicator units.
  std::array<double, 3> inverse(const std::vector<double>& model_row) const;

  nn::Tensor apply_matrix(const Panel& panel, std::vector<std::size_t>* record_index = nullptr,
                          std::vector<std::string>* labels = nullptr,
                          const RegimeScheme* scheme = nullptr) const;
};

struct PreprocessResult {
  nn::Tensor matrix;                       // rows in model space
  std::vector<std::string> labels;         // regime label per row
  std::vector<std::size_t> record_index;   // row -> index into panel.records
  FittedTransforms transforms;
  ImputationLog log;
  std::size_t dropped_rows = 0;            // rows still missing after imputation
};

// impute -> winsorize -> min-max normalize -> optional standardize + PCA.
PreprocessResult preprocess(const Panel& panel, const PreprocessConfig& config,
                            const RegimeScheme* scheme = nullptr);

}  // namespace cforge::panel
