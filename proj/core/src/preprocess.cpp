#include "cforge/preprocess.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cforge/error.hpp"

namespace cforge::panel {

std::vector<double> minmax_normalize(const std::vector<double>& series, ConstantPolicy policy) {
  if (series.empty()) fail(errc::empty_input, "minmax_normalize: empty series");
  double lo = series[0], hi = series[0];
  for (double x : series) {
    if (!std::isfinite(x)) fail(errc::numeric, "minmax_normalize: non-finite value");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  std::vector<double> out(series.size());
  if (hi == lo) {
    if (policy == ConstantPolicy::error) {
      fail(errc::degenerate_series, "minmax_normalize: constant series");
    }
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - lo) / span;
  return out;
}

std::vector<double> standardize(const std::vector<double>& series) {
  if (series.size() < 2) fail(errc::sample_size, "standardize: need at least 2 values");
  double mean = 0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(series.size());
  double var = 0;
  for (double x : series) var += (x - mean) * (x - mean);
  var /= static_cast<double>(series.size());  // population variance
  if (var == 0.0) fail(errc::degenerate_series, "standardize: constant series");
  const double sd = std::sqrt(var);
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = (series[i] - mean) / sd;
  return out;
}

double quantile_type7(std::vector<double> series, double p) {
  if (series.empty()) fail(errc::empty_input, "quantile: empty series");
  if (p < 0.0 || p > 1.0) fail(errc::contract, "quantile: p must be in [0, 1]");
  std::sort(series.begin(), series.end());
  const double h = static_cast<double>(series.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, series.size() - 1);
  const double frac = h - std::floor(h);
  return series[lo] + frac * (series[hi] - series[lo]);
}

std::vector<double> winsorize(const std::vector<double>& series, double upper_pct) {
  if (series.empty()) fail(errc::empty_input, "winsorize: empty series");
  if (upper_pct <= 0.5 || upper_pct >= 1.0) {
    fail(errc::contract, "winsorize: upper percentile must be in (0.5, 1)");
  }
  const double cutoff = quantile_type7(series, upper_pct);
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out[i] = std::min(series[i], cutoff);
  return out;
}

namespace {

std::optional<double>& record_field(PanelRecord& rec, const std::string& variable) {
  if (variable == "inst_quality") return rec.inst_quality;
  if (variable == "complexity") return rec.complexity;
  if (variable == "human_capital") return rec.human_capital;
  if (variable == "gdp_pc") return rec.gdp_pc;
  if (variable == "hdi") return rec.hdi;
  if (variable == "eci") return rec.eci;
  if (variable == "gini") return rec.gini;
  fail(errc::schema, "unknown panel variable '" + variable + "'");
}

const std::optional<double>& record_field(const PanelRecord& rec, const std::string& variable) {
  return record_field(const_cast<PanelRecord&>(rec), variable);
}

}  // namespace

Panel impute_rolling_median(const Panel& panel, const std::string& variable, int window_years,
                            ImputationLog* log) {
  if (window_years < 3 || window_years % 2 == 0) {
    fail(errc::contract, "imputation window must be odd and >= 3");
  }
  // Validates the variable name up front.
  if (!panel.records.empty()) (void)record_field(panel.records.front(), variable);
  const int half = (window_years - 1) / 2;

  // country -> (year -> observed value)
  std::map<std::string, std::map<int, double>> observed;
  for (const auto& rec : panel.records) {
    const auto& v = record_field(rec, variable);
    if (v) observed[rec.country][rec.year] = *v;
  }

  Panel out = panel;
  for (auto& rec : out.records) {
    auto& field = record_field(rec, variable);
    if (field) continue;
    std::vector<double> window;
    auto it = observed.find(rec.country);
    if (it != observed.end()) {
      for (auto const& [year, value] : it->second) {
        if (year >= rec.year - half && year <= rec.year + half) window.push_back(value);
      }
    }
    if (window.empty()) {
      if (log) log->unresolved.push_back({rec.country, rec.year, variable, 0.0});
      continue;
    }
    std::sort(window.begin(), window.end());
    const std::size_t n = window.size();
    const double median =
        n % 2 == 1 ? window[n / 2] : 0.5 * (window[n / 2 - 1] + window[n / 2]);
    field = median;
    if (log) log->imputed.push_back({rec.country, rec.year, variable, median});
  }
  return out;
}

PcaResult pca_fit(const nn::Tensor& matrix, int k) {
  const std::size_t n = matrix.rows();
  const std::size_t d = matrix.cols();
  if (n < 2) fail(errc::sample_size, "pca_fit: need at least 2 rows");
  if (k < 1 || static_cast<std::size_t>(k) > d) {
    fail(errc::contract, "pca_fit: k must be in [1, " + std::to_string(d) + "]");
  }
  if (!matrix.all_finite()) fail(errc::numeric, "pca_fit: non-finite input");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix.at(i, j);
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(errc::numeric, "pca_fit: eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();   // ascending
  Eigen::MatrixXd vectors = eig.eigenvectors();

  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) total += std::max(values(i), 0.0);
  const double rank_tol = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  int rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > rank_tol) ++rank;
  }
  if (k > rank) {
    fail(errc::rank, "pca_fit: k = " + std::to_string(k) + " exceeds matrix rank " +
                         std::to_string(rank));
  }

  PcaResult result;
  result.means.assign(mean.data(), mean.data() + mean.size());
  result.components = nn::Tensor(d, static_cast<std::size_t>(k));
  result.explained_variance_ratio.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = values.size() - 1 - c;  // descending order
    Eigen::VectorXd v = vectors.col(src);
    // Deterministic sign: the largest-magnitude loading is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) result.components.at(j, static_cast<std::size_t>(c)) = v(static_cast<Eigen::Index>(j));
    result.explained_variance_ratio[static_cast<std::size_t>(c)] =
        total > 0 ? std::max(values(src), 0.0) / total : 0.0;
  }
  return result;
}

nn::Tensor pca_project(const PcaResult& pca, const nn::Tensor& matrix) {
  const std::size_t d = pca.means.size();
  const std::size_t k = pca.components.cols();
  if (matrix.cols() != d) {
    fail(errc::shape, "pca_project: expected " + std::to_string(d) + " columns, got " +
                          std::to_string(matrix.cols()));
  }
  nn::Tensor out(matrix.rows(), k);
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0;
      for (std::size_t j = 0; j < d; ++j) {
        s += (matrix.at(i, j) - pca.means[j]) * pca.components.at(j, c);
      }
      out.at(i, c) = s;
    }
  }
  return out;
}

nn::Tensor pca_reconstruct(const PcaResult& pca, const nn::Tensor& scores) {
  const std::size_t d = pca.means.size();
  const std::size_t k = pca.components.cols();
  if (scores.cols() != k) {
    fail(errc::shape, "pca_reconstruct: expected " + std::to_string(k) + " columns, got " +
                          std::to_string(scores.cols()));
  }
  nn::Tensor out(scores.rows(), d);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = pca.means[j];
      for (std::size_t c = 0; c < k; ++c) s += scores.at(i, c) * pca.components.at(j, c);
      out.at(i, j) = s;
    }
  }
  return out;
}

std::size_t FittedTransforms::output_dim() const {
  return pca_embedding ? embedding_pca.components.cols() : columns.size();
}

std::vector<std::string> FittedTransforms::output_names() const {
  std::vector<std::string> names;
  if (pca_embedding) {
    for (std::size_t c = 0; c < embedding_pca.components.cols(); ++c) {
      names.push_back("pc" + std::to_string(c + 1));
    }
  } else {
    for (const auto& col : columns) names.push_back(col.name);
  }
  return names;
}

std::optional<std::array<double, 3>> FittedTransforms::normalize_record(
    const PanelRecord& record) const {
  const std::optional<double>* fields[3] = {&record.inst_quality, &record.complexity,
                                            &record.human_capital};
  std::array<double, 3> out{};
  for (std::size_t j = 0; j < 3; ++j) {
    if (!fields[j]->has_value()) return std::nullopt;
    double x = **fields[j];
    const ColumnTransform& t = columns[j];
    if (t.winsorized) x = std::min(x, t.winsor_cutoff);
    const double span = t.max - t.min;
    out[j] = span > 0 ? (x - t.min) / span : 0.5;
  }
  return out;
}

std::vector<double> FittedTransforms::embed(const std::array<double, 3>& normalized) const {
  if (!pca_embedding) return {normalized.begin(), normalized.end()};
  nn::Tensor row(1, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    row.at(0, j) = (normalized[j] - embed_mean[j]) / embed_sd[j];
  }
  nn::Tensor scores = pca_project(embedding_pca, row);
  return scores.vec();
}

std::array<double, 3> FittedTransforms::inverse(const std::vector<double>& model_row) const {
  std::array<double, 3> normalized{};
  if (pca_embedding) {
    nn::Tensor scores(1, model_row.size());
    for (std::size_t c = 0; c < model_row.size(); ++c) scores.at(0, c) = model_row[c];
    nn::Tensor rec = pca_reconstruct(embedding_pca, scores);
    for (std::size_t j = 0; j < 3; ++j) {
      normalized[j] = rec.at(0, j) * embed_sd[j] + embed_mean[j];
    }
  } else {
    if (model_row.size() != 3) fail(errc::shape, "inverse: expected a 3-column row");
    std::copy(model_row.begin(), model_row.end(), normalized.begin());
  }
  std::array<double, 3> raw{};
  for (std::size_t j = 0; j < 3; ++j) {
    const ColumnTransform& t = columns[j];
    raw[j] = normalized[j] * (t.max - t.min) + t.min;
  }
  return raw;
}

nn::Tensor FittedTransforms::apply_matrix(const Panel& panel,
                                          std::vector<std::size_t>* record_index,
                                          std::vector<std::string>* labels,
                                          const RegimeScheme* scheme) const {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < panel.records.size(); ++i) {
    const auto& rec = panel.records[i];
    auto normalized = normalize_record(rec);
    if (!normalized) continue;
    rows.push_back(embed(*normalized));
    if (record_index) record_index->push_back(i);
    if (labels) labels->push_back(scheme ? scheme->label_for(rec.country) : rec.regime);
  }
  nn::Tensor out(rows.size(), output_dim());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) = rows[i][j];
  return out;
}

PreprocessResult preprocess(const Panel& panel, const PreprocessConfig& config,
                            const RegimeScheme* scheme) {
  if (panel.records.empty()) fail(errc::empty_input, "preprocess: empty panel");
  if (scheme) scheme->validate_covers(panel);

  PreprocessResult result;

  // 1) rolling-median imputation per indicator
  Panel imputed = panel;
  for (const char* variable : kIndicatorColumns) {
    imputed = impute_rolling_median(imputed, variable, config.impute_window, &result.log);
  }

  // Rows still missing an indicator cannot enter the training matrix.
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < imputed.records.size(); ++i) {
    const auto& rec = imputed.records[i];
    if (rec.inst_quality && rec.complexity && rec.human_capital) usable.push_back(i);
  }
  result.dropped_rows = imputed.records.size() - usable.size();
  if (usable.empty()) fail(errc::data, "preprocess: no usable rows after imputation");

  // 2) winsorize and 3) min-max normalize, column by column
  result.transforms.columns.resize(3);
  nn::Tensor normalized(usable.size(), 3);
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> column(usable.size());
    for (std::size_t i = 0; i < usable.size(); ++i) {
      const auto& rec = imputed.records[usable[i]];
      const auto& field = record_field(rec, kIndicatorColumns[j]);
      column[i] = *field;
    }
    ColumnTransform& t = result.transforms.columns[j];
    t.name = kIndicatorColumns[j];
    if (config.winsorize) {
      t.winsorized = true;
      t.winsor_cutoff = quantile_type7(column, config.winsorize_pct);
      for (double& x : column) x = std::min(x, t.winsor_cutoff);
    }
    double lo = column[0], hi = column[0];
    for (double x : column) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (hi == lo && config.constant_policy == ConstantPolicy::error) {
      fail(errc::degenerate_series,
           std::string("preprocess: constant column ") + kIndicatorColumns[j]);
    }
    t.min = lo;
    t.max = hi;
    const double span = hi - lo;
    for (std::size_t i = 0; i < usable.size(); ++i) {
      normalized.at(i, j) = span > 0 ? (column[i] - lo) / span : 0.5;
    }
  }

  // Index PCA over the normalized triplets (backs the pca_first index and the
  // latent embedding diagnostics).
  {
    int k = std::min<int>(2, 3);
    FittedTransforms& t = result.transforms;
    t.index_pca = pca_fit(normalized, k);
    nn::Tensor scores = pca_project(t.index_pca, normalized);
    double lo = scores.at(0, 0), hi = scores.at(0, 0);
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      lo = std::min(lo, scores.at(i, 0));
      hi = std::max(hi, scores.at(i, 0));
    }
    t.index_score_min = lo;
    t.index_score_max = hi;
  }

  // 4) optional standardize + PCA embedding
  if (config.pca_embedding) {
    FittedTransforms& t = result.transforms;
    t.pca_embedding = true;
    t.embed_mean.resize(3);
    t.embed_sd.resize(3);
    nn::Tensor standardized(normalized.rows(), 3);
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> col = normalized.col(j);
      double mean = 0;
      for (double x : col) mean += x;
      mean /= static_cast<double>(col.size());
      double var = 0;
      for (double x : col) var += (x - mean) * (x - mean);
      var /= static_cast<double>(col.size());
      if (var == 0.0) fail(errc::degenerate_series, "preprocess: constant normalized column");
      t.embed_mean[j] = mean;
      t.embed_sd[j] = std::sqrt(var);
      for (std::size_t i = 0; i < col.size(); ++i) {
        standardized.at(i, j) = (col[i] - mean) / t.embed_sd[j];
      }
    }
    t.embedding_pca = pca_fit(standardized, config.pca_components);
    result.matrix = pca_project(t.embedding_pca, standardized);
  } else {
    result.matrix = normalized;
  }

  result.record_index = usable;
  result.labels.reserve(usable.size());
  for (std::size_t i : usable) {
    const auto& rec = imputed.records[i];
    result.labels.push_back(scheme ? scheme->label_for(rec.country) : rec.regime);
  }
  return result;
}

}  // namespace cforge::panel
