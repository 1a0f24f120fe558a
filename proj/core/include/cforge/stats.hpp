#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cforge/rng.hpp"
#include "cforge/tensor.hpp"

namespace cforge::stats {

struct TestResult {
  std::string name;
  double statistic = 0.0;
  std::optional<double> p_value;          // in [0, 1] when present
  std::map<std::string, double> details;  // auxiliary numbers, e.g. one-sided p, sample sizes
};

// Two-sample Kolmogorov-Smirnov. Statistic is sup |ECDF_a - ECDF_b|; the
// p-value uses the asymptotic Kolmogorov distribution with the standard
// effective-n correction.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Survival function of the Kolmogorov distribution at lambda.
double kolmogorov_sf(double lambda);

// Jensen-Shannon divergence (natural log, in [0, ln 2]) over a shared
// equal-width binning of the pooled range, with add-epsilon smoothing.
double js_divergence(std::span<const double> a, std::span<const double> b, int bins = 50,
                     double epsilon = 1e-10);

// Wilcoxon rank-sum with midrank ties. Exact p by enumeration when
// n_a + n_b <= 12, otherwise normal approximation with tie correction and
// continuity correction. statistic = rank sum of `a`; p_value is two-sided;
// details carry p_one_sided_{low,high}.
TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b);

double pearson_corr(std::span<const double> x, std::span<const double> y);

// sqrt((x - mu)^T Sigma^{-1} (x - mu)); Sigma must be symmetric positive
// definite (a ridge may be added by the caller beforehand).
double mahalanobis(std::span<const double> point, std::span<const double> mean,
                   const nn::Tensor& covariance);

nn::Tensor sample_mean(const nn::Tensor& matrix);        // 1 x d
nn::Tensor sample_covariance(const nn::Tensor& matrix);  // d x d, 1/(n-1)

// Gaussian Frechet distance between the moments of two sample matrices:
// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}). Tiny negative eigenvalues
// (> -1e-8) clamp to zero.
double frechet_gaussian(const nn::Tensor& a, const nn::Tensor& b);

struct MadScreenResult {
  std::vector<std::size_t> kept;      // original order preserved
  std::vector<std::size_t> excluded;
  double median = 0.0;
  double mad = 0.0;
};

// Excludes i where |x_i - median| / (1.4826 * MAD) > threshold; a zero MAD
// excludes nothing.
MadScreenResult mad_outlier_screen(std::span<const double> values, double threshold = 3.0);

struct EmbeddingCorrelation {
  std::vector<double> per_dimension;
  double pooled = 0.0;
};

// Rank-pairs real and synthetic latent scores within each dimension (type-7
// quantile pairing when the row counts differ) and reports Pearson r per
// dimension plus pooled over all dimensions.
EmbeddingCorrelation embedding_correlation(const nn::Tensor& real_latents,
                                           const nn::Tensor& synthetic_latents);

struct BootstrapDrawsResult {
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;                 // two-sided fraction of resample means crossing zero
  std::vector<double> resample_means;   // sorted
};

// Percentile bootstrap over per-draw counterfactual deltas.
BootstrapDrawsResult bootstrap_draws(std::span<const double> deltas, int replications, Rng rng);

}  // namespace cforge::stats
