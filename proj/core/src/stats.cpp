#include "cforge/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cforge/error.hpp"

namespace cforge::stats {

namespace {

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double kolmogorov_sf(double lambda) {
  if (lambda <= 0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    fail(errc::sample_size, "ks_two_sample: each sample needs at least 2 points");
  }
  std::vector<double> sa = sorted(a);
  std::vector<double> sb = sorted(b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  TestResult result;
  result.name = "ks_two_sample";
  result.statistic = d;
  result.p_value = kolmogorov_sf(lambda);
  result.details["n_a"] = na;
  result.details["n_b"] = nb;
  return result;
}

double js_divergence(std::span<const double> a, std::span<const double> b, int bins,
                     double epsilon) {
  if (a.empty() || b.empty()) fail(errc::sample_size, "js_divergence: empty sample");
  if (bins < 2) fail(errc::contract, "js_divergence: need at least 2 bins");
  double lo = a[0], hi = a[0];
  for (double x : a) { lo = std::min(lo, x); hi = std::max(hi, x); }
  for (double x : b) { lo = std::min(lo, x); hi = std::max(hi, x); }
  if (hi == lo) return 0.0;  // all mass in one shared bin
  const double width = (hi - lo) / bins;
  auto histogram = [&](std::span<const double> v) {
    std::vector<double> h(static_cast<std::size_t>(bins), epsilon);
    for (double x : v) {
      auto k = static_cast<std::size_t>(std::min<double>(bins - 1, (x - lo) / width));
      h[k] += 1.0;
    }
    const double total = static_cast<double>(v.size()) + bins * epsilon;
    for (double& p : h) p /= total;
    return h;
  };
  std::vector<double> p = histogram(a);
  std::vector<double> q = histogram(b);
  double js = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0) js += 0.5 * p[k] * std::log(p[k] / m);
    if (q[k] > 0) js += 0.5 * q[k] * std::log(q[k] / m);
  }
  return std::max(js, 0.0);
}

namespace {

// Midranks of the pooled sample; returns (ranks for a, ranks for b, tie sizes).
void midranks(std::span<const double> a, std::span<const double> b, std::vector<double>& ra,
              std::vector<double>& rb, std::vector<std::size_t>& ties) {
  struct Item { double value; bool from_a; std::size_t index; };
  std::vector<Item> pooled;
  pooled.reserve(a.size() + b.size());
  for (std::size_t i = 0; i < a.size(); ++i) pooled.push_back({a[i], true, i});
  for (std::size_t i = 0; i < b.size(); ++i) pooled.push_back({b[i], false, i});
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Item& x, const Item& y) { return x.value < y.value; });
  ra.assign(a.size(), 0);
  rb.assign(b.size(), 0);
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    if (j - i > 1) ties.push_back(j - i);
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].from_a) ra[pooled[k].index] = rank;
      else rb[pooled[k].index] = rank;
    }
    i = j;
  }
}

// Exact distribution of the rank sum of a size-na subset of the pooled
// midranks, by enumeration of all C(n, na) subsets.
void enumerate_rank_sums(const std::vector<double>& pooled_ranks, std::size_t na,
                         double observed, double& p_low, double& p_high) {
  const std::size_t n = pooled_ranks.size();
  std::vector<std::size_t> pick(na);
  for (std::size_t i = 0; i < na; ++i) pick[i] = i;
  std::size_t total = 0, low = 0, high = 0;
  const double tol = 1e-9;
  while (true) {
    double w = 0;
    for (std::size_t i : pick) w += pooled_ranks[i];
    ++total;
    if (w <= observed + tol) ++low;
    if (w >= observed - tol) ++high;
    // next combination
    std::size_t i = na;
    while (i-- > 0) {
      if (pick[i] != i + n - na) {
        ++pick[i];
        for (std::size_t j = i + 1; j < na; ++j) pick[j] = pick[j - 1] + 1;
        break;
      }
      if (i == 0) {
        p_low = static_cast<double>(low) / static_cast<double>(total);
        p_high = static_cast<double>(high) / static_cast<double>(total);
        return;
      }
    }
  }
}

}  // namespace

TestResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3 || b.size() < 3) {
    fail(errc::sample_size, "wilcoxon_rank_sum: each sample needs at least 3 values");
  }
  std::vector<double> ra, rb;
  std::vector<std::size_t> ties;
  midranks(a, b, ra, rb, ties);
  double w = 0;
  for (double r : ra) w += r;

  TestResult result;
  result.name = "wilcoxon_rank_sum";
  result.statistic = w;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  result.details["n_a"] = na;
  result.details["n_b"] = nb;

  if (a.size() + b.size() <= 12) {
    std::vector<double> pooled_ranks;
    pooled_ranks.insert(pooled_ranks.end(), ra.begin(), ra.end());
    pooled_ranks.insert(pooled_ranks.end(), rb.begin(), rb.end());
    double p_low = 1.0, p_high = 1.0;
    enumerate_rank_sums(pooled_ranks, a.size(), w, p_low, p_high);
    result.details["p_one_sided_low"] = p_low;
    result.details["p_one_sided_high"] = p_high;
    result.details["exact"] = 1.0;
    result.p_value = std::min(1.0, 2.0 * std::min(p_low, p_high));
  } else {
    const double mean_w = na * (n + 1.0) / 2.0;
    double tie_term = 0.0;
    for (std::size_t t : ties) {
      const double td = static_cast<double>(t);
      tie_term += td * td * td - td;
    }
    const double var_w = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var_w <= 0) {  // every observation tied
      result.p_value = 1.0;
      result.details["exact"] = 0.0;
      return result;
    }
    const double sd = std::sqrt(var_w);
    const double delta = w - mean_w;
    const double continuity = delta > 0 ? -0.5 : (delta < 0 ? 0.5 : 0.0);
    const double z = (delta + continuity) / sd;
    result.details["z"] = z;
    result.details["exact"] = 0.0;
    result.details["p_one_sided_low"] = normal_cdf(z);
    result.details["p_one_sided_high"] = 1.0 - normal_cdf(z);
    result.p_value = std::min(1.0, 2.0 * std::min(normal_cdf(z), 1.0 - normal_cdf(z)));
  }
  return result;
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(errc::shape, "pearson_corr: length mismatch");
  if (x.size() < 3) fail(errc::sample_size, "pearson_corr: need at least 3 pairs");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) fail(errc::degenerate_series, "pearson_corr: constant input");
  return sxy / std::sqrt(sxx * syy);
}

nn::Tensor sample_mean(const nn::Tensor& matrix) {
  nn::Tensor mean(1, matrix.cols());
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    for (std::size_t j = 0; j < matrix.cols(); ++j) mean.at(0, j) += matrix.at(i, j);
  for (std::size_t j = 0; j < matrix.cols(); ++j) {
    mean.at(0, j) /= static_cast<double>(matrix.rows());
  }
  return mean;
}

nn::Tensor sample_covariance(const nn::Tensor& matrix) {
  const std::size_t n = matrix.rows();
  const std::size_t d = matrix.cols();
  if (n < 2) fail(errc::sample_size, "sample_covariance: need at least 2 rows");
  nn::Tensor mean = sample_mean(matrix);
  nn::Tensor cov(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) {
      const double dp = matrix.at(i, p) - mean.at(0, p);
      for (std::size_t q = 0; q < d; ++q) {
        cov.at(p, q) += dp * (matrix.at(i, q) - mean.at(0, q));
      }
    }
  }
  for (auto& x : cov.vec()) x /= static_cast<double>(n - 1);
  return cov;
}

double mahalanobis(std::span<const double> point, std::span<const double> mean,
                   const nn::Tensor& covariance) {
  const std::size_t d = point.size();
  if (mean.size() != d || covariance.rows() != d || covariance.cols() != d) {
    fail(errc::shape, "mahalanobis: dimension mismatch");
  }
  Eigen::MatrixXd sigma(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = covariance.at(i, j);
  Eigen::VectorXd diff(d);
  for (std::size_t i = 0; i < d; ++i) diff(static_cast<Eigen::Index>(i)) = point[i] - mean[i];
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    fail(errc::singular, "mahalanobis: covariance is not positive definite");
  }
  const double q = diff.dot(llt.solve(diff));
  return std::sqrt(std::max(q, 0.0));
}

namespace {

Eigen::MatrixXd to_eigen(const nn::Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
  return m;
}

// Symmetric PSD square root via eigendecomposition; eigenvalues in
// (-1e-8, 0) clamp to zero, more negative ones are a numeric error.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) {
    fail(errc::numeric, std::string(what) + ": matrix square root did not converge");
  }
  Eigen::VectorXd values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-8) {
      fail(errc::numeric, std::string(what) + ": matrix is not positive semi-definite");
    }
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_gaussian(const nn::Tensor& a, const nn::Tensor& b) {
  if (a.cols() != b.cols()) fail(errc::shape, "frechet_gaussian: dimension mismatch");
  const std::size_t d = a.cols();
  if (a.rows() < d + 1 || b.rows() < d + 1) {
    fail(errc::sample_size, "frechet_gaussian: need at least d+1 rows per sample");
  }
  nn::Tensor mu_a = sample_mean(a);
  nn::Tensor mu_b = sample_mean(b);
  Eigen::MatrixXd sa = to_eigen(sample_covariance(a));
  Eigen::MatrixXd sb = to_eigen(sample_covariance(b));

  double mean_term = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = mu_a.at(0, j) - mu_b.at(0, j);
    mean_term += diff * diff;
  }
  // Tr((Sa Sb)^{1/2}) computed via the symmetric form Sa^{1/2} Sb Sa^{1/2}.
  Eigen::MatrixXd root_a = psd_sqrt(sa, "frechet_gaussian");
  Eigen::MatrixXd inner = root_a * sb * root_a;
  Eigen::MatrixXd cross = psd_sqrt(inner, "frechet_gaussian");
  const double trace_term = sa.trace() + sb.trace() - 2.0 * cross.trace();
  return std::max(mean_term + trace_term, 0.0);
}

MadScreenResult mad_outlier_screen(std::span<const double> values, double threshold) {
  if (values.size() < 3) fail(errc::sample_size, "mad_outlier_screen: need at least 3 values");
  std::vector<double> v = sorted(values);
  const std::size_t n = v.size();
  const double median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - median);
  std::vector<double> sd = sorted(dev);
  const double mad = n % 2 == 1 ? sd[n / 2] : 0.5 * (sd[n / 2 - 1] + sd[n / 2]);

  MadScreenResult result;
  result.median = median;
  result.mad = mad;
  const double scale = 1.4826 * mad;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mad > 0 && dev[i] / scale > threshold) result.excluded.push_back(i);
    else result.kept.push_back(i);
  }
  return result;
}

EmbeddingCorrelation embedding_correlation(const nn::Tensor& real_latents,
                                           const nn::Tensor& synthetic_latents) {
  if (real_latents.cols() != synthetic_latents.cols()) {
    fail(errc::shape, "embedding_correlation: dimension mismatch");
  }
  const std::size_t m = std::min(real_latents.rows(), synthetic_latents.rows());
  if (m < 3) fail(errc::sample_size, "embedding_correlation: need at least 3 rows");

  EmbeddingCorrelation out;
  std::vector<double> pooled_r, pooled_s;
  for (std::size_t j = 0; j < real_latents.cols(); ++j) {
    std::vector<double> r = sorted(real_latents.col(j));
    std::vector<double> s = sorted(synthetic_latents.col(j));
    std::vector<double> rp(m), sp(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double p = m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(m - 1);
      auto at_quantile = [&](const std::vector<double>& v) {
        const double h = static_cast<double>(v.size() - 1) * p;
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
      };
      rp[i] = at_quantile(r);
      sp[i] = at_quantile(s);
    }
    out.per_dimension.push_back(pearson_corr(rp, sp));
    pooled_r.insert(pooled_r.end(), rp.begin(), rp.end());
    pooled_s.insert(pooled_s.end(), sp.begin(), sp.end());
  }
  out.pooled = pearson_corr(pooled_r, pooled_s);
  return out;
}

BootstrapDrawsResult bootstrap_draws(std::span<const double> deltas, int replications, Rng rng) {
  if (deltas.size() < 10) fail(errc::sample_size, "bootstrap_draws: need at least 10 deltas");
  if (replications < 2) fail(errc::contract, "bootstrap_draws: need at least 2 replications");
  BootstrapDrawsResult result;
  result.resample_means.reserve(static_cast<std::size_t>(replications));
  const std::size_t n = deltas.size();
  std::size_t non_negative = 0, non_positive = 0;
  for (int rep = 0; rep < replications; ++rep) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += deltas[rng.uniform_int(n)];
    const double mean = sum / static_cast<double>(n);
    result.resample_means.push_back(mean);
    if (mean >= 0) ++non_negative;
    if (mean <= 0) ++non_positive;
  }
  std::sort(result.resample_means.begin(), result.resample_means.end());
  auto percentile = [&](double p) {
    const double h = static_cast<double>(result.resample_means.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, result.resample_means.size() - 1);
    return result.resample_means[lo] +
           (h - std::floor(h)) * (result.resample_means[hi] - result.resample_means[lo]);
  };
  result.ci_low = percentile(0.025);
  result.ci_high = percentile(0.975);
  const double b = static_cast<double>(replications);
  result.p_value = std::min(1.0, 2.0 * std::min(static_cast<double>(non_negative) / b,
                                                static_cast<double>(non_positive) / b));
  return result;
}

}  // namespace cforge::stats
