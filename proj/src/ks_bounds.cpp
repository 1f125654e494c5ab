#include "simcal/ks_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace simcal {

OutputSample::OutputSample(std::vector<double> values)
    : values_(std::move(values)), sorted_(values_) {
  if (values_.empty())
    throw std::invalid_argument("OutputSample: need at least one observation");
  std::sort(sorted_.begin(), sorted_.end());
}

OutputSample OutputSample::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw std::runtime_error("cannot open data file: " + file.string());
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    if (ls >> v) {
      std::string rest;
      if (ls >> rest)
        throw std::runtime_error(file.string() + ":" +
                                 std::to_string(lineno) +
                                 ": expected one value per line");
      vals.push_back(v);
    } else if (!line.empty() &&
               line.find_first_not_of(" \t\r") != std::string::npos) {
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": not a number: '" + line + "'");
    }
  }
  if (vals.empty())
    throw std::runtime_error(file.string() + ": no observations found");
  return OutputSample(std::move(vals));
}

std::pair<double, double> empirical_cdf_limits(const OutputSample& sample,
                                               double y) {
  const auto& s = sample.sorted();
  const double n = static_cast<double>(s.size());
  const auto lo = std::lower_bound(s.begin(), s.end(), y) - s.begin();
  const auto hi = std::upper_bound(s.begin(), s.end(), y) - s.begin();
  return {static_cast<double>(lo) / n, static_cast<double>(hi) / n};
}

double kolmogorov_cdf(double x) {
  if (x <= 0.0) return 0.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j < 1000; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::max(0.0, 1.0 - 2.0 * sum);
}

double ks_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("ks_quantile: alpha must be in (0,1)");
  double lo = 0.2, hi = 3.0;
  const double target = 1.0 - alpha;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_cdf(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::invalid_argument("normal_quantile: prob must be in (0,1)");
  // Acklam 2003.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (prob < plow) {
    q = std::sqrt(-2.0 * std::log(prob));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (prob > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - prob));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = prob - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {
double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

std::vector<double> distinct_sorted(const OutputSample& sample) {
  std::vector<double> v = sample.sorted();
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}
}  // namespace

KsBounds build_continuous_bounds(const OutputSample& sample, double alpha,
                                 double inflate_delta) {
  if (inflate_delta < 0.0)
    throw std::invalid_argument("build_continuous_bounds: delta must be >= 0");
  KsBounds b;
  b.mode = BoundsMode::continuous_cdf;
  b.alpha = alpha;
  const double n = static_cast<double>(sample.size());
  b.half_width = ks_quantile(alpha) / std::sqrt(n) + inflate_delta;
  // Duplicate data points would yield identical constraints; deduplicate.
  b.thresholds = distinct_sorted(sample);
  for (double y : b.thresholds) {
    const auto [left, right] = empirical_cdf_limits(sample, y);
    b.lower.push_back(clamp01(right - b.half_width));
    b.upper.push_back(clamp01(left + b.half_width));
  }
  return b;
}

KsBounds build_discrete_cdf_bounds(const OutputSample& sample, double alpha) {
  KsBounds b;
  b.mode = BoundsMode::discrete_cdf;
  b.alpha = alpha;
  const double n = static_cast<double>(sample.size());
  b.half_width = ks_quantile(alpha) / std::sqrt(n);
  // All distinct values: the empirical CDF reaches 1 exactly at the largest.
  b.thresholds = distinct_sorted(sample);
  for (double w : b.thresholds) {
    const double center = empirical_cdf_limits(sample, w).second;
    b.lower.push_back(clamp01(center - b.half_width));
    b.upper.push_back(clamp01(center + b.half_width));
  }
  return b;
}

KsBounds build_discrete_mass_bounds(const OutputSample& sample, double alpha) {
  KsBounds b;
  b.mode = BoundsMode::discrete_mass;
  b.alpha = alpha;
  const double n = static_cast<double>(sample.size());
  b.thresholds = distinct_sorted(sample);
  const double K = static_cast<double>(b.thresholds.size());
  // Normal-approximation binomial half width with Bonferroni across the K
  // masses; swappable for an exact interval if needed.
  const double z = normal_quantile(1.0 - alpha / (2.0 * K));
  b.half_width = z * std::sqrt(0.25 / n);
  for (double w : b.thresholds) {
    const auto [left, right] = empirical_cdf_limits(sample, w);
    const double mass = right - left;
    b.lower.push_back(clamp01(mass - b.half_width));
    b.upper.push_back(clamp01(mass + b.half_width));
  }
  return b;
}

}  // namespace simcal
