#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simcal/prob_vector.hpp"

namespace simcal {

// Immutable i.i.d. output data set with its ascending order cached.
class OutputSample {
 public:
  explicit OutputSample(std::vector<double> values);

  // One observation per line; blank lines and '#' comments ignored.
  static OutputSample load(const std::filesystem::path& file);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
};

enum class BoundsMode { continuous_cdf, discrete_cdf, discrete_mass };

// Per-threshold interval constraints [lower_j, upper_j] on the candidate
// output distribution, i.e. the uncertainty set in constraint form.
struct KsBounds {
  std::vector<double> thresholds;
  std::vector<double> lower;
  std::vector<double> upper;
  BoundsMode mode = BoundsMode::continuous_cdf;
  double alpha = 0.05;
  double half_width = 0.0;  // the band radius actually used (delta included)

  std::size_t size() const { return thresholds.size(); }
  IntervalProjector interval(std::size_t j) const {
    return IntervalProjector{lower[j], upper[j]};
  }
};

// (left_limit, right_limit) of the empirical CDF at y:
// left = #{y_i < y}/n, right = #{y_i <= y}/n.
std::pair<double, double> empirical_cdf_limits(const OutputSample& sample,
                                               double y);

// Two-sided Kolmogorov law K(x) = 1 - 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 x^2};
// series truncated when a term drops below 1e-12.
double kolmogorov_cdf(double x);

// Inverse of kolmogorov_cdf at 1 - alpha, solved by bisection on [0.2, 3.0]
// to 1e-6. ks_quantile(0.05) = 1.3581.
double ks_quantile(double alpha);

// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
double normal_quantile(double prob);

// Continuous-output band: thresholds are the (deduplicated) data points,
// half_width = ks_quantile(alpha)/sqrt(n) + inflate_delta, and each interval
// is [F(y_j+) - hw, F(y_j-) + hw] clamped to [0, 1].
KsBounds build_continuous_bounds(const OutputSample& sample, double alpha,
                                 double inflate_delta = 0.0);

// Discrete-output CDF band over the distinct observed values up to the first
// attaining empirical CDF 1; conservative width q_{1-alpha}/sqrt(n).
KsBounds build_discrete_cdf_bounds(const OutputSample& sample, double alpha);

// Per-mass intervals around observed proportions with a Bonferroni-corrected
// normal-approximation binomial half width z_{1-alpha/(2K)} sqrt(0.25/n).
KsBounds build_discrete_mass_bounds(const OutputSample& sample, double alpha);

}  // namespace simcal
