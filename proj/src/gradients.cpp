#include "simcal/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simcal {

namespace {
// Batch purposes under one estimator stream: 0 = X, 1 = X~, 2 = X~~.
constexpr std::uint64_t kBatchResidual = 0;
constexpr std::uint64_t kBatchScore = 1;
constexpr std::uint64_t kBatchObjective = 2;

void clip_in_place(std::vector<double>& v, double bound, ClipCounter* clips) {
  for (double& x : v) {
    if (!std::isfinite(x))
      throw std::runtime_error("gradient estimate is not finite");
    if (std::abs(x) > bound) {
      x = std::clamp(x, -bound, bound);
      if (clips) ++clips->events;
    }
  }
}

// Index of the first threshold >= h, i.e. I(h <= y_j) = 1 exactly for j >= it.
std::size_t first_covering(std::span<const double> thresholds, double h) {
  return static_cast<std::size_t>(
      std::lower_bound(thresholds.begin(), thresholds.end(), h) -
      thresholds.begin());
}

// grad_i = (2/M2) sum_r coef(r) S_i(X~_r; p) where coef(r) is the suffix sum
// of residuals over the thresholds X~_r's output falls under. The score is
// sparse (S_i = count_i/p_i - T), so each replication touches only the
// indices it used plus a shared -T term.
std::vector<double> score_weighted_sum(const OutputModel& h,
                                       std::span<const double> thresholds,
                                       std::span<const double> residual_suffix,
                                       const ProbabilityVector& p,
                                       const SupportSet& support,
                                       std::size_t M2, RngStream batch,
                                       std::vector<double>* first_counts) {
  const std::size_t m = p.dim();
  const double T = static_cast<double>(h.horizon);
  std::vector<double> acc(m, 0.0);
  double coef_total = 0.0;
  if (first_counts) first_counts->assign(thresholds.size() + 1, 0.0);
  for (std::size_t r = 0; r < M2; ++r) {
    const Replication rep =
        simulate_once(h.map, h.horizon, p, support, batch.sub(r));
    const std::size_t f = first_covering(thresholds, rep.value);
    if (first_counts) (*first_counts)[f] += 1.0;
    const double coef = residual_suffix[f];
    coef_total += coef;
    for (std::uint32_t i : rep.indices) acc[i] += coef / p.weights[i];
  }
  for (std::size_t i = 0; i < m; ++i)
    acc[i] = 2.0 * (acc[i] - T * coef_total) / static_cast<double>(M2);
  return acc;
}
}  // namespace

double gradient_clip_bound(std::size_t horizon, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("clip bound: eps must be > 0");
  return 10.0 * static_cast<double>(horizon) / eps;
}

std::vector<double> estimate_objective_gradient(const TargetObjective& g,
                                                const ProbabilityVector& p,
                                                const SupportSet& support,
                                                std::size_t M3, RngStream base,
                                                double eps,
                                                ClipCounter* clips,
                                                double* batch_mean) {
  if (M3 == 0)
    throw std::invalid_argument("estimate_objective_gradient: M3 must be > 0");
  const std::size_t m = p.dim();
  const double S = static_cast<double>(g.horizon);
  const RngStream batch = base.sub(kBatchObjective);
  std::vector<double> acc(m, 0.0);
  double gsum = 0.0;
  for (std::size_t r = 0; r < M3; ++r) {
    const Replication rep =
        simulate_once(g.map, g.horizon, p, support, batch.sub(r));
    gsum += rep.value;
    for (std::uint32_t i : rep.indices) acc[i] += rep.value / p.weights[i];
  }
  for (std::size_t i = 0; i < m; ++i)
    acc[i] = (acc[i] - S * gsum) / static_cast<double>(M3);
  if (batch_mean) *batch_mean = gsum / static_cast<double>(M3);
  clip_in_place(acc, gradient_clip_bound(g.horizon, eps), clips);
  return acc;
}

PenaltyGradP estimate_penalty_gradient_p(const OutputModel& h,
                                         const KsBounds& bounds,
                                         const ProbabilityVector& p,
                                         const SupportSet& support,
                                         std::span<const double> s,
                                         std::size_t M1, std::size_t M2,
                                         RngStream base, double eps,
                                         ClipCounter* clips) {
  const std::size_t n = bounds.size();
  if (s.size() != n)
    throw std::invalid_argument("penalty gradient: slack dimension mismatch");
  if (M1 == 0 || M2 == 0)
    throw std::invalid_argument("penalty gradient: batch sizes must be > 0");

  // Batch X: per-threshold indicator means via one simulation pass.
  std::vector<double> count1(n + 1, 0.0);
  const RngStream b1 = base.sub(kBatchResidual);
  for (std::size_t r = 0; r < M1; ++r) {
    const double hv =
        simulate_once(h.map, h.horizon, p, support, b1.sub(r)).value;
    count1[first_covering(bounds.thresholds, hv)] += 1.0;
  }
  std::vector<double> u1(n);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += count1[j];
    u1[j] = acc / static_cast<double>(M1);
  }

  // residual_suffix[f] = sum_{j >= f} (u1_j - s_j); a replication in the
  // score batch whose output first covers threshold f contributes to exactly
  // those terms.
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;)
    suffix[j] = suffix[j + 1] + (u1[j] - s[j]);

  PenaltyGradP out;
  std::vector<double> count2;  // score-batch indicator counts, for pooling
  out.grad_p = score_weighted_sum(h, bounds.thresholds, suffix, p, support,
                                  M2, base.sub(kBatchScore), &count2);
  clip_in_place(out.grad_p, gradient_clip_bound(h.horizon, eps), clips);

  // Pooled means for the slack gradient reuse the same replications: counts
  // from both batches, no new simulation.
  out.pooled_mean.resize(n);
  double acc1 = 0.0, acc2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc1 += count1[j];
    acc2 += count2[j];
    out.pooled_mean[j] = (acc1 + acc2) / static_cast<double>(M1 + M2);
  }
  return out;
}

std::vector<double> penalty_gradient_s_from_counts(
    std::span<const double> pooled_mean, std::span<const double> s) {
  if (pooled_mean.size() != s.size())
    throw std::invalid_argument(
        "penalty_gradient_s_from_counts: dimension mismatch");
  std::vector<double> g(s.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    g[j] = -2.0 * (pooled_mean[j] - s[j]);
  return g;
}

std::vector<double> estimate_penalty_gradient_s(const PenaltyGradP& step1,
                                                std::span<const double> s) {
  return penalty_gradient_s_from_counts(step1.pooled_mean, s);
}

std::vector<double> estimate_penalty_gradient_projected(
    const OutputModel& h, const KsBounds& bounds, const ProbabilityVector& p,
    const SupportSet& support, std::size_t M1, std::size_t M2, RngStream base,
    double eps, ClipCounter* clips, std::vector<double>* u1_out) {
  const std::size_t n = bounds.size();
  if (M1 == 0 || M2 == 0)
    throw std::invalid_argument("projected gradient: batch sizes must be > 0");

  std::vector<double> count1(n + 1, 0.0);
  const RngStream b1 = base.sub(kBatchResidual);
  for (std::size_t r = 0; r < M1; ++r) {
    const double hv =
        simulate_once(h.map, h.horizon, p, support, b1.sub(r)).value;
    count1[first_covering(bounds.thresholds, hv)] += 1.0;
  }
  std::vector<double> suffix(n + 1, 0.0);
  {
    // Projected residuals u_j - Proj_j(u_j); nonzero only for violated
    // intervals.
    std::vector<double> resid(n);
    double acc = 0.0;
    if (u1_out) u1_out->resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      acc += count1[j];
      const double u = acc / static_cast<double>(M1);
      if (u1_out) (*u1_out)[j] = u;
      resid[j] = u - bounds.interval(j)(u);
    }
    for (std::size_t j = n; j-- > 0;) suffix[j] = suffix[j + 1] + resid[j];
  }

  std::vector<double> grad =
      score_weighted_sum(h, bounds.thresholds, suffix, p, support, M2,
                         base.sub(kBatchScore), nullptr);
  clip_in_place(grad, gradient_clip_bound(h.horizon, eps), clips);
  return grad;
}

}  // namespace simcal
