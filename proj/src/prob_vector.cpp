#include "simcal/prob_vector.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace simcal {

ProbabilityVector ProbabilityVector::uniform(std::size_t m) {
  ProbabilityVector p;
  p.weights.assign(m, 1.0 / static_cast<double>(m));
  return p;
}

bool ProbabilityVector::is_valid(double eps, double tol) const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= eps - tol)) return false;
    sum += w;
  }
  return std::abs(sum - 1.0) <= tol * static_cast<double>(std::max<std::size_t>(dim(), 1));
}

double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double qi = q.weights[i];
    if (qi == 0.0) continue;
    const double pi = p.weights[i];
    if (pi == 0.0) return std::numeric_limits<double>::infinity();
    v += qi * std::log(qi / pi);
  }
  return std::max(v, 0.0);  // guard tiny negative round-off at p == q
}

double project_interval(double x, const IntervalProjector& proj) {
  if (proj.lower > proj.upper)
    throw std::invalid_argument("project_interval: lower > upper");
  return proj(x);
}

ProbabilityVector entropic_prox_step(const ProbabilityVector& p,
                                     std::span<const double> xi, double eps) {
  const std::size_t m = p.dim();
  if (xi.size() != m)
    throw std::invalid_argument("entropic_prox_step: dimension mismatch");
  if (m == 0) throw std::invalid_argument("entropic_prox_step: empty vector");
  if (!(eps >= 0.0) || eps >= 1.0 / static_cast<double>(m))
    throw std::invalid_argument("entropic_prox_step: eps must be in [0, 1/m)");

  // w_i = p_i e^{-xi_i}, computed as exp(log p_i - xi_i - shift). The common
  // shift cancels in every ratio below, including mu(eta).
  std::vector<double> logw(m);
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(xi[i]))
      throw std::invalid_argument("entropic_prox_step: non-finite xi");
    if (!(p.weights[i] > 0.0))
      throw std::invalid_argument("entropic_prox_step: p must be strictly positive");
    logw[i] = std::log(p.weights[i]) - xi[i];
    max_logw = std::max(max_logw, logw[i]);
  }
  std::vector<double> w(m);
  double wsum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = std::exp(logw[i] - max_logw);
    wsum += w[i];
  }

  ProbabilityVector q;
  q.support_ids = p.support_ids;
  q.weights.resize(m);

  if (eps == 0.0) {
    for (std::size_t i = 0; i < m; ++i) q.weights[i] = w[i] / wsum;
    return q;
  }

  // Stable sort by original index keeps tied scores in a fixed order; mu is
  // continuous across equal knots so the located piece is the same either way.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });

  // tail[i] = sum of the m - i largest scores (sorted positions i..m-1).
  std::vector<double> tail(m + 1, 0.0);
  for (std::size_t i = m; i-- > 0;) tail[i] = tail[i + 1] + w[order[i]];

  auto mu_at_knot = [&](std::size_t i) {
    // mu evaluated at eta = w_(i) (1-based piece boundary, i in 1..m).
    const double knot = w[order[i - 1]];
    return knot / (static_cast<double>(i) * knot + tail[i]);
  };

  // Find i* in 0..m-1 with mu(knot_{i*}) <= eps < mu(knot_{i*+1});
  // knot_0 = 0 gives mu = 0.
  std::size_t istar = 0;
  double prev_mu = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    const double mi = mu_at_knot(i);
    assert(mi >= prev_mu - 1e-15 && "mu must be nondecreasing over the knots");
    prev_mu = mi;
    if (mi <= eps)
      istar = i;
    else
      break;
  }

  const double eta =
      eps * tail[istar] / (1.0 - eps * static_cast<double>(istar));
  double denom = 0.0;
  for (std::size_t i = 0; i < m; ++i) denom += std::max(eta, w[i]);
  for (std::size_t i = 0; i < m; ++i)
    q.weights[i] = std::max(eta, w[i]) / denom;
  return q;
}

double sup_norm_distance(const ProbabilityVector& p,
                         const ProbabilityVector& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("sup_norm_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i)
    d = std::max(d, std::abs(p.weights[i] - q.weights[i]));
  return d;
}

}  // namespace simcal
