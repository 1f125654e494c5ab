#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "simcal/prob_vector.hpp"
#include "simcal/rng.hpp"

using namespace simcal;

namespace {

ProbabilityVector make_p(std::vector<double> w) {
  ProbabilityVector p;
  p.weights = std::move(w);
  return p;
}

// Independent oracle for the restricted prox step: bisection on
// mu(eta) = eta / sum_i max(eta, w_i) = eps with w_i = p_i e^{-xi_i}.
// mu is increasing, mu(0) = 0 and mu(max w) = 1/m > eps, so the root lies
// in [0, max w].
ProbabilityVector prox_bisection_oracle(const ProbabilityVector& p,
                                        const std::vector<double>& xi,
                                        double eps) {
  const std::size_t m = p.dim();
  std::vector<double> w(m);
  double wmax = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = p.weights[i] * std::exp(-xi[i]);
    wmax = std::max(wmax, w[i]);
  }
  double eta = 0.0;
  if (eps > 0.0) {
    double lo = 0.0, hi = wmax;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double denom = 0.0;
      for (double wi : w) denom += std::max(mid, wi);
      if (mid / denom < eps)
        lo = mid;
      else
        hi = mid;
    }
    eta = 0.5 * (lo + hi);
  }
  double denom = 0.0;
  for (double wi : w) denom += std::max(eta, wi);
  ProbabilityVector q;
  q.weights.resize(m);
  for (std::size_t i = 0; i < m; ++i) q.weights[i] = std::max(eta, w[i]) / denom;
  return q;
}

}  // namespace

TEST_CASE("kl divergence basics") {
  const auto p = make_p({0.5, 0.5});
  CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-12));

  // Frozen value from independent direct summation:
  // 0.75 ln(0.75/0.5) + 0.25 ln(0.25/0.5) = 0.130812...
  const auto q = make_p({0.75, 0.25});
  CHECK(kl_divergence(p, q) == doctest::Approx(0.130812).epsilon(1e-5));

  // Second argument in the numerator: V(p, q) != V(q, p).
  CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)).epsilon(1e-9));

  const auto z = make_p({1.0, 0.0});
  CHECK(std::isinf(kl_divergence(z, p)));
  CHECK(kl_divergence(p, z) < std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(kl_divergence(p, make_p({1.0})), std::invalid_argument);
}

TEST_CASE("interval projection") {
  const IntervalProjector proj{0.2, 0.8};
  CHECK(project_interval(0.5, proj) == 0.5);
  CHECK(project_interval(0.1, proj) == 0.2);
  CHECK(project_interval(0.9, proj) == 0.8);
  CHECK_THROWS_AS(project_interval(0.5, IntervalProjector{0.8, 0.2}),
                  std::invalid_argument);

  // Idempotent and 1-Lipschitz on random points.
  Rng rng(RngStream{11, 0});
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-1.0, 2.0);
    const double y = rng.uniform(-1.0, 2.0);
    CHECK(proj(proj(x)) == proj(x));
    CHECK(std::abs(proj(x) - proj(y)) <= std::abs(x - y) + 1e-15);
  }
}

TEST_CASE("sup norm distance") {
  CHECK(sup_norm_distance(make_p({0.5, 0.5}), make_p({0.5, 0.5})) == 0.0);
  CHECK(sup_norm_distance(make_p({1.0, 0.0}), make_p({0.0, 1.0})) == 1.0);
  CHECK(sup_norm_distance(make_p({0.6, 0.4}), make_p({0.5, 0.5})) ==
        doctest::Approx(0.1));
}

TEST_CASE("prox step: eps = 0 is plain entropic descent") {
  const auto p = make_p({0.2, 0.3, 0.5});
  const std::vector<double> xi = {0.1, -0.4, 2.0};
  const auto q = entropic_prox_step(p, xi, 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < 3; ++i) denom += p.weights[i] * std::exp(-xi[i]);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(q.weights[i] ==
          doctest::Approx(p.weights[i] * std::exp(-xi[i]) / denom).epsilon(1e-12));
}

TEST_CASE("prox step: zero scores fix points of the restricted simplex") {
  const auto p = make_p({0.3, 0.3, 0.4});
  const std::vector<double> xi = {0.0, 0.0, 0.0};
  const auto q = entropic_prox_step(p, xi, 0.1);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(q.weights[i] == doctest::Approx(p.weights[i]).epsilon(1e-12));
}

TEST_CASE("prox step: hand instance with active floor") {
  // p uniform over 3, xi = (0, 0, ln 4), eps = 0.15: third weight floors.
  const auto p = make_p({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const std::vector<double> xi = {0.0, 0.0, std::log(4.0)};
  const auto q = entropic_prox_step(p, xi, 0.15);
  CHECK(q.weights[0] == doctest::Approx(0.425).epsilon(1e-9));
  CHECK(q.weights[1] == doctest::Approx(0.425).epsilon(1e-9));
  CHECK(q.weights[2] == doctest::Approx(0.150).epsilon(1e-9));
}

TEST_CASE("prox step: input validation") {
  const auto p = make_p({0.5, 0.5});
  const std::vector<double> xi = {0.0, 0.0};
  CHECK_THROWS_AS(entropic_prox_step(p, xi, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(entropic_prox_step(p, xi, -0.1), std::invalid_argument);
  const std::vector<double> bad = {0.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(entropic_prox_step(p, bad, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(entropic_prox_step(make_p({1.0, 0.0}), xi, 0.1),
                  std::invalid_argument);
}

TEST_CASE("prox step: matches bisection oracle on random instances") {
  Rng rng(RngStream{2024, 7});
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform01() * 9);
    ProbabilityVector p;
    p.weights.resize(m);
    double sum = 0.0;
    for (double& w : p.weights) {
      w = rng.uniform(0.05, 1.0);
      sum += w;
    }
    for (double& w : p.weights) w /= sum;
    std::vector<double> xi(m);
    for (double& x : xi) x = rng.uniform(-3.0, 3.0);
    const double eps = rng.uniform01() / static_cast<double>(m) * 0.9;

    const auto fast = entropic_prox_step(p, xi, eps);
    const auto slow = prox_bisection_oracle(p, xi, eps);
    for (std::size_t i = 0; i < m; ++i)
      CHECK(fast.weights[i] == doctest::Approx(slow.weights[i]).epsilon(1e-8));
  }
}

TEST_CASE("prox step: ties among scores handled consistently") {
  // Duplicated weighted scores hit the documented stable-sort path.
  const auto p = make_p({0.25, 0.25, 0.25, 0.25});
  const std::vector<double> xi = {1.0, 1.0, 0.0, 0.0};
  const auto q = entropic_prox_step(p, xi, 0.2);
  CHECK(q.weights[0] == doctest::Approx(q.weights[1]).epsilon(1e-14));
  CHECK(q.weights[2] == doctest::Approx(q.weights[3]).epsilon(1e-14));
  const auto oracle = prox_bisection_oracle(p, xi, 0.2);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(q.weights[i] == doctest::Approx(oracle.weights[i]).epsilon(1e-8));
}

TEST_CASE("prox step: simplex and floor invariants (property)") {
  Rng rng(RngStream{99, 3});
  for (int inst = 0; inst < 2000; ++inst) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform01() * 19);
    ProbabilityVector p;
    p.weights.resize(m);
    double sum = 0.0;
    for (double& w : p.weights) {
      w = -std::log(rng.uniform01());
      sum += w;
    }
    for (double& w : p.weights) w /= sum;
    std::vector<double> xi(m);
    for (double& x : xi) x = rng.uniform(-20.0, 20.0);  // exercise log-space path
    const double eps = rng.uniform01() / static_cast<double>(m) * 0.95;
    const auto q = entropic_prox_step(p, xi, eps);
    double qs = 0.0;
    for (double w : q.weights) {
      CHECK(w >= eps - 1e-12);
      qs += w;
    }
    CHECK(qs == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("prox step: optimality against random feasible competitors") {
  Rng rng(RngStream{5, 8});
  const auto p = make_p({0.2, 0.5, 0.3});
  const std::vector<double> xi = {0.7, -0.2, 1.5};
  const double eps = 0.05;
  const auto qstar = entropic_prox_step(p, xi, eps);
  auto objective = [&](const ProbabilityVector& q) {
    double v = kl_divergence(p, q);
    for (std::size_t i = 0; i < 3; ++i)
      v += xi[i] * (q.weights[i] - p.weights[i]);
    return v;
  };
  const double vstar = objective(qstar);
  for (int t = 0; t < 1000; ++t) {
    ProbabilityVector q;
    q.weights.resize(3);
    double sum = 0.0;
    for (double& w : q.weights) {
      w = eps - std::log(rng.uniform01());
      sum += w;
    }
    // Rescale the excess above the floor so the floor is respected exactly.
    const double excess = sum - 3.0 * eps;
    const double target = 1.0 - 3.0 * eps;
    for (double& w : q.weights) w = eps + (w - eps) * target / excess;
    CHECK(vstar <= objective(q) + 1e-10);
  }
}
