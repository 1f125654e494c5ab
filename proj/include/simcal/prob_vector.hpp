#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace simcal {

// A discrete probability distribution over m externally held support points.
// Weights sum to 1 (1e-12 absolute tolerance); nonnegative, or >= eps when the
// vector lives on the restricted simplex.
struct ProbabilityVector {
  std::vector<double> weights;
  // Optional indices into an external support array; empty means identity.
  std::vector<std::size_t> support_ids;

  std::size_t dim() const { return weights.size(); }

  static ProbabilityVector uniform(std::size_t m);

  // Sum-to-one and floor checks; eps = 0 tests the plain simplex.
  bool is_valid(double eps = 0.0, double tol = 1e-12) const;
};

// Clamp to a closed interval; used for the per-threshold slack projections.
struct IntervalProjector {
  double lower = 0.0;
  double upper = 1.0;

  double operator()(double x) const {
    if (x < lower) return lower;
    if (x > upper) return upper;
    return x;
  }
};

// KL divergence in the paper's argument order: V(p, q) = sum_i q_i log(q_i / p_i).
// Note this is the reverse of the common KL(p || q) convention -- the SECOND
// argument appears in the numerator. Terms with q_i = 0 contribute 0; a
// coordinate with q_i > 0 and p_i = 0 yields +infinity.
// Throws std::invalid_argument on dimension mismatch.
double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

double project_interval(double x, const IntervalProjector& proj);

// Solve  min_q  xi'(q - p) + V(p, q)  over the restricted simplex {q : q_i >= eps}
// by the sort-and-search procedure: sort the weighted scores p_i e^{-xi_i},
// locate the piece on which the strictly increasing ratio
// mu(eta) = eta / sum_i max{eta, p_i e^{-xi_i}} crosses eps, and read off eta*
// in closed form. No iterative root finding. eps = 0 reduces to the plain
// entropic descent update q_i = p_i e^{-xi_i} / sum_j p_j e^{-xi_j}.
//
// p must be strictly positive, xi finite, 0 <= eps < 1/m.
// The products are formed in log space (exp(log p_i - xi_i - shift)) so that
// large xi components cannot underflow the whole vector.
ProbabilityVector entropic_prox_step(const ProbabilityVector& p,
                                     std::span<const double> xi, double eps);

// max_i |p_i - q_i|; the stopping metric of the solvers.
double sup_norm_distance(const ProbabilityVector& p,
                         const ProbabilityVector& q);

}  // namespace simcal
