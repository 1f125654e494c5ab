#pragma once

#include <cstddef>
#include <vector>

#include "simcal/ks_bounds.hpp"
#include "simcal/prob_vector.hpp"
#include "simcal/rng.hpp"
#include "simcal/sim_models.hpp"

namespace simcal {

// Safety-net counter: components larger than the clip bound 10*horizon/eps
// are clamped and the event recorded. Clips are reported, never silent.
struct ClipCounter {
  std::size_t events = 0;
};

double gradient_clip_bound(std::size_t horizon, double eps);

// One iteration's worth of gradient estimates and the batch sizes that
// produced them, plus free byproducts for the solver trace.
struct GradientSample {
  std::vector<double> objective_grad;  // m
  std::vector<double> penalty_grad_p;  // m
  std::vector<double> penalty_grad_s;  // n
  std::size_t M1 = 0, M2 = 0, M3 = 0;
  std::size_t clip_events = 0;
  double objective_mean = 0.0;   // batch mean of g
  double penalty_estimate = 0.0;  // projected penalty at the batch means
};

// Score-function estimate of the derivative of E_p[g]:
// (1/M3) sum_r g(X_r) S(X_r; p). Unbiased; satisfies sum_i p_i grad_i = 0
// per batch exactly.
std::vector<double> estimate_objective_gradient(const TargetObjective& g,
                                                const ProbabilityVector& p,
                                                const SupportSet& support,
                                                std::size_t M3, RngStream base,
                                                double eps,
                                                ClipCounter* clips = nullptr,
                                                double* batch_mean = nullptr);

// Output of the slack-residual penalty gradient batch. pooled_mean holds
// (count over both batches)/(M1+M2) per threshold so the slack gradient can
// reuse the same replications without new simulation.
struct PenaltyGradP {
  std::vector<double> grad_p;       // m
  std::vector<double> pooled_mean;  // n
};

// Two-independent-batch estimate of d/dp of sum_j (E_p[I(h<=y_j)] - s_j)^2:
// 2 sum_j [residual over batch X] [indicator-score product over batch X~].
PenaltyGradP estimate_penalty_gradient_p(const OutputModel& h,
                                         const KsBounds& bounds,
                                         const ProbabilityVector& p,
                                         const SupportSet& support,
                                         std::span<const double> s,
                                         std::size_t M1, std::size_t M2,
                                         RngStream base, double eps,
                                         ClipCounter* clips = nullptr);

// Pure function of the pooled counts: grad_s_j = -2 (pooled_mean_j - s_j).
std::vector<double> penalty_gradient_s_from_counts(
    std::span<const double> pooled_mean, std::span<const double> s);

// Convenience wrapper over the pure function.
std::vector<double> estimate_penalty_gradient_s(const PenaltyGradP& step1,
                                                std::span<const double> s);

// Biased plug-in estimate of d/dp of sum_j (E_p[I] - Proj_j(E_p[I]))^2:
// residuals u_j - Proj_j(u_j) with u from the first batch, score products
// from the second. Bias vanishes as M1 grows.
std::vector<double> estimate_penalty_gradient_projected(
    const OutputModel& h, const KsBounds& bounds, const ProbabilityVector& p,
    const SupportSet& support, std::size_t M1, std::size_t M2, RngStream base,
    double eps, ClipCounter* clips = nullptr,
    std::vector<double>* u1_out = nullptr);

}  // namespace simcal
