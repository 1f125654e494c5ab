#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simcal/prob_vector.hpp"
#include "simcal/rng.hpp"

namespace simcal {

// Randomly generated support points the calibrated distribution lives on.
struct SupportSet {
  std::vector<double> points;
  std::string generator_desc;  // sampling distribution and parameters
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
};

// A deterministic map from a length-`horizon` input sequence (plus auxiliary
// known-distribution draws pulled from the supplied generator) to one number.
using SimMap =
    std::function<double(std::span<const double> inputs, Rng& aux)>;

// Observable output map h with its input horizon T.
struct OutputModel {
  std::string name;
  std::size_t horizon = 1;
  SimMap map;
};

// Target map g with its input horizon S.
struct TargetObjective {
  std::string name;
  std::size_t horizon = 1;
  SimMap map;
};

struct SystemModel {
  OutputModel output;
  TargetObjective target;
};

// ---- input sequence generation ------------------------------------------

// horizon i.i.d. support indices, each equal to i with probability p_i.
std::vector<std::uint32_t> draw_input_indices(const ProbabilityVector& p,
                                              std::size_t horizon, Rng& rng);

std::vector<double> indices_to_values(std::span<const std::uint32_t> idx,
                                      const SupportSet& support);

std::vector<double> draw_input_sequence(const ProbabilityVector& p,
                                        const SupportSet& support,
                                        std::size_t horizon, Rng& rng);

// ---- score factor --------------------------------------------------------

// S_i(x; p) = sum_t 1{x_t = z_i}/p_i - horizon. Satisfies sum_i p_i S_i = 0
// for every sequence. Input values must match support points exactly.
std::vector<double> score_factor(std::span<const double> x,
                                 const ProbabilityVector& p,
                                 const SupportSet& support,
                                 std::size_t horizon);

std::vector<double> score_factor_from_indices(
    std::span<const std::uint32_t> idx, const ProbabilityVector& p,
    std::size_t horizon);

// ---- built-in system maps ------------------------------------------------

// Average wait of the first `service.size()` customers of a single-server
// FIFO queue starting empty: W_1 = 0, W_{t+1} = max(W_t + V_t - A_{t+1}, 0).
// interarrivals.size() must be service.size() - 1.
double mg1_average_wait(std::span<const double> service,
                        std::span<const double> interarrivals);

// Average over the first `service.size()` customers of the number of earlier
// customers still in the system (waiting or in service) at their arrival
// instant.
double mg1_average_queue_seen(std::span<const double> service,
                              std::span<const double> interarrivals);

// I(x_1 <= a).
double cdf_indicator(std::span<const double> x, double a);

// Registry of built-in models. Output models: "mg1_wait20".
// Targets: "mg1_queuelen20", "cdf_indicator" (param = threshold a),
// "avg_wait20" (the observable itself, useful for diagnostics).
OutputModel make_output_model(const std::string& name);
TargetObjective make_target(const std::string& name, double param = 0.0);

// ---- replication protocol ------------------------------------------------

// One simulation replication: inputs drawn from substream 0 of `rep`,
// auxiliary draws from substream 1, so h and g replications with the same
// stream reuse identical randomness and distinct streams are independent.
struct Replication {
  std::vector<std::uint32_t> indices;
  double value = 0.0;
};

Replication simulate_once(const SimMap& map, std::size_t horizon,
                          const ProbabilityVector& p,
                          const SupportSet& support, RngStream rep);

// Sample mean over M independent replications under streams base.sub(r).
// Per-replication values are stored and reduced sequentially, so the result
// does not depend on the worker count.
double estimate_expectation(const SimMap& map, std::size_t horizon,
                            const ProbabilityVector& p,
                            const SupportSet& support, std::size_t M,
                            RngStream base, unsigned workers = 1);

// u_j = (1/M) sum_r I(h(X^{(r)}) <= y_j) for every threshold, sharing one
// batch of M replications across all thresholds. `thresholds` must be
// ascending.
std::vector<double> estimate_indicator_means(const OutputModel& model,
                                             std::span<const double> thresholds,
                                             const ProbabilityVector& p,
                                             const SupportSet& support,
                                             std::size_t M, RngStream base,
                                             unsigned workers = 1);

// ---- truth models (continuous input, for experiments) --------------------

using ServiceSampler = std::function<double(Rng&)>;

// "exponential" (param1 = rate) or "beta_mixture" (equal-weight mixture of
// Beta(9,3) and Beta(3,9); params ignored).
ServiceSampler make_truth_sampler(const std::string& name, double param1 = 0.0,
                                  double param2 = 0.0);

// Evaluate a map on inputs drawn from a continuous truth distribution.
double simulate_truth_value(const SimMap& map, std::size_t horizon,
                            const ServiceSampler& service, RngStream rep);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replications = 0;
};

// Large-batch Monte Carlo truth oracle.
McEstimate mc_truth_value(const SimMap& map, std::size_t horizon,
                          const ServiceSampler& service, std::size_t R,
                          RngStream base, unsigned workers = 1);

}  // namespace simcal
