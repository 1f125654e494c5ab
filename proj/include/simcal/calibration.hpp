#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "simcal/ks_bounds.hpp"
#include "simcal/sim_models.hpp"
#include "simcal/solvers.hpp"

namespace simcal {

// Sampling distribution for the support points: "lognormal" (mu, sigma),
// "uniform" (lo, hi), or "points" (explicit list, e.g. from a file).
struct SupportDist {
  std::string name = "lognormal";
  double param1 = 0.0;
  double param2 = 1.0;
  std::vector<double> explicit_points;
};

// One target quantity to bound; name/param feed make_target.
struct ObjectiveSpec {
  std::string name = "mg1_queuelen20";
  double param = 0.0;
};

struct CalibrationSpec {
  std::string output_model = "mg1_wait20";
  std::vector<ObjectiveSpec> objectives;
  SupportDist support_dist;
  std::size_t m = 100;
  double alpha = 0.05;
  double delta = 0.0;        // extra half-width inflation (robustness study)
  double eps_override = -1;  // < 0: use choose_epsilon(m, n)
  SolverConfig solver;
  std::uint64_t seed = 12345;
};

struct ObjectiveResult {
  ObjectiveSpec objective;
  double z_min = 0.0, z_max = 0.0;
  ProbabilityVector argmin, argmax;
  bool min_converged = false, max_converged = false;
  std::vector<TraceRow> trace_min, trace_max;
  std::size_t replications_used = 0;
  std::size_t clip_events = 0;
};

struct CalibrationReport {
  static constexpr int kSchemaVersion = 1;
  std::vector<ObjectiveResult> objectives;
  std::size_t n = 0;  // output data size
  double alpha = 0.0;
  double half_width = 0.0;
  double delta = 0.0;
  double eps = 0.0;
  std::string output_model;
  SupportSet support;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> diagnostics;  // e.g. sweep monotonicity notes
};

// m i.i.d. draws from the named distribution, seeded deterministically.
SupportSet sample_support(const SupportDist& dist, std::size_t m,
                          RngStream stream);

// Floor policy: min(m^{-3/2}, 0.1/(m sqrt(n))); always below 1/m.
double choose_epsilon(std::size_t m, std::size_t n);

// Full pipeline: KS bounds once, support once, eps from policy, then a
// min and a max solve per objective. All objectives share the same support
// and bounds (the simultaneous-guarantee contract). Min/max runs and
// objectives execute concurrently on disjoint streams.
CalibrationReport calibrate_bounds(const CalibrationSpec& spec,
                                   const OutputSample& data,
                                   unsigned workers = 1);

// Same pipeline with an explicit stream instead of spec.seed; the coverage
// experiment uses this to get fresh support per replication.
CalibrationReport calibrate_bounds_with_stream(const CalibrationSpec& spec,
                                               const OutputSample& data,
                                               RngStream stream,
                                               unsigned workers = 1);

// calibrate_bounds over CDF-indicator objectives at strictly increasing
// levels, with monotonicity diagnostics appended (raw bounds unmodified).
CalibrationReport cdf_sweep(const CalibrationSpec& base,
                            const std::vector<double>& levels,
                            const OutputSample& data, unsigned workers = 1);

struct TruthSpec {
  std::string name = "exponential";  // or "beta_mixture"
  double param1 = 1.2;
  double param2 = 0.0;
};

// n observations of the output model under the continuous truth.
std::vector<double> generate_truth_data(const TruthSpec& truth,
                                        const std::string& output_model,
                                        std::size_t n, RngStream stream);

struct CoverageReplication {
  double z_min = 0.0, z_max = 0.0;
  bool converged = false;
  bool covered = false;
};

struct CoverageSummary {
  std::size_t hits = 0;
  std::size_t valid = 0;          // converged replications (the denominator)
  std::size_t nonconverged = 0;   // flagged, excluded from the denominator
  double ci_lo = 0.0, ci_hi = 0.0;  // 95% binomial CI on the coverage rate
  double true_value = 0.0;
  double true_value_se = 0.0;
  std::vector<CoverageReplication> replications;
};

// R replications of (fresh data, fresh support, calibrate) under the truth;
// covered = [z_min, z_max] contains true_value. Pass the truth value if
// known; otherwise it is oracle-estimated with oracle_reps MC replications.
CoverageSummary coverage_experiment(const CalibrationSpec& spec,
                                    const TruthSpec& truth, std::size_t n,
                                    std::size_t R, RngStream stream,
                                    std::optional<McEstimate> true_value = {},
                                    std::size_t oracle_reps = 1000000,
                                    unsigned workers = 1);

// JSON round trip (versioned schema) and CSV emission.
std::string report_to_json(const CalibrationReport& report);
CalibrationReport report_from_json(const std::string& json_text);
void write_report_json(const std::filesystem::path& file,
                       const CalibrationReport& report);
CalibrationReport load_report_json(const std::filesystem::path& file);

// Two-column CSV (point, weight); support export uses weight column = 0.
void write_distribution_csv(const std::filesystem::path& file,
                            const SupportSet& support,
                            const ProbabilityVector* weights);

}  // namespace simcal
