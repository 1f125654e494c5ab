#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "simcal/gradients.hpp"
#include "simcal/ks_bounds.hpp"
#include "simcal/prob_vector.hpp"
#include "simcal/rng.hpp"
#include "simcal/sim_models.hpp"

namespace simcal {

enum class Algorithm { mdsa, alt_mdsa, rspg, two_phase_rspg };
enum class Sense { minimize, maximize };

struct RspgParams {
  std::size_t N = 30;        // iteration budget per run; tau ~ U{1..N}
  std::size_t S = 5;         // candidate runs in the two-phase variant
  std::size_t M = 500;       // per-batch size during optimization
  std::size_t M_post = 500;  // probe-step batch size
  double gamma_bar = 0.03;   // fixed step for both p and s
  double lambda_fixed = 0.03;
};

struct SolverConfig {
  // Decaying schedules: gamma^k = a/k^alpha1, beta^k = b/k^alpha2,
  // lambda^k = c/k^alpha3 (or c/log(k+1) when log_lambda is set, which
  // requires alpha1 == 1). The alternate algorithm reuses (b, alpha2) as its
  // growing batch M1^k = ceil(b k^alpha2).
  double a = 0.2, b = 0.2, c = 1.0;
  double alpha1 = 0.8, alpha2 = 0.5, alpha3 = 0.2;
  bool log_lambda = false;

  double eps = 1e-3;  // restricted-simplex floor, must be < 1/m
  std::size_t M1 = 100, M2 = 100, M3 = 100;
  double stop_tol = 5e-4;  // sup-norm threshold on consecutive p iterates
  // A single sub-tolerance step is no evidence of convergence when the steps
  // are stochastic; require this many in a row before stopping early.
  std::size_t stop_window = 5;
  std::size_t max_iters = 2000;
  Algorithm algorithm = Algorithm::mdsa;
  Sense sense = Sense::minimize;
  RspgParams rspg;
  std::size_t report_batch = 100000;  // terminal objective estimate

  double gamma(std::size_t k) const;
  double beta(std::size_t k) const;
  double lambda(std::size_t k) const;
  std::size_t growing_batch(std::size_t k) const;  // ceil(b k^alpha2)
};

// Schedule validation against the convergence theorems' exponent windows.
// Returns an empty list when the configuration is admissible; never throws.
std::vector<std::string> validate_schedule(const SolverConfig& config);

struct TraceRow {
  std::size_t k = 0;
  double objective_est = 0.0;  // per-step batch mean of g (diagnostic only)
  double penalty_est = 0.0;    // projected penalty at the pooled batch means
  double step_sup_norm = 0.0;
  double lambda_k = 0.0, gamma_k = 0.0, beta_k = 0.0;
};

struct SolverState {
  ProbabilityVector p;
  std::vector<double> s;  // empty for the slack-free alternate algorithm
  std::size_t k = 0;
  std::vector<TraceRow> trace;
  bool converged = false;
  std::size_t replications_used = 0;
  std::size_t clip_events = 0;
  std::size_t tau = 0;           // RSPG stopping time (0 when unused)
  std::size_t selected_run = 0;  // two-phase winner (0 when unused)
  // Authoritative terminal objective from the large reporting batch;
  // per-step trace objectives come from the small batches and are
  // diagnostic only.
  double objective_estimate = 0.0;
};

// Supplies one iteration's gradients given the current iterate; the Monte
// Carlo source wraps the score-function estimators, tests may stub it.
using GradientSource = std::function<GradientSample(
    const ProbabilityVector& p, std::span<const double> s, RngStream iter)>;

// Standard source: eqs-(20)-(22) estimators with batches (M1, M2, M3),
// consuming exactly M1+M2+M3 replications per call.
GradientSource make_mc_gradient_source(const OutputModel& h,
                                       const SupportSet& support,
                                       const KsBounds& bounds,
                                       const TargetObjective& g,
                                       std::size_t M1, std::size_t M2,
                                       std::size_t M3, double eps);

// One iteration of the slack-variable algorithm: pull the three gradients,
// entropic prox step on p with xi = gamma (lambda * Psi + phi_p),
// interval-projected gradient step on s. `sense` is applied by negating the
// objective gradient only.
SolverState mdsa_step(const SolverState& state, const SolverConfig& config,
                      const KsBounds& bounds, const GradientSource& grads,
                      RngStream iter_stream, double gamma, double beta,
                      double lambda);

SolverState run_mdsa(const ProbabilityVector& p1, const std::vector<double>& s1,
                     const SolverConfig& config, const OutputModel& h,
                     const SupportSet& support, const KsBounds& bounds,
                     const TargetObjective& g, RngStream base);

// Slack-free variant: projected penalty gradient with growing first batch
// M1^k = ceil(b k^alpha2).
SolverState run_alternate_mdsa(const ProbabilityVector& p1,
                               const SolverConfig& config, const OutputModel& h,
                               const SupportSet& support, const KsBounds& bounds,
                               const TargetObjective& g, RngStream base);

// Fixed-step run of tau - 1 slack-variable iterations, tau ~ U{1..N};
// returns the iterate at tau.
SolverState run_rspg(const ProbabilityVector& p1, const std::vector<double>& s1,
                     const SolverConfig& config, const OutputModel& h,
                     const SupportSet& support, const KsBounds& bounds,
                     const TargetObjective& g, RngStream base);

// Stub-friendly cores: same algorithms with injected gradient sources and no
// terminal reporting batch. `probe_grads` is used for the two-phase probe
// step (batch size M_post in the standard source).
SolverState run_rspg_with_source(const ProbabilityVector& p1,
                                 const std::vector<double>& s1,
                                 const SolverConfig& config,
                                 const KsBounds& bounds,
                                 const GradientSource& grads, RngStream base);
SolverState run_two_phase_rspg_with_source(
    const ProbabilityVector& p1, const std::vector<double>& s1,
    const SolverConfig& config, const KsBounds& bounds,
    const GradientSource& grads, const GradientSource& probe_grads,
    RngStream base, unsigned workers = 1);

// S independent fixed-step runs, then a large-batch probe step at each
// candidate; returns the candidate minimizing
// |(p'-p)/gamma|_1^2 + |(s'-s)/gamma|_2^2, ties broken by lowest run index.
SolverState run_two_phase_rspg(const ProbabilityVector& p1,
                               const std::vector<double>& s1,
                               const SolverConfig& config, const OutputModel& h,
                               const SupportSet& support, const KsBounds& bounds,
                               const TargetObjective& g, RngStream base,
                               unsigned workers = 1);

// Dispatch on config.algorithm.
SolverState run_solver(const ProbabilityVector& p1,
                       const std::vector<double>& s1,
                       const SolverConfig& config, const OutputModel& h,
                       const SupportSet& support, const KsBounds& bounds,
                       const TargetObjective& g, RngStream base,
                       unsigned workers = 1);

// Plug-in feasibility audit: sum_j (u_j - Proj_j(u_j))^2 with u from an
// M-replication batch.
double penalty_value(const ProbabilityVector& p, const SupportSet& support,
                     const OutputModel& h, const KsBounds& bounds,
                     std::size_t M, RngStream base, unsigned workers = 1);

// Default initials: uniform p projected onto the eps-floor simplex and
// interval midpoints for s.
ProbabilityVector default_initial_p(std::size_t m, double eps);
std::vector<double> default_initial_s(const KsBounds& bounds);
// Dirichlet(1,...,1) draw projected onto the eps-floor simplex (multi-start).
ProbabilityVector dirichlet_initial_p(std::size_t m, double eps, Rng& rng);

void write_trace_csv(const std::filesystem::path& file,
                     const std::vector<TraceRow>& trace);

}  // namespace simcal
