#include "simcal/solvers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "simcal/parallel.hpp"

namespace simcal {

double SolverConfig::gamma(std::size_t k) const {
  return a / std::pow(static_cast<double>(k), alpha1);
}

double SolverConfig::beta(std::size_t k) const {
  return b / std::pow(static_cast<double>(k), alpha2);
}

double SolverConfig::lambda(std::size_t k) const {
  // log(k + 1) rather than log(k): the theoretical c/log k schedule is
  // undefined at k = 1 and the shift changes nothing asymptotically.
  if (log_lambda) return c / std::log(static_cast<double>(k) + 1.0);
  return c / std::pow(static_cast<double>(k), alpha3);
}

std::size_t SolverConfig::growing_batch(std::size_t k) const {
  return static_cast<std::size_t>(
      std::ceil(b * std::pow(static_cast<double>(k), alpha2)));
}

std::vector<std::string> validate_schedule(const SolverConfig& cfg) {
  std::vector<std::string> v;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  require(cfg.a > 0.0, "a must be > 0");
  require(cfg.b > 0.0, "b must be > 0");
  require(cfg.c > 0.0, "c must be > 0");
  require(cfg.eps > 0.0, "eps must be > 0");
  switch (cfg.algorithm) {
    case Algorithm::mdsa:
      require(cfg.alpha1 > 0.75, "alpha1 <= 3/4");
      require(cfg.alpha1 <= 1.0, "alpha1 > 1");
      require(cfg.alpha2 > 2.0 - 2.0 * cfg.alpha1, "alpha2 <= 2 - 2*alpha1");
      require(cfg.alpha2 < 2.0 * cfg.alpha1 - 1.0, "alpha2 >= 2*alpha1 - 1");
      if (cfg.log_lambda) {
        require(cfg.alpha1 == 1.0, "log lambda schedule requires alpha1 = 1");
      } else {
        require(cfg.alpha1 < 1.0,
                "alpha1 = 1 requires the log lambda schedule");
        require(cfg.alpha3 > 0.0, "alpha3 <= 0");
        // Tolerance so defaults like alpha1 = 0.8, alpha3 = 0.2 are not
        // rejected by the rounding of 1 - alpha1.
        require(cfg.alpha3 <= 1.0 - cfg.alpha1 + 1e-12, "alpha3 > 1 - alpha1");
      }
      break;
    case Algorithm::alt_mdsa:
      require(cfg.alpha1 > 0.5, "alpha1 <= 1/2");
      require(cfg.alpha1 <= 1.0, "alpha1 > 1");
      require(cfg.alpha2 > 2.0 - 2.0 * cfg.alpha1, "alpha2 <= 2(1 - alpha1)");
      if (cfg.log_lambda) {
        require(cfg.alpha1 == 1.0, "log lambda schedule requires alpha1 = 1");
      } else {
        require(cfg.alpha1 < 1.0,
                "alpha1 = 1 requires the log lambda schedule");
        require(cfg.alpha3 > 0.0, "alpha3 <= 0");
        // Tolerance so defaults like alpha1 = 0.8, alpha3 = 0.2 are not
        // rejected by the rounding of 1 - alpha1.
        require(cfg.alpha3 <= 1.0 - cfg.alpha1 + 1e-12, "alpha3 > 1 - alpha1");
      }
      break;
    case Algorithm::rspg:
    case Algorithm::two_phase_rspg:
      require(cfg.rspg.N >= 1, "rspg N must be >= 1");
      require(cfg.rspg.S >= 1, "rspg S must be >= 1");
      require(cfg.rspg.M >= 1, "rspg M must be >= 1");
      require(cfg.rspg.M_post >= 1, "rspg M_post must be >= 1");
      require(cfg.rspg.gamma_bar > 0.0, "rspg gamma_bar must be > 0");
      require(cfg.rspg.lambda_fixed > 0.0, "rspg lambda must be > 0");
      break;
  }
  return v;
}

namespace {

// Substream ids kept far above any iteration index.
constexpr std::uint64_t kSubReport = 0xFFFF0001ull;
constexpr std::uint64_t kSubTau = 0xFFFF0002ull;

double projected_penalty_at(std::span<const double> u, const KsBounds& bounds) {
  double v = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double r = u[j] - bounds.interval(j)(u[j]);
    v += r * r;
  }
  return v;
}

void check_state(const SolverState& st, const SolverConfig& cfg,
                 const KsBounds& bounds) {
  assert(st.p.is_valid(cfg.eps, 1e-9));
  assert(st.s.empty() || st.s.size() == bounds.size());
#ifdef NDEBUG
  (void)st;
  (void)cfg;
  (void)bounds;
#else
  for (std::size_t j = 0; j < st.s.size(); ++j)
    assert(st.s[j] >= bounds.lower[j] - 1e-12 &&
           st.s[j] <= bounds.upper[j] + 1e-12);
#endif
}

// Terminal large-batch objective estimate; overwrites the diagnostic value.
void attach_report(SolverState& st, const SolverConfig& cfg,
                   const TargetObjective& g, const SupportSet& support,
                   RngStream base, unsigned workers) {
  if (cfg.report_batch == 0) return;
  st.objective_estimate =
      estimate_expectation(g.map, g.horizon, st.p, support, cfg.report_batch,
                           base.sub(kSubReport), workers);
}

}  // namespace

GradientSource make_mc_gradient_source(const OutputModel& h,
                                       const SupportSet& support,
                                       const KsBounds& bounds,
                                       const TargetObjective& g,
                                       std::size_t M1, std::size_t M2,
                                       std::size_t M3, double eps) {
  return [=, &support, &bounds](const ProbabilityVector& p,
                                std::span<const double> s,
                                RngStream iter) -> GradientSample {
    GradientSample gs;
    gs.M1 = M1;
    gs.M2 = M2;
    gs.M3 = M3;
    ClipCounter clips;
    gs.objective_grad = estimate_objective_gradient(
        g, p, support, M3, iter, eps, &clips, &gs.objective_mean);
    const PenaltyGradP pen = estimate_penalty_gradient_p(
        h, bounds, p, support, s, M1, M2, iter, eps, &clips);
    gs.penalty_grad_p = pen.grad_p;
    gs.penalty_grad_s = penalty_gradient_s_from_counts(pen.pooled_mean, s);
    gs.penalty_estimate = projected_penalty_at(pen.pooled_mean, bounds);
    gs.clip_events = clips.events;
    return gs;
  };
}

SolverState mdsa_step(const SolverState& state, const SolverConfig& config,
                      const KsBounds& bounds, const GradientSource& grads,
                      RngStream iter_stream, double gamma, double beta,
                      double lambda) {
  const std::size_t m = state.p.dim();
  SolverState next = state;

  const GradientSample gs = grads(state.p, state.s, iter_stream);

  const double sense = config.sense == Sense::maximize ? -1.0 : 1.0;
  std::vector<double> xi(m);
  for (std::size_t i = 0; i < m; ++i)
    xi[i] = gamma * (sense * lambda * gs.objective_grad[i] +
                     gs.penalty_grad_p[i]);
  next.p = entropic_prox_step(state.p, xi, config.eps);
  for (std::size_t j = 0; j < state.s.size(); ++j)
    next.s[j] = bounds.interval(j)(state.s[j] - beta * gs.penalty_grad_s[j]);

  next.k = state.k + 1;
  next.replications_used = state.replications_used + gs.M1 + gs.M2 + gs.M3;
  next.clip_events = state.clip_events + gs.clip_events;
  next.trace.push_back(TraceRow{next.k, gs.objective_mean,
                                gs.penalty_estimate,
                                sup_norm_distance(next.p, state.p), lambda,
                                gamma, beta});
  check_state(next, config, bounds);
  return next;
}

SolverState run_mdsa(const ProbabilityVector& p1, const std::vector<double>& s1,
                     const SolverConfig& config, const OutputModel& h,
                     const SupportSet& support, const KsBounds& bounds,
                     const TargetObjective& g, RngStream base) {
  SolverState st;
  st.p = p1;
  st.s = s1;
  check_state(st, config, bounds);
  const GradientSource grads = make_mc_gradient_source(
      h, support, bounds, g, config.M1, config.M2, config.M3, config.eps);
  std::size_t quiet = 0;
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    st = mdsa_step(st, config, bounds, grads, base.sub(k), config.gamma(k),
                   config.beta(k), config.lambda(k));
    quiet = st.trace.back().step_sup_norm <= config.stop_tol ? quiet + 1 : 0;
    if (quiet >= config.stop_window) {
      st.converged = true;
      break;
    }
  }
  attach_report(st, config, g, support, base, 1);
  return st;
}

SolverState run_alternate_mdsa(const ProbabilityVector& p1,
                               const SolverConfig& config, const OutputModel& h,
                               const SupportSet& support,
                               const KsBounds& bounds, const TargetObjective& g,
                               RngStream base) {
  const std::size_t m = p1.dim();
  SolverState st;
  st.p = p1;
  check_state(st, config, bounds);
  const double sense = config.sense == Sense::maximize ? -1.0 : 1.0;
  std::size_t quiet = 0;
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    const RngStream iter = base.sub(k);
    const std::size_t M1k = config.growing_batch(k);
    ClipCounter clips;
    double g_mean = 0.0;
    const std::vector<double> psi = estimate_objective_gradient(
        g, st.p, support, config.M3, iter, config.eps, &clips, &g_mean);
    std::vector<double> u1;
    const std::vector<double> phi = estimate_penalty_gradient_projected(
        h, bounds, st.p, support, M1k, config.M2, iter, config.eps, &clips,
        &u1);
    const double gamma = config.gamma(k);
    const double lambda = config.lambda(k);
    std::vector<double> xi(m);
    for (std::size_t i = 0; i < m; ++i)
      xi[i] = gamma * (sense * lambda * psi[i] + phi[i]);
    const ProbabilityVector prev = st.p;
    st.p = entropic_prox_step(st.p, xi, config.eps);
    st.k = k;
    st.replications_used += M1k + config.M2 + config.M3;
    st.clip_events += clips.events;
    st.trace.push_back(TraceRow{k, g_mean, projected_penalty_at(u1, bounds),
                                sup_norm_distance(st.p, prev), lambda, gamma,
                                0.0});
    check_state(st, config, bounds);
    quiet = st.trace.back().step_sup_norm <= config.stop_tol ? quiet + 1 : 0;
    if (quiet >= config.stop_window) {
      st.converged = true;
      break;
    }
  }
  attach_report(st, config, g, support, base, 1);
  return st;
}

SolverState run_rspg_with_source(const ProbabilityVector& p1,
                                 const std::vector<double>& s1,
                                 const SolverConfig& config,
                                 const KsBounds& bounds,
                                 const GradientSource& grads, RngStream base) {
  const RspgParams& rp = config.rspg;
  SolverState st;
  st.p = p1;
  st.s = s1;
  check_state(st, config, bounds);

  // tau ~ U{1..N} from a dedicated substream so iteration streams stay put.
  Rng taurng(base.sub(kSubTau));
  st.tau = 1 + static_cast<std::size_t>(taurng.uniform01() *
                                        static_cast<double>(rp.N));
  st.tau = std::min(st.tau, rp.N);

  for (std::size_t k = 1; k + 1 <= st.tau; ++k) {
    const std::size_t tau = st.tau;
    st = mdsa_step(st, config, bounds, grads, base.sub(k), rp.gamma_bar,
                   rp.gamma_bar, rp.lambda_fixed);
    st.tau = tau;
  }
  return st;
}

SolverState run_rspg(const ProbabilityVector& p1, const std::vector<double>& s1,
                     const SolverConfig& config, const OutputModel& h,
                     const SupportSet& support, const KsBounds& bounds,
                     const TargetObjective& g, RngStream base) {
  const RspgParams& rp = config.rspg;
  const GradientSource grads = make_mc_gradient_source(
      h, support, bounds, g, rp.M, rp.M, rp.M, config.eps);
  SolverState st = run_rspg_with_source(p1, s1, config, bounds, grads, base);
  attach_report(st, config, g, support, base, 1);
  return st;
}

SolverState run_two_phase_rspg_with_source(
    const ProbabilityVector& p1, const std::vector<double>& s1,
    const SolverConfig& config, const KsBounds& bounds,
    const GradientSource& grads, const GradientSource& probe_grads,
    RngStream base, unsigned workers) {
  const RspgParams& rp = config.rspg;
  if (rp.S == 0)
    throw std::invalid_argument("two-phase: need at least one candidate run");

  std::vector<SolverState> cand(rp.S);
  std::vector<double> score(rp.S);
  parallel_for(rp.S, workers, [&](std::size_t s) {
    cand[s] =
        run_rspg_with_source(p1, s1, config, bounds, grads, base.sub(1, s));

    // Probe: one large-batch step at the candidate; generalized gradient is
    // the scaled displacement it produces.
    const SolverState probe =
        mdsa_step(cand[s], config, bounds, probe_grads, base.sub(2, s),
                  rp.gamma_bar, rp.gamma_bar, rp.lambda_fixed);
    double l1 = 0.0;
    for (std::size_t i = 0; i < p1.dim(); ++i)
      l1 += std::abs(probe.p.weights[i] - cand[s].p.weights[i]) / rp.gamma_bar;
    double l2sq = 0.0;
    for (std::size_t j = 0; j < cand[s].s.size(); ++j) {
      const double d = (probe.s[j] - cand[s].s[j]) / rp.gamma_bar;
      l2sq += d * d;
    }
    score[s] = l1 * l1 + l2sq;
  });

  // Strict inequality: ties go to the lowest run index.
  std::size_t best = 0;
  for (std::size_t s = 1; s < rp.S; ++s)
    if (score[s] < score[best]) best = s;

  SolverState st = cand[best];
  st.selected_run = best + 1;
  return st;
}

SolverState run_two_phase_rspg(const ProbabilityVector& p1,
                               const std::vector<double>& s1,
                               const SolverConfig& config, const OutputModel& h,
                               const SupportSet& support,
                               const KsBounds& bounds, const TargetObjective& g,
                               RngStream base, unsigned workers) {
  const RspgParams& rp = config.rspg;
  const GradientSource grads = make_mc_gradient_source(
      h, support, bounds, g, rp.M, rp.M, rp.M, config.eps);
  const GradientSource probe_grads = make_mc_gradient_source(
      h, support, bounds, g, rp.M_post, rp.M_post, rp.M_post, config.eps);
  SolverState st = run_two_phase_rspg_with_source(
      p1, s1, config, bounds, grads, probe_grads, base, workers);
  attach_report(st, config, g, support, base.sub(3), workers);
  return st;
}

SolverState run_solver(const ProbabilityVector& p1,
                       const std::vector<double>& s1,
                       const SolverConfig& config, const OutputModel& h,
                       const SupportSet& support, const KsBounds& bounds,
                       const TargetObjective& g, RngStream base,
                       unsigned workers) {
  switch (config.algorithm) {
    case Algorithm::mdsa:
      return run_mdsa(p1, s1, config, h, support, bounds, g, base);
    case Algorithm::alt_mdsa:
      return run_alternate_mdsa(p1, config, h, support, bounds, g, base);
    case Algorithm::rspg:
      return run_rspg(p1, s1, config, h, support, bounds, g, base);
    case Algorithm::two_phase_rspg:
      return run_two_phase_rspg(p1, s1, config, h, support, bounds, g, base,
                                workers);
  }
  throw std::logic_error("run_solver: unknown algorithm");
}

double penalty_value(const ProbabilityVector& p, const SupportSet& support,
                     const OutputModel& h, const KsBounds& bounds,
                     std::size_t M, RngStream base, unsigned workers) {
  const std::vector<double> u = estimate_indicator_means(
      h, bounds.thresholds, p, support, M, base, workers);
  return projected_penalty_at(u, bounds);
}

ProbabilityVector default_initial_p(std::size_t m, double eps) {
  // Uniform already satisfies any admissible floor eps < 1/m.
  ProbabilityVector p = ProbabilityVector::uniform(m);
  std::vector<double> zeros(m, 0.0);
  return entropic_prox_step(p, zeros, eps);
}

std::vector<double> default_initial_s(const KsBounds& bounds) {
  std::vector<double> s(bounds.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    s[j] = 0.5 * (bounds.lower[j] + bounds.upper[j]);
  return s;
}

ProbabilityVector dirichlet_initial_p(std::size_t m, double eps, Rng& rng) {
  // Dirichlet(1,...,1) = normalized unit exponentials; the prox step with
  // zero scores is the KL projection onto the eps-floor simplex.
  ProbabilityVector p;
  p.weights.resize(m);
  double sum = 0.0;
  for (double& w : p.weights) {
    w = rng.exponential(1.0);
    sum += w;
  }
  for (double& w : p.weights) w /= sum;
  std::vector<double> zeros(m, 0.0);
  return entropic_prox_step(p, zeros, eps);
}

void write_trace_csv(const std::filesystem::path& file,
                     const std::vector<TraceRow>& trace) {
  std::ofstream out(file);
  if (!out)
    throw std::runtime_error("cannot write trace file: " + file.string());
  out << "k,objective_est,penalty_est,step_sup_norm,lambda_k,gamma_k,beta_k\n";
  out.precision(12);
  for (const TraceRow& r : trace)
    out << r.k << ',' << r.objective_est << ',' << r.penalty_est << ','
        << r.step_sup_norm << ',' << r.lambda_k << ',' << r.gamma_k << ','
        << r.beta_k << '\n';
}

}  // namespace simcal
