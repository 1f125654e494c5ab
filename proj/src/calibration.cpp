#include "simcal/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "simcal/parallel.hpp"

namespace simcal {

namespace {
// Stream purposes under the calibration master stream.
constexpr std::uint64_t kStreamSupport = 1;
constexpr std::uint64_t kStreamSolvers = 2;
constexpr std::uint64_t kStreamData = 3;
constexpr std::uint64_t kStreamOracle = 4;
}  // namespace

SupportSet sample_support(const SupportDist& dist, std::size_t m,
                          RngStream stream) {
  if (m < 2) throw std::invalid_argument("sample_support: need m >= 2");
  SupportSet s;
  s.seed = stream.seed;
  s.points.resize(m);
  Rng rng(stream);
  std::ostringstream desc;
  if (dist.name == "lognormal") {
    for (double& z : s.points) z = rng.lognormal(dist.param1, dist.param2);
    desc << "lognormal(" << dist.param1 << "," << dist.param2 << ")";
  } else if (dist.name == "uniform") {
    if (!(dist.param1 < dist.param2))
      throw std::invalid_argument("sample_support: uniform needs lo < hi");
    for (double& z : s.points) z = rng.uniform(dist.param1, dist.param2);
    desc << "uniform(" << dist.param1 << "," << dist.param2 << ")";
  } else if (dist.name == "points") {
    if (dist.explicit_points.size() < 2)
      throw std::invalid_argument("sample_support: need >= 2 explicit points");
    s.points = dist.explicit_points;
    desc << "explicit(" << s.points.size() << " points)";
  } else {
    throw std::invalid_argument("sample_support: unsupported distribution '" +
                                dist.name + "'");
  }
  s.generator_desc = desc.str();
  return s;
}

double choose_epsilon(std::size_t m, std::size_t n) {
  if (m < 2) throw std::invalid_argument("choose_epsilon: need m >= 2");
  if (n < 1) throw std::invalid_argument("choose_epsilon: need n >= 1");
  const double md = static_cast<double>(m);
  const double a = std::pow(md, -1.5);
  const double b = 0.1 / (md * std::sqrt(static_cast<double>(n)));
  return std::min(a, b);
}

CalibrationReport calibrate_bounds_with_stream(const CalibrationSpec& spec,
                                               const OutputSample& data,
                                               RngStream stream,
                                               unsigned workers) {
  if (spec.objectives.empty())
    throw std::invalid_argument("calibrate: need at least one objective");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0))
    throw std::invalid_argument("calibrate: alpha must be in (0,1)");
  const auto t0 = std::chrono::steady_clock::now();

  CalibrationReport rep;
  rep.n = data.size();
  rep.alpha = spec.alpha;
  rep.delta = spec.delta;
  rep.output_model = spec.output_model;
  rep.seed = spec.seed;

  const KsBounds bounds = build_continuous_bounds(data, spec.alpha, spec.delta);
  rep.half_width = bounds.half_width;
  rep.support = sample_support(spec.support_dist, spec.m,
                               stream.sub(kStreamSupport));
  rep.eps = spec.eps_override >= 0.0 ? spec.eps_override
                                     : choose_epsilon(spec.m, data.size());
  if (!(rep.eps > 0.0 && rep.eps < 1.0 / static_cast<double>(spec.m)))
    throw std::invalid_argument("calibrate: eps must lie in (0, 1/m)");

  SolverConfig base_cfg = spec.solver;
  base_cfg.eps = rep.eps;
  {
    SolverConfig probe = base_cfg;
    probe.sense = Sense::minimize;
    const auto violations = validate_schedule(probe);
    if (!violations.empty()) {
      std::string msg = "calibrate: invalid solver schedule:";
      for (const auto& v : violations) msg += " " + v + ";";
      throw std::invalid_argument(msg);
    }
  }

  const OutputModel h = make_output_model(spec.output_model);
  const ProbabilityVector p1 = default_initial_p(spec.m, rep.eps);
  const std::vector<double> s1 = default_initial_s(bounds);

  const std::size_t L = spec.objectives.size();
  // One run per (objective, sense); all runs are independent given streams.
  // Results land in per-run slots, then a single-writer reduction below.
  std::vector<SolverState> runs(2 * L);
  parallel_for(2 * L, workers, [&](std::size_t idx) {
    const std::size_t l = idx / 2;
    const bool is_max = (idx % 2) == 1;
    const TargetObjective g =
        make_target(spec.objectives[l].name, spec.objectives[l].param);
    SolverConfig cfg = base_cfg;
    cfg.sense = is_max ? Sense::maximize : Sense::minimize;
    const RngStream run = stream.sub(kStreamSolvers, l, is_max ? 1 : 0);
    runs[idx] = run_solver(p1, s1, cfg, h, rep.support, bounds, g, run, 1);
  });

  // Fixed-iteration algorithms have no convergence notion; count them done.
  const bool fixed_iters = base_cfg.algorithm == Algorithm::rspg ||
                           base_cfg.algorithm == Algorithm::two_phase_rspg;
  rep.objectives.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    ObjectiveResult& out = rep.objectives[l];
    out.objective = spec.objectives[l];
    const SolverState& mn = runs[2 * l];
    const SolverState& mx = runs[2 * l + 1];
    out.z_min = mn.objective_estimate;
    out.argmin = mn.p;
    out.min_converged = mn.converged || fixed_iters;
    out.trace_min = mn.trace;
    out.z_max = mx.objective_estimate;
    out.argmax = mx.p;
    out.max_converged = mx.converged || fixed_iters;
    out.trace_max = mx.trace;
    out.replications_used = mn.replications_used + mx.replications_used;
    out.clip_events = mn.clip_events + mx.clip_events;
  }

  for (const ObjectiveResult& o : rep.objectives)
    if (o.min_converged && o.max_converged && o.z_min > o.z_max)
      rep.diagnostics.push_back("objective '" + o.objective.name +
                                "': z_min exceeds z_max");

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

CalibrationReport calibrate_bounds(const CalibrationSpec& spec,
                                   const OutputSample& data,
                                   unsigned workers) {
  return calibrate_bounds_with_stream(spec, data, RngStream{spec.seed, 0},
                                      workers);
}

CalibrationReport cdf_sweep(const CalibrationSpec& base,
                            const std::vector<double>& levels,
                            const OutputSample& data, unsigned workers) {
  if (levels.empty()) throw std::invalid_argument("cdf_sweep: no levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i - 1] < levels[i]))
      throw std::invalid_argument("cdf_sweep: levels must strictly increase");
  CalibrationSpec spec = base;
  spec.objectives.clear();
  for (double a : levels) spec.objectives.push_back({"cdf_indicator", a});
  CalibrationReport rep = calibrate_bounds(spec, data, workers);
  // Raw values stay as computed; non-monotone stretches are only flagged.
  for (std::size_t i = 1; i < rep.objectives.size(); ++i) {
    if (rep.objectives[i].z_min < rep.objectives[i - 1].z_min - 1e-12)
      rep.diagnostics.push_back("sweep: lower bound decreases at level " +
                                std::to_string(levels[i]));
    if (rep.objectives[i].z_max < rep.objectives[i - 1].z_max - 1e-12)
      rep.diagnostics.push_back("sweep: upper bound decreases at level " +
                                std::to_string(levels[i]));
  }
  return rep;
}

std::vector<double> generate_truth_data(const TruthSpec& truth,
                                        const std::string& output_model,
                                        std::size_t n, RngStream stream) {
  if (n < 1) throw std::invalid_argument("generate_truth_data: need n >= 1");
  const OutputModel h = make_output_model(output_model);
  const ServiceSampler svc =
      make_truth_sampler(truth.name, truth.param1, truth.param2);
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r)
    out[r] = simulate_truth_value(h.map, h.horizon, svc, stream.sub(r));
  return out;
}

CoverageSummary coverage_experiment(const CalibrationSpec& spec,
                                    const TruthSpec& truth, std::size_t n,
                                    std::size_t R, RngStream stream,
                                    std::optional<McEstimate> true_value,
                                    std::size_t oracle_reps, unsigned workers) {
  if (R < 1) throw std::invalid_argument("coverage: need R >= 1");
  if (spec.objectives.size() != 1)
    throw std::invalid_argument("coverage: exactly one objective expected");

  CoverageSummary sum;
  if (true_value) {
    sum.true_value = true_value->mean;
    sum.true_value_se = true_value->std_error;
  } else {
    const TargetObjective g =
        make_target(spec.objectives[0].name, spec.objectives[0].param);
    const ServiceSampler svc =
        make_truth_sampler(truth.name, truth.param1, truth.param2);
    const McEstimate est =
        mc_truth_value(g.map, g.horizon, svc, oracle_reps,
                       stream.sub(kStreamOracle), workers);
    sum.true_value = est.mean;
    sum.true_value_se = est.std_error;
  }

  sum.replications.resize(R);
  parallel_for(R, workers, [&](std::size_t r) {
    const OutputSample data(generate_truth_data(
        truth, spec.output_model, n, stream.sub(kStreamData, r)));
    const CalibrationReport rep = calibrate_bounds_with_stream(
        spec, data, stream.sub(kStreamSolvers, r), 1);
    CoverageReplication& row = sum.replications[r];
    const ObjectiveResult& o = rep.objectives[0];
    row.z_min = o.z_min;
    row.z_max = o.z_max;
    row.converged = o.min_converged && o.max_converged;
    row.covered = row.z_min <= sum.true_value && sum.true_value <= row.z_max;
  });

  for (const CoverageReplication& row : sum.replications) {
    if (!row.converged) {
      ++sum.nonconverged;
      continue;
    }
    ++sum.valid;
    if (row.covered) ++sum.hits;
  }
  if (sum.valid > 0) {
    const double phat =
        static_cast<double>(sum.hits) / static_cast<double>(sum.valid);
    const double z = normal_quantile(0.975);
    const double hw =
        z * std::sqrt(std::max(phat * (1.0 - phat), 1e-12) /
                      static_cast<double>(sum.valid));
    sum.ci_lo = std::max(0.0, phat - hw);
    sum.ci_hi = std::min(1.0, phat + hw);
  }
  return sum;
}

// ---- serialization -------------------------------------------------------

namespace {
using nlohmann::json;

json trace_to_json(const std::vector<TraceRow>& trace) {
  json arr = json::array();
  for (const TraceRow& r : trace)
    arr.push_back({{"k", r.k},
                   {"objective_est", r.objective_est},
                   {"penalty_est", r.penalty_est},
                   {"step_sup_norm", r.step_sup_norm},
                   {"lambda_k", r.lambda_k},
                   {"gamma_k", r.gamma_k},
                   {"beta_k", r.beta_k}});
  return arr;
}

std::vector<TraceRow> trace_from_json(const json& arr) {
  std::vector<TraceRow> t;
  for (const json& r : arr)
    t.push_back(TraceRow{r.at("k").get<std::size_t>(),
                         r.at("objective_est").get<double>(),
                         r.at("penalty_est").get<double>(),
                         r.at("step_sup_norm").get<double>(),
                         r.at("lambda_k").get<double>(),
                         r.at("gamma_k").get<double>(),
                         r.at("beta_k").get<double>()});
  return t;
}
}  // namespace

std::string report_to_json(const CalibrationReport& rep) {
  json j;
  j["schema_version"] = CalibrationReport::kSchemaVersion;
  j["n"] = rep.n;
  j["alpha"] = rep.alpha;
  j["half_width"] = rep.half_width;
  j["delta"] = rep.delta;
  j["eps"] = rep.eps;
  j["output_model"] = rep.output_model;
  j["seed"] = rep.seed;
  j["wall_seconds"] = rep.wall_seconds;
  j["diagnostics"] = rep.diagnostics;
  j["support"] = {{"points", rep.support.points},
                  {"generator", rep.support.generator_desc},
                  {"seed", rep.support.seed}};
  json objs = json::array();
  for (const ObjectiveResult& o : rep.objectives)
    objs.push_back({{"name", o.objective.name},
                    {"param", o.objective.param},
                    {"z_min", o.z_min},
                    {"z_max", o.z_max},
                    {"argmin", o.argmin.weights},
                    {"argmax", o.argmax.weights},
                    {"min_converged", o.min_converged},
                    {"max_converged", o.max_converged},
                    {"replications_used", o.replications_used},
                    {"clip_events", o.clip_events},
                    {"trace_min", trace_to_json(o.trace_min)},
                    {"trace_max", trace_to_json(o.trace_max)}});
  j["objectives"] = std::move(objs);
  return j.dump(2);
}

CalibrationReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  const int version = j.at("schema_version").get<int>();
  if (version != CalibrationReport::kSchemaVersion)
    throw std::runtime_error("report schema version " +
                             std::to_string(version) + " not supported");
  CalibrationReport rep;
  rep.n = j.at("n").get<std::size_t>();
  rep.alpha = j.at("alpha").get<double>();
  rep.half_width = j.at("half_width").get<double>();
  rep.delta = j.at("delta").get<double>();
  rep.eps = j.at("eps").get<double>();
  rep.output_model = j.at("output_model").get<std::string>();
  rep.seed = j.at("seed").get<std::uint64_t>();
  rep.wall_seconds = j.at("wall_seconds").get<double>();
  rep.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  const json& sup = j.at("support");
  rep.support.points = sup.at("points").get<std::vector<double>>();
  rep.support.generator_desc = sup.at("generator").get<std::string>();
  rep.support.seed = sup.at("seed").get<std::uint64_t>();
  for (const json& o : j.at("objectives")) {
    ObjectiveResult r;
    r.objective.name = o.at("name").get<std::string>();
    r.objective.param = o.at("param").get<double>();
    r.z_min = o.at("z_min").get<double>();
    r.z_max = o.at("z_max").get<double>();
    r.argmin.weights = o.at("argmin").get<std::vector<double>>();
    r.argmax.weights = o.at("argmax").get<std::vector<double>>();
    r.min_converged = o.at("min_converged").get<bool>();
    r.max_converged = o.at("max_converged").get<bool>();
    r.replications_used = o.at("replications_used").get<std::size_t>();
    r.clip_events = o.at("clip_events").get<std::size_t>();
    r.trace_min = trace_from_json(o.at("trace_min"));
    r.trace_max = trace_from_json(o.at("trace_max"));
    rep.objectives.push_back(std::move(r));
  }
  return rep;
}

void write_report_json(const std::filesystem::path& file,
                       const CalibrationReport& report) {
  std::ofstream out(file, std::ios::binary);  // binary: LF everywhere
  if (!out)
    throw std::runtime_error("cannot write report: " + file.string());
  out << report_to_json(report) << '\n';
}

CalibrationReport load_report_json(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

void write_distribution_csv(const std::filesystem::path& file,
                            const SupportSet& support,
                            const ProbabilityVector* weights) {
  if (weights && weights->dim() != support.size())
    throw std::invalid_argument("distribution csv: size mismatch");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write csv: " + file.string());
  out << "point,weight\n";
  out.precision(17);
  for (std::size_t i = 0; i < support.size(); ++i)
    out << support.points[i] << ','
        << (weights ? weights->weights[i] : 0.0) << '\n';
}

}  // namespace simcal
