#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "simcal/calibration.hpp"

using namespace simcal;

namespace {

// Small, fast solver settings shared by the pipeline smoke tests.
SolverConfig quick_solver() {
  SolverConfig cfg;
  cfg.M1 = cfg.M2 = cfg.M3 = 30;
  cfg.max_iters = 15;
  cfg.report_batch = 500;
  return cfg;
}

CalibrationSpec quick_spec() {
  CalibrationSpec spec;
  spec.output_model = "mg1_wait20";
  spec.objectives = {ObjectiveSpec{"constant", 3.0}};
  spec.support_dist.name = "uniform";
  spec.support_dist.param1 = 0.1;
  spec.support_dist.param2 = 2.0;
  spec.m = 6;
  spec.solver = quick_solver();
  spec.seed = 4242;
  return spec;
}

OutputSample small_wait_sample() {
  // Plausible average-wait observations; values only need to be finite.
  return OutputSample({0.8, 1.5, 2.2, 3.1, 0.4, 1.9, 2.7, 1.1, 0.9, 2.0});
}

}  // namespace

TEST_CASE("epsilon floor policy") {
  // min(m^{-3/2}, 0.1/(m sqrt(n))) at the two documented corners.
  CHECK(choose_epsilon(100, 30) == doctest::Approx(1.826e-4).epsilon(1e-3));
  CHECK(choose_epsilon(100, 4) == doctest::Approx(5e-4).epsilon(1e-9));
  for (std::size_t m : {2u, 5u, 17u, 100u, 400u})
    for (std::size_t n : {1u, 10u, 1000u}) {
      const double e = choose_epsilon(m, n);
      CHECK(e > 0.0);
      CHECK(e * static_cast<double>(m) < 1.0);
    }
}

TEST_CASE("support sampling") {
  SupportDist uni;
  uni.name = "uniform";
  uni.param1 = 0.5;
  uni.param2 = 1.5;
  const SupportSet s = sample_support(uni, 50, RngStream{100, 0});
  REQUIRE(s.points.size() == 50);
  for (double x : s.points) {
    CHECK(x >= 0.5);
    CHECK(x <= 1.5);
  }
  // Deterministic in the stream.
  CHECK(s.points == sample_support(uni, 50, RngStream{100, 0}).points);
  CHECK(s.points != sample_support(uni, 50, RngStream{100, 1}).points);

  // Lognormal(0, 1) mean e^{1/2}, checked on a large sample (3-sigma band;
  // one-draw sd is sqrt(e^2 - e) ~ 2.16).
  SupportDist logn;  // defaults are mu = 0, sigma = 1
  const SupportSet big = sample_support(logn, 100000, RngStream{100, 2});
  double sum = 0.0;
  for (double x : big.points) {
    CHECK(x > 0.0);
    sum += x;
  }
  const double mean = sum / 100000.0;
  CHECK(std::abs(mean - std::exp(0.5)) < 3.0 * 2.16 / std::sqrt(100000.0));

  SupportDist pts;
  pts.name = "points";
  pts.explicit_points = {3.0, 1.0, 2.0};
  const SupportSet fixed = sample_support(pts, 3, RngStream{100, 3});
  CHECK(fixed.points.size() == 3);

  SupportDist bad;
  bad.name = "cauchy";
  CHECK_THROWS_AS(sample_support(bad, 5, RngStream{100, 4}),
                  std::invalid_argument);
}

TEST_CASE("truth data generation") {
  TruthSpec truth;  // exponential(1.2)
  const auto d1 = generate_truth_data(truth, "mg1_wait20", 40,
                                      RngStream{101, 0});
  REQUIRE(d1.size() == 40);
  for (double v : d1) CHECK(v >= 0.0);
  CHECK(d1 == generate_truth_data(truth, "mg1_wait20", 40, RngStream{101, 0}));
  CHECK(d1 != generate_truth_data(truth, "mg1_wait20", 40, RngStream{101, 1}));

  // Sample mean of many observations agrees with the MC oracle.
  const auto big = generate_truth_data(truth, "mg1_wait20", 4000,
                                       RngStream{101, 2});
  double sum = 0.0;
  for (double v : big) sum += v;
  const OutputModel h = make_output_model("mg1_wait20");
  const McEstimate oracle = mc_truth_value(
      h.map, h.horizon, make_truth_sampler(truth.name, truth.param1), 20000,
      RngStream{101, 3});
  const double se = oracle.std_error + 1.2 / std::sqrt(4000.0);
  CHECK(std::abs(sum / 4000.0 - oracle.mean) < 5.0 * se);
}

TEST_CASE("calibration pipeline on a constant objective") {
  // g == 3 regardless of p: both optima must report exactly that value, and
  // the report carries the shared support/bounds metadata.
  const CalibrationSpec spec = quick_spec();
  const OutputSample data = small_wait_sample();
  const CalibrationReport rep = calibrate_bounds(spec, data, 2);

  REQUIRE(rep.objectives.size() == 1);
  const ObjectiveResult& r = rep.objectives[0];
  CHECK(r.z_min == doctest::Approx(3.0));
  CHECK(r.z_max == doctest::Approx(3.0));
  CHECK(r.z_min <= r.z_max);
  CHECK(rep.n == data.size());
  CHECK(rep.alpha == 0.05);
  CHECK(rep.support.points.size() == spec.m);
  CHECK(rep.eps == doctest::Approx(choose_epsilon(spec.m, data.size())));
  CHECK(rep.half_width ==
        doctest::Approx(ks_quantile(0.05) / std::sqrt(10.0)).epsilon(1e-9));
  CHECK(rep.seed == spec.seed);
  CHECK(r.replications_used > 0);
  CHECK(rep.wall_seconds >= 0.0);

  // Deterministic end to end, independent of the worker count.
  const CalibrationReport rep1 = calibrate_bounds(spec, data, 1);
  CHECK(rep1.objectives[0].z_min == r.z_min);
  CHECK(rep1.objectives[0].z_max == r.z_max);
  CHECK(rep1.objectives[0].argmin.weights == r.argmin.weights);
  CHECK(rep1.support.points == rep.support.points);
}

TEST_CASE("calibration orders min below max on a real objective") {
  CalibrationSpec spec = quick_spec();
  spec.objectives = {ObjectiveSpec{"cdf_indicator", 1.0}};
  spec.solver.M1 = spec.solver.M2 = spec.solver.M3 = 60;
  spec.solver.max_iters = 150;
  spec.solver.report_batch = 4000;
  const CalibrationReport rep = calibrate_bounds(spec, small_wait_sample(), 2);
  const ObjectiveResult& r = rep.objectives[0];
  // Small stochastic slack: the budget is deliberately modest here.
  CHECK(r.z_min <= r.z_max + 0.02);
  CHECK(r.z_min >= 0.0);
  CHECK(r.z_max <= 1.0);
  CHECK_FALSE(r.trace_min.empty());
  CHECK_FALSE(r.trace_max.empty());

  // delta widens the bands; the optimal values cannot tighten.
  CalibrationSpec wide = spec;
  wide.delta = 0.05;
  const CalibrationReport repw = calibrate_bounds(wide, small_wait_sample(), 2);
  CHECK(repw.half_width == doctest::Approx(rep.half_width + 0.05));
  CHECK(repw.delta == 0.05);
}

TEST_CASE("epsilon override validation") {
  CalibrationSpec spec = quick_spec();
  spec.eps_override = 0.01;  // valid: below 1/m = 1/6
  const CalibrationReport rep = calibrate_bounds(spec, small_wait_sample());
  CHECK(rep.eps == 0.01);

  spec.eps_override = 0.2;  // 0.2 * 6 > 1
  CHECK_THROWS_AS(calibrate_bounds(spec, small_wait_sample()),
                  std::invalid_argument);
}

TEST_CASE("inadmissible schedules are rejected with the violation text") {
  CalibrationSpec spec = quick_spec();
  spec.solver.alpha1 = 0.6;  // outside the (3/4, 1] window
  CHECK_THROWS_WITH_AS(calibrate_bounds(spec, small_wait_sample()),
                       doctest::Contains("alpha1"), std::invalid_argument);
}

TEST_CASE("cdf sweep") {
  CalibrationSpec spec = quick_spec();
  spec.objectives.clear();
  const OutputSample data = small_wait_sample();

  // A level far beyond any reachable output pins both bounds at 1.
  const CalibrationReport hi = cdf_sweep(spec, {1e9}, data, 2);
  REQUIRE(hi.objectives.size() == 1);
  CHECK(hi.objectives[0].objective.name == "cdf_indicator");
  CHECK(hi.objectives[0].z_min == doctest::Approx(1.0));
  CHECK(hi.objectives[0].z_max == doctest::Approx(1.0));

  CalibrationSpec beefy = spec;
  beefy.solver.M1 = beefy.solver.M2 = beefy.solver.M3 = 60;
  beefy.solver.max_iters = 150;
  beefy.solver.report_batch = 4000;
  const CalibrationReport sweep = cdf_sweep(beefy, {0.5, 1.5, 2.5}, data, 2);
  REQUIRE(sweep.objectives.size() == 3);
  for (const ObjectiveResult& r : sweep.objectives) {
    CHECK(r.z_min >= -1e-9);
    CHECK(r.z_max <= 1.0 + 1e-9);
    CHECK(r.z_min <= r.z_max + 0.02);
  }
  CHECK_THROWS_AS(cdf_sweep(spec, {1.5, 0.5}, data), std::invalid_argument);
}

TEST_CASE("coverage experiment bookkeeping") {
  CalibrationSpec spec = quick_spec();
  TruthSpec truth;

  // Supplied truth value: no oracle pass, deterministic accounting.
  McEstimate tv;
  tv.mean = 3.0;  // the constant objective reports exactly 3
  tv.std_error = 0.0;
  const CoverageSummary cov =
      coverage_experiment(spec, truth, 8, 3, RngStream{103, 0}, tv, 100, 2);
  CHECK(cov.true_value == 3.0);
  CHECK(cov.replications.size() == 3);
  CHECK(cov.valid + cov.nonconverged == 3);
  CHECK(cov.hits == cov.valid);  // [3, 3] always contains 3
  CHECK(cov.ci_lo <= cov.ci_hi);
  CHECK(cov.ci_lo >= 0.0);
  CHECK(cov.ci_hi <= 1.0);
  std::size_t hits = 0;
  for (const CoverageReplication& r : cov.replications)
    hits += (r.converged && r.covered) ? 1 : 0;
  CHECK(hits == cov.hits);

  // Replays exactly; a fresh stream gives fresh data.
  const CoverageSummary cov2 =
      coverage_experiment(spec, truth, 8, 3, RngStream{103, 0}, tv, 100, 1);
  CHECK(cov2.hits == cov.hits);
  CHECK(cov2.replications[0].z_min == cov.replications[0].z_min);

  // Impossible truth value: zero hits.
  McEstimate miss;
  miss.mean = -5.0;
  const CoverageSummary none =
      coverage_experiment(spec, truth, 8, 2, RngStream{103, 1}, miss, 100, 2);
  CHECK(none.hits == 0);
}

TEST_CASE("report json round trip") {
  CalibrationSpec spec = quick_spec();
  spec.objectives = {ObjectiveSpec{"constant", 3.0},
                     ObjectiveSpec{"cdf_indicator", 1.5}};
  const CalibrationReport rep = calibrate_bounds(spec, small_wait_sample(), 2);

  const std::string text = report_to_json(rep);
  const CalibrationReport back = report_from_json(text);
  CHECK(back.n == rep.n);
  CHECK(back.alpha == rep.alpha);
  CHECK(back.half_width == rep.half_width);
  CHECK(back.eps == rep.eps);
  CHECK(back.seed == rep.seed);
  CHECK(back.output_model == rep.output_model);
  CHECK(back.support.points == rep.support.points);
  REQUIRE(back.objectives.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.objectives[i].objective.name == rep.objectives[i].objective.name);
    CHECK(back.objectives[i].z_min == rep.objectives[i].z_min);
    CHECK(back.objectives[i].z_max == rep.objectives[i].z_max);
    CHECK(back.objectives[i].argmin.weights == rep.objectives[i].argmin.weights);
    CHECK(back.objectives[i].trace_min.size() ==
          rep.objectives[i].trace_min.size());
  }
  // Serialization is stable: same report, same text.
  CHECK(report_to_json(back) == text);

  namespace fs = std::filesystem;
  const fs::path f = fs::temp_directory_path() / "simcal_report_test.json";
  write_report_json(f, rep);
  const CalibrationReport loaded = load_report_json(f);
  CHECK(loaded.objectives[0].z_min == rep.objectives[0].z_min);
  fs::remove(f);

  CHECK_THROWS_AS(report_from_json("{\"schema_version\": 999}"),
                  std::runtime_error);
  CHECK_THROWS_AS(report_from_json("not json"), std::exception);
}

TEST_CASE("distribution csv export") {
  namespace fs = std::filesystem;
  const fs::path f = fs::temp_directory_path() / "simcal_dist_test.csv";
  SupportSet sup;
  sup.points = {0.5, 1.25, 2.0};
  ProbabilityVector w;
  w.weights = {0.2, 0.3, 0.5};
  write_distribution_csv(f, sup, &w);

  std::ifstream in(f);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("point") != std::string::npos);
  CHECK(line.find(',') != std::string::npos);
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].find("1.25") != std::string::npos);  // '.' decimal separator
  const auto comma = rows[1].find(',');
  REQUIRE(comma != std::string::npos);
  CHECK(std::stod(rows[1].substr(comma + 1)) == 0.3);  // round-trips exactly

  // Support-only export writes zero weights.
  write_distribution_csv(f, sup, nullptr);
  std::ifstream in2(f);
  std::getline(in2, line);
  std::getline(in2, line);
  CHECK(line.find(",0") != std::string::npos);
  fs::remove(f);
}
