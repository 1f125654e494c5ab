// Command-line front end for the calibration library: data generation,
// single calibrations, CDF sweeps, coverage studies and (m, n) grids, all
// driven by an INI-style config file with flag overrides.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "simcal/calibration.hpp"
#include "simcal/config.hpp"
#include "simcal/parallel.hpp"

namespace fs = std::filesystem;
using namespace simcal;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string data_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> algorithm;
  std::string sense = "both";
  std::optional<double> delta;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool need_config,
                bool with_out_dir = true) {
  auto* c = cmd->add_option("--config", f.config_path, "configuration file");
  if (need_config) c->required();
  if (with_out_dir) cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "master seed override");
  cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  cmd->add_option("--algorithm", f.algorithm,
                  "solver override: mdsa|alt-mdsa|rspg|two-phase-rspg");
  cmd->add_option("--sense", f.sense, "report sense: min|max|both")
      ->check(CLI::IsMember({"min", "max", "both"}));
  cmd->add_option("--delta", f.delta, "extra half-width inflation");
}

RunConfig load_run_config(const CommonFlags& f) {
  RunConfig cfg = parse_config_file(f.config_path);
  if (!f.seed) {
    if (const char* env = std::getenv("SIMCAL_SEED"))
      cfg.spec.seed = std::strtoull(env, nullptr, 10);
  } else {
    cfg.spec.seed = *f.seed;
  }
  if (f.workers) cfg.workers = *f.workers;
  if (f.delta) cfg.spec.delta = *f.delta;
  if (f.algorithm) {
    // Reuse the config parser's validation for the flag value.
    cfg.spec.solver.algorithm =
        parse_config_text("[solver]\nalgorithm = " + *f.algorithm)
            .spec.solver.algorithm;
  }
  return cfg;
}

unsigned effective_workers(const RunConfig& cfg) {
  return cfg.workers == 0 ? default_workers() : cfg.workers;
}

int exit_code_for(const CalibrationReport& rep) {
  for (const ObjectiveResult& o : rep.objectives)
    if (!o.min_converged || !o.max_converged) return 2;
  return 0;
}

void print_report(const CalibrationReport& rep, const std::string& sense) {
  for (const ObjectiveResult& o : rep.objectives) {
    std::cout << o.objective.name;
    if (o.objective.name == "cdf_indicator")
      std::cout << "(a=" << o.objective.param << ")";
    if (sense != "max")
      std::cout << "  z_min=" << o.z_min
                << (o.min_converged ? "" : " [not converged]");
    if (sense != "min")
      std::cout << "  z_max=" << o.z_max
                << (o.max_converged ? "" : " [not converged]");
    std::cout << '\n';
  }
}

void write_outputs(const fs::path& out_dir, const CalibrationReport& rep) {
  fs::create_directories(out_dir);
  write_report_json(out_dir / "report.json", rep);
  write_distribution_csv(out_dir / "support.csv", rep.support, nullptr);
  for (std::size_t l = 0; l < rep.objectives.size(); ++l) {
    const ObjectiveResult& o = rep.objectives[l];
    const std::string tag = "obj" + std::to_string(l);
    write_distribution_csv(out_dir / (tag + "_argmin.csv"), rep.support,
                           &o.argmin);
    write_distribution_csv(out_dir / (tag + "_argmax.csv"), rep.support,
                           &o.argmax);
    write_trace_csv(out_dir / (tag + "_trace_min.csv"), o.trace_min);
    write_trace_csv(out_dir / (tag + "_trace_max.csv"), o.trace_max);
  }
}

int cmd_generate_data(const CommonFlags& f, const std::string& out_file) {
  const RunConfig cfg = load_run_config(f);
  const std::vector<double> data = generate_truth_data(
      cfg.truth, cfg.spec.output_model, cfg.data_n,
      RngStream{cfg.spec.seed, 0});
  std::ofstream out(out_file, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write data file: " << out_file << '\n';
    return 1;
  }
  out.precision(17);
  out << "# " << cfg.truth.name << "(" << cfg.truth.param1 << ") n="
      << cfg.data_n << " seed=" << cfg.spec.seed << '\n';
  for (double v : data) out << v << '\n';
  std::cout << "wrote " << data.size() << " observations to " << out_file
            << '\n';
  return 0;
}

int cmd_calibrate(const CommonFlags& f) {
  const RunConfig cfg = load_run_config(f);
  const OutputSample data = OutputSample::load(f.data_path);
  const CalibrationReport rep =
      calibrate_bounds(cfg.spec, data, effective_workers(cfg));
  write_outputs(f.out_dir, rep);
  print_report(rep, f.sense);
  return exit_code_for(rep);
}

int cmd_cdf_sweep(const CommonFlags& f) {
  const RunConfig cfg = load_run_config(f);
  if (cfg.sweep_levels.empty()) {
    std::cerr << f.config_path << ": [sweep] levels missing\n";
    return 1;
  }
  const OutputSample data = OutputSample::load(f.data_path);
  const CalibrationReport rep =
      cdf_sweep(cfg.spec, cfg.sweep_levels, data, effective_workers(cfg));
  write_outputs(f.out_dir, rep);
  {
    std::ofstream csv(fs::path(f.out_dir) / "sweep.csv", std::ios::binary);
    csv.precision(12);
    csv << "a,min,max\n";
    for (const ObjectiveResult& o : rep.objectives)
      csv << o.objective.param << ',' << o.z_min << ',' << o.z_max << '\n';
  }
  print_report(rep, f.sense);
  for (const std::string& d : rep.diagnostics) std::cout << "note: " << d << '\n';
  return exit_code_for(rep);
}

int cmd_coverage(const CommonFlags& f, std::size_t R_override) {
  RunConfig cfg = load_run_config(f);
  if (R_override > 0) cfg.coverage_R = R_override;
  const CoverageSummary sum = coverage_experiment(
      cfg.spec, cfg.truth, cfg.data_n, cfg.coverage_R,
      RngStream{cfg.spec.seed, 1}, std::nullopt, 1000000,
      effective_workers(cfg));
  fs::create_directories(f.out_dir);
  {
    std::ofstream csv(fs::path(f.out_dir) / "coverage.csv", std::ios::binary);
    csv.precision(12);
    csv << "hits,R,valid,nonconverged,ci_lo,ci_hi,true_value,true_se\n";
    csv << sum.hits << ',' << sum.replications.size() << ',' << sum.valid
        << ',' << sum.nonconverged << ',' << sum.ci_lo << ',' << sum.ci_hi
        << ',' << sum.true_value << ',' << sum.true_value_se << '\n';
  }
  std::cout << "coverage: " << sum.hits << "/" << sum.valid << " (CI ["
            << sum.ci_lo << ", " << sum.ci_hi << "]), truth "
            << sum.true_value << " +- " << sum.true_value_se << '\n';
  return sum.nonconverged == 0 ? 0 : 2;
}

int cmd_table1(const CommonFlags& f) {
  const RunConfig cfg = load_run_config(f);
  if (cfg.table1_cells.empty()) {
    std::cerr << f.config_path << ": [table1] cells missing\n";
    return 1;
  }
  fs::create_directories(f.out_dir);
  std::ofstream csv(fs::path(f.out_dir) / "table1.csv", std::ios::binary);
  csv.precision(12);
  csv << "m,n,min,max\n";
  int status = 0;
  for (const auto& [m, n] : cfg.table1_cells) {
    RunConfig cell = cfg;
    cell.spec.m = m;
    cell.data_n = n;
    const OutputSample data(generate_truth_data(
        cell.truth, cell.spec.output_model, n,
        RngStream{cell.spec.seed, 0}.sub(7, m, n)));
    const CalibrationReport rep =
        calibrate_bounds(cell.spec, data, effective_workers(cfg));
    const ObjectiveResult& o = rep.objectives.front();
    csv << m << ',' << n << ',' << o.z_min << ',' << o.z_max << '\n';
    std::cout << "m=" << m << " n=" << n << "  [" << o.z_min << ", "
              << o.z_max << "]\n";
    status = std::max(status, exit_code_for(rep));
  }
  return status;
}

int cmd_validate(const CommonFlags& f) {
  const RunConfig cfg = load_run_config(f);
  SolverConfig probe = cfg.spec.solver;
  const auto violations = validate_schedule(probe);
  if (violations.empty()) {
    std::cout << "config ok\n";
    return 0;
  }
  for (const std::string& v : violations)
    std::cerr << "schedule violation: " << v << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation input calibration from output data"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string gen_out = "data.txt";
  std::size_t cov_R = 0;

  auto* gen = app.add_subcommand("generate-data",
                                 "simulate output observations under a truth model");
  add_common(gen, f, true, /*with_out_dir=*/false);
  gen->add_option("--out", gen_out, "output data file");

  auto* cal = app.add_subcommand("calibrate", "min/max bounds for the objectives");
  add_common(cal, f, true);
  cal->add_option("--data", f.data_path, "output data file")->required();

  auto* sweep = app.add_subcommand("cdf-sweep",
                                   "simultaneous CDF bounds over a level grid");
  add_common(sweep, f, true);
  sweep->add_option("--data", f.data_path, "output data file")->required();

  auto* cov = app.add_subcommand("coverage", "fresh-data coverage study");
  add_common(cov, f, true);
  cov->add_option("--replications", cov_R, "override [coverage] R");

  auto* tab = app.add_subcommand("table1", "bounds over an (m, n) grid");
  add_common(tab, f, true);

  auto* val = app.add_subcommand("validate-config", "parse and check a config");
  add_common(val, f, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate_data(f, gen_out);
    if (cal->parsed()) return cmd_calibrate(f);
    if (sweep->parsed()) return cmd_cdf_sweep(f);
    if (cov->parsed()) return cmd_coverage(f, cov_R);
    if (tab->parsed()) return cmd_table1(f);
    if (val->parsed()) return cmd_validate(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
