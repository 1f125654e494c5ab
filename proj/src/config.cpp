#include "simcal/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace simcal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ParseContext {
  std::string source;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& field,
                         const std::string& msg) const {
    throw std::runtime_error(source + ":" + std::to_string(line) + ": field '" +
                             field + "': " + msg);
  }
};

double to_real(const ParseContext& ctx, const std::string& key,
               const std::string& v) {
  std::istringstream ss(v);
  double x;
  std::string rest;
  if (!(ss >> x) || (ss >> rest)) ctx.fail(key, "expected a number, got '" + v + "'");
  return x;
}

std::uint64_t to_uint(const ParseContext& ctx, const std::string& key,
                      const std::string& v) {
  std::istringstream ss(v);
  std::uint64_t x;
  std::string rest;
  if (!(ss >> x) || (ss >> rest) || v.find('-') != std::string::npos)
    ctx.fail(key, "expected a nonnegative integer, got '" + v + "'");
  return x;
}

bool to_bool(const ParseContext& ctx, const std::string& key,
             const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  ctx.fail(key, "expected true/false, got '" + v + "'");
}

std::vector<double> to_real_list(const ParseContext& ctx,
                                 const std::string& key,
                                 const std::string& v) {
  std::istringstream ss(v);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(to_real(ctx, key, tok));
  if (out.empty()) ctx.fail(key, "expected at least one number");
  return out;
}

Algorithm to_algorithm(const ParseContext& ctx, const std::string& key,
                       const std::string& v) {
  if (v == "mdsa") return Algorithm::mdsa;
  if (v == "alt-mdsa" || v == "alt_mdsa") return Algorithm::alt_mdsa;
  if (v == "rspg") return Algorithm::rspg;
  if (v == "two-phase-rspg" || v == "two_phase_rspg")
    return Algorithm::two_phase_rspg;
  ctx.fail(key, "unknown algorithm '" + v +
                    "' (expected mdsa, alt-mdsa, rspg or two-phase-rspg)");
}

}  // namespace

RunConfig parse_config_text(const std::string& text,
                            const std::string& source_name) {
  RunConfig cfg;
  cfg.spec.objectives.clear();
  ParseContext ctx{source_name, 0};
  std::string section;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++ctx.line;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail(line, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"data",   "model", "objective", "support",
                                    "bounds", "solver", "rspg",     "run",
                                    "sweep",  "coverage", "table1"};
      if (std::find(std::begin(known), std::end(known), section) ==
          std::end(known))
        ctx.fail(section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) ctx.fail(line, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) ctx.fail(line, "expected 'key = value'");
    const std::string qkey = section + "." + key;

    if (qkey == "data.truth") {
      cfg.truth.name = val;
    } else if (qkey == "data.param1" || qkey == "data.rate") {
      cfg.truth.param1 = to_real(ctx, qkey, val);
    } else if (qkey == "data.param2") {
      cfg.truth.param2 = to_real(ctx, qkey, val);
    } else if (qkey == "data.n") {
      cfg.data_n = to_uint(ctx, qkey, val);
    } else if (qkey == "model.output") {
      cfg.spec.output_model = val;
    } else if (qkey == "objective.name") {
      // Each name/param pair appends one objective; param applies to the
      // most recent name.
      cfg.spec.objectives.push_back({val, 0.0});
    } else if (qkey == "objective.param") {
      if (cfg.spec.objectives.empty())
        ctx.fail(qkey, "param before any objective name");
      cfg.spec.objectives.back().param = to_real(ctx, qkey, val);
    } else if (qkey == "support.dist") {
      cfg.spec.support_dist.name = val;
    } else if (qkey == "support.param1") {
      cfg.spec.support_dist.param1 = to_real(ctx, qkey, val);
    } else if (qkey == "support.param2") {
      cfg.spec.support_dist.param2 = to_real(ctx, qkey, val);
    } else if (qkey == "support.m") {
      cfg.spec.m = to_uint(ctx, qkey, val);
      if (cfg.spec.m < 2) ctx.fail(qkey, "m must be >= 2");
    } else if (qkey == "bounds.alpha") {
      cfg.spec.alpha = to_real(ctx, qkey, val);
      if (!(cfg.spec.alpha > 0.0 && cfg.spec.alpha < 1.0))
        ctx.fail(qkey, "alpha must be in (0,1)");
    } else if (qkey == "bounds.delta") {
      cfg.spec.delta = to_real(ctx, qkey, val);
      if (cfg.spec.delta < 0.0) ctx.fail(qkey, "delta must be >= 0");
    } else if (qkey == "solver.algorithm") {
      cfg.spec.solver.algorithm = to_algorithm(ctx, qkey, val);
    } else if (qkey == "solver.a") {
      cfg.spec.solver.a = to_real(ctx, qkey, val);
    } else if (qkey == "solver.b") {
      cfg.spec.solver.b = to_real(ctx, qkey, val);
    } else if (qkey == "solver.c") {
      cfg.spec.solver.c = to_real(ctx, qkey, val);
    } else if (qkey == "solver.alpha1") {
      cfg.spec.solver.alpha1 = to_real(ctx, qkey, val);
    } else if (qkey == "solver.alpha2") {
      cfg.spec.solver.alpha2 = to_real(ctx, qkey, val);
    } else if (qkey == "solver.alpha3") {
      cfg.spec.solver.alpha3 = to_real(ctx, qkey, val);
    } else if (qkey == "solver.log_lambda") {
      cfg.spec.solver.log_lambda = to_bool(ctx, qkey, val);
    } else if (qkey == "solver.M1") {
      cfg.spec.solver.M1 = to_uint(ctx, qkey, val);
    } else if (qkey == "solver.M2") {
      cfg.spec.solver.M2 = to_uint(ctx, qkey, val);
    } else if (qkey == "solver.M3") {
      cfg.spec.solver.M3 = to_uint(ctx, qkey, val);
    } else if (qkey == "solver.stop_tol") {
      cfg.spec.solver.stop_tol = to_real(ctx, qkey, val);
    } else if (qkey == "solver.stop_window") {
      cfg.spec.solver.stop_window = to_uint(ctx, qkey, val);
    } else if (qkey == "solver.max_iters") {
      cfg.spec.solver.max_iters = to_uint(ctx, qkey, val);
    } else if (qkey == "solver.report_batch") {
      cfg.spec.solver.report_batch = to_uint(ctx, qkey, val);
    } else if (qkey == "solver.eps") {
      cfg.spec.eps_override = to_real(ctx, qkey, val);
    } else if (qkey == "rspg.N") {
      cfg.spec.solver.rspg.N = to_uint(ctx, qkey, val);
    } else if (qkey == "rspg.S") {
      cfg.spec.solver.rspg.S = to_uint(ctx, qkey, val);
    } else if (qkey == "rspg.M") {
      cfg.spec.solver.rspg.M = to_uint(ctx, qkey, val);
    } else if (qkey == "rspg.M_post") {
      cfg.spec.solver.rspg.M_post = to_uint(ctx, qkey, val);
    } else if (qkey == "rspg.gamma_bar") {
      cfg.spec.solver.rspg.gamma_bar = to_real(ctx, qkey, val);
    } else if (qkey == "rspg.lambda") {
      cfg.spec.solver.rspg.lambda_fixed = to_real(ctx, qkey, val);
    } else if (qkey == "run.seed") {
      cfg.spec.seed = to_uint(ctx, qkey, val);
    } else if (qkey == "run.workers") {
      cfg.workers = static_cast<unsigned>(to_uint(ctx, qkey, val));
    } else if (qkey == "sweep.levels") {
      cfg.sweep_levels = to_real_list(ctx, qkey, val);
      for (std::size_t i = 1; i < cfg.sweep_levels.size(); ++i)
        if (!(cfg.sweep_levels[i - 1] < cfg.sweep_levels[i]))
          ctx.fail(qkey, "levels must be strictly increasing");
    } else if (qkey == "coverage.R") {
      cfg.coverage_R = to_uint(ctx, qkey, val);
    } else if (qkey == "coverage.n") {
      cfg.data_n = to_uint(ctx, qkey, val);
    } else if (qkey == "table1.cells") {
      std::istringstream cs(val);
      std::string cell;
      while (cs >> cell) {
        const auto colon = cell.find(':');
        if (colon == std::string::npos)
          ctx.fail(qkey, "expected m:n pairs, got '" + cell + "'");
        cfg.table1_cells.emplace_back(
            to_uint(ctx, qkey, cell.substr(0, colon)),
            to_uint(ctx, qkey, cell.substr(colon + 1)));
      }
      if (cfg.table1_cells.empty()) ctx.fail(qkey, "no cells given");
    } else {
      ctx.fail(qkey, "unknown key");
    }
  }
  if (cfg.spec.objectives.empty())
    cfg.spec.objectives.push_back({"mg1_queuelen20", 0.0});
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw std::runtime_error("cannot open config file: " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), file.string());
}

}  // namespace simcal
