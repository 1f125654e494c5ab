#include "simcal/sim_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "simcal/parallel.hpp"

namespace simcal {

namespace {
// Substream purposes under one replication stream.
constexpr std::uint64_t kPurposeInputs = 0;
constexpr std::uint64_t kPurposeAux = 1;
}  // namespace

std::vector<std::uint32_t> draw_input_indices(const ProbabilityVector& p,
                                              std::size_t horizon, Rng& rng) {
  const std::size_t m = p.dim();
  if (m == 0) throw std::invalid_argument("draw_input_indices: empty p");
  std::vector<std::uint32_t> idx(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    // CDF inversion; u < 1 guarantees termination before running off the end.
    const double u = rng.uniform01();
    double acc = 0.0;
    std::uint32_t i = 0;
    for (; i + 1 < m; ++i) {
      acc += p.weights[i];
      if (u < acc) break;
    }
    idx[t] = i;
  }
  return idx;
}

std::vector<double> indices_to_values(std::span<const std::uint32_t> idx,
                                      const SupportSet& support) {
  std::vector<double> x(idx.size());
  for (std::size_t t = 0; t < idx.size(); ++t) {
    if (idx[t] >= support.size())
      throw std::out_of_range("indices_to_values: index beyond support");
    x[t] = support.points[idx[t]];
  }
  return x;
}

std::vector<double> draw_input_sequence(const ProbabilityVector& p,
                                        const SupportSet& support,
                                        std::size_t horizon, Rng& rng) {
  if (p.dim() != support.size())
    throw std::invalid_argument("draw_input_sequence: p/support size mismatch");
  return indices_to_values(draw_input_indices(p, horizon, rng), support);
}

std::vector<double> score_factor_from_indices(
    std::span<const std::uint32_t> idx, const ProbabilityVector& p,
    std::size_t horizon) {
  std::vector<double> s(p.dim(), -static_cast<double>(horizon));
  for (std::uint32_t i : idx) {
    if (i >= p.dim())
      throw std::out_of_range("score_factor_from_indices: bad index");
    if (!(p.weights[i] > 0.0))
      throw std::invalid_argument("score_factor: zero weight on a used point");
    s[i] += 1.0 / p.weights[i];
  }
  return s;
}

std::vector<double> score_factor(std::span<const double> x,
                                 const ProbabilityVector& p,
                                 const SupportSet& support,
                                 std::size_t horizon) {
  if (p.dim() != support.size())
    throw std::invalid_argument("score_factor: p/support size mismatch");
  std::vector<std::uint32_t> idx(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    // Exact match: inputs are produced by indexing into the same support.
    const auto it =
        std::find(support.points.begin(), support.points.end(), x[t]);
    if (it == support.points.end())
      throw std::invalid_argument("score_factor: value not on the support");
    idx[t] = static_cast<std::uint32_t>(it - support.points.begin());
  }
  return score_factor_from_indices(idx, p, horizon);
}

double mg1_average_wait(std::span<const double> service,
                        std::span<const double> interarrivals) {
  const std::size_t T = service.size();
  if (T == 0) throw std::invalid_argument("mg1_average_wait: empty service");
  if (interarrivals.size() + 1 != T)
    throw std::invalid_argument(
        "mg1_average_wait: need one interarrival per customer after the first");
  double w = 0.0, total = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    w = std::max(w + service[t] - interarrivals[t], 0.0);
    total += w;
  }
  return total / static_cast<double>(T);
}

double mg1_average_queue_seen(std::span<const double> service,
                              std::span<const double> interarrivals) {
  const std::size_t T = service.size();
  if (T == 0)
    throw std::invalid_argument("mg1_average_queue_seen: empty service");
  if (interarrivals.size() + 1 != T)
    throw std::invalid_argument(
        "mg1_average_queue_seen: need one interarrival per customer after the "
        "first");
  // Arrival and departure epochs from the same Lindley recursion.
  std::vector<double> arrive(T), depart(T);
  double a = 0.0, w = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) {
      a += interarrivals[t - 1];
      w = std::max(depart[t - 1] - a, 0.0);  // wait = prior departure backlog
    }
    arrive[t] = a;
    depart[t] = a + w + service[t];
  }
  double total = 0.0;
  for (std::size_t j = 0; j < T; ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (depart[i] > arrive[j]) total += 1.0;
  return total / static_cast<double>(T);
}

double cdf_indicator(std::span<const double> x, double a) {
  if (x.empty()) throw std::invalid_argument("cdf_indicator: empty input");
  return x[0] <= a ? 1.0 : 0.0;
}

namespace {
// Interarrival times are part of the known system spec: i.i.d. exp(1).
std::vector<double> unit_exp_interarrivals(std::size_t count, Rng& aux) {
  std::vector<double> a(count);
  for (double& v : a) v = aux.exponential(1.0);
  return a;
}
}  // namespace

OutputModel make_output_model(const std::string& name) {
  if (name == "mg1_wait20") {
    return OutputModel{
        name, 20, [](std::span<const double> x, Rng& aux) {
          const auto a = unit_exp_interarrivals(x.size() - 1, aux);
          return mg1_average_wait(x, a);
        }};
  }
  throw std::invalid_argument("unknown output model: " + name);
}

TargetObjective make_target(const std::string& name, double param) {
  if (name == "mg1_queuelen20") {
    return TargetObjective{
        name, 20, [](std::span<const double> x, Rng& aux) {
          const auto a = unit_exp_interarrivals(x.size() - 1, aux);
          return mg1_average_queue_seen(x, a);
        }};
  }
  if (name == "avg_wait20") {
    return TargetObjective{
        name, 20, [](std::span<const double> x, Rng& aux) {
          const auto a = unit_exp_interarrivals(x.size() - 1, aux);
          return mg1_average_wait(x, a);
        }};
  }
  if (name == "cdf_indicator") {
    return TargetObjective{name, 1,
                           [param](std::span<const double> x, Rng&) {
                             return cdf_indicator(x, param);
                           }};
  }
  if (name == "constant") {
    // g == param regardless of input; diagnostics and tests.
    return TargetObjective{name, 1,
                           [param](std::span<const double>, Rng&) {
                             return param;
                           }};
  }
  throw std::invalid_argument("unknown target: " + name);
}

Replication simulate_once(const SimMap& map, std::size_t horizon,
                          const ProbabilityVector& p,
                          const SupportSet& support, RngStream rep) {
  Rng in(rep.sub(kPurposeInputs));
  Replication r;
  r.indices = draw_input_indices(p, horizon, in);
  const auto x = indices_to_values(r.indices, support);
  Rng aux(rep.sub(kPurposeAux));
  r.value = map(x, aux);
  return r;
}

double estimate_expectation(const SimMap& map, std::size_t horizon,
                            const ProbabilityVector& p,
                            const SupportSet& support, std::size_t M,
                            RngStream base, unsigned workers) {
  if (M == 0) throw std::invalid_argument("estimate_expectation: M must be > 0");
  std::vector<double> vals(M);
  parallel_for(M, workers, [&](std::size_t r) {
    vals[r] = simulate_once(map, horizon, p, support, base.sub(r)).value;
  });
  // Sequential reduction keeps the sum independent of the worker count.
  return std::accumulate(vals.begin(), vals.end(), 0.0) /
         static_cast<double>(M);
}

std::vector<double> estimate_indicator_means(const OutputModel& model,
                                             std::span<const double> thresholds,
                                             const ProbabilityVector& p,
                                             const SupportSet& support,
                                             std::size_t M, RngStream base,
                                             unsigned workers) {
  if (M == 0)
    throw std::invalid_argument("estimate_indicator_means: M must be > 0");
  const std::size_t J = thresholds.size();
  // first[r] = smallest j with h <= thresholds[j]; I(h <= y_j) = 1 for j >= it.
  std::vector<std::size_t> first(M);
  parallel_for(M, workers, [&](std::size_t r) {
    const double h =
        simulate_once(model.map, model.horizon, p, support, base.sub(r)).value;
    first[r] = static_cast<std::size_t>(
        std::lower_bound(thresholds.begin(), thresholds.end(), h) -
        thresholds.begin());
  });
  std::vector<double> count(J + 1, 0.0);
  for (std::size_t f : first) count[f] += 1.0;
  std::vector<double> u(J);
  double acc = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    acc += count[j];
    u[j] = acc / static_cast<double>(M);
  }
  return u;
}

ServiceSampler make_truth_sampler(const std::string& name, double param1,
                                  double /*param2*/) {
  if (name == "exponential") {
    if (!(param1 > 0.0))
      throw std::invalid_argument("exponential truth: rate must be > 0");
    const double mean = 1.0 / param1;
    return [mean](Rng& rng) { return rng.exponential(mean); };
  }
  if (name == "beta_mixture") {
    return [](Rng& rng) {
      return rng.uniform01() < 0.5 ? rng.beta(9.0, 3.0) : rng.beta(3.0, 9.0);
    };
  }
  throw std::invalid_argument("unknown truth sampler: " + name);
}

double simulate_truth_value(const SimMap& map, std::size_t horizon,
                            const ServiceSampler& service, RngStream rep) {
  Rng in(rep.sub(kPurposeInputs));
  std::vector<double> x(horizon);
  for (double& v : x) v = service(in);
  Rng aux(rep.sub(kPurposeAux));
  return map(x, aux);
}

McEstimate mc_truth_value(const SimMap& map, std::size_t horizon,
                          const ServiceSampler& service, std::size_t R,
                          RngStream base, unsigned workers) {
  if (R == 0) throw std::invalid_argument("mc_truth_value: R must be > 0");
  std::vector<double> vals(R);
  parallel_for(R, workers, [&](std::size_t r) {
    vals[r] = simulate_truth_value(map, horizon, service, base.sub(r));
  });
  McEstimate est;
  est.replications = R;
  est.mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
             static_cast<double>(R);
  double ss = 0.0;
  for (double v : vals) ss += (v - est.mean) * (v - est.mean);
  est.std_error =
      R > 1 ? std::sqrt(ss / (static_cast<double>(R) * (R - 1.0))) : 0.0;
  return est;
}

}  // namespace simcal
