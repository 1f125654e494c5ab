#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace simcal {

// Counter-based pseudo-random streams. A stream is identified by a (seed,
// stream_id) pair; identical pairs reproduce identical draws bit-exactly,
// independently of any other stream. Substreams are derived by hashing, so
// replications, iterations and purposes can each get disjoint streams without
// coordination.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  // Derived stream keyed by up to three indices (e.g. iteration,
  // replication, purpose).
  [[nodiscard]] RngStream sub(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) const;
};

namespace detail {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

inline RngStream RngStream::sub(std::uint64_t a, std::uint64_t b,
                                std::uint64_t c) const {
  std::uint64_t id = stream_id;
  id = detail::mix64(id ^ (a + detail::kGolden));
  id = detail::mix64(id ^ (b + 2 * detail::kGolden));
  id = detail::mix64(id ^ (c + 3 * detail::kGolden));
  return RngStream{seed, id};
}

// Stateless-keyed generator over an incrementing counter. Output quality is
// that of SplitMix64, which is sufficient for Monte Carlo use here. All
// distribution samplers are implemented from uniform bits directly so that
// draws are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(RngStream s)
      : key_(detail::mix64(s.seed ^ detail::mix64(s.stream_id))) {}

  std::uint64_t next_u64() {
    return detail::mix64(key_ + (++counter_) * detail::kGolden);
  }

  // Uniform in the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential(double mean) { return -mean * std::log(uniform01()); }

  double normal01() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double lognormal(double mu, double sigma) {
    return std::exp(mu + sigma * normal01());
  }

  // Marsaglia-Tsang; shape < 1 handled by the boosting identity.
  double gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform01();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal01();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace simcal
