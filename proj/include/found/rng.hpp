#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace found {

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Every randomized operation in the library takes one of these; nothing reads
/// ambient global randomness. Distinct stream ids give independent sequences
/// from the same seed, so work can be split per element and still reproduce
/// regardless of execution order.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x464f554eu};
    engine_.seed(seq);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0.
  std::uint64_t index(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

  double normal() { return normal_(engine_); }

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  // Symmetric or asymmetric Beta via two Gamma draws.
  double beta(double a, double b) {
    for (;;) {
      double x = gamma(a);
      double y = gamma(b);
      if (x + y > 0.0) return x / (x + y);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RandomStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) { return {seed, stream_id}; }

}  // namespace found
