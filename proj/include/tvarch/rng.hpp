#pragma once

// Counter-based random number generation.
//
// Every draw is a pure function of (seed, stream tag, time index, slot), so
// any path index can be generated independently of the rest of the stream
// and parallel workers never share state. The exact construction, for
// cross-language reproduction:
//
//   mix64(x):  the SplitMix64 finalizer
//              x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
//              x ^= x >> 27; x *= 0x94D049BB133111EB; x ^= x >> 31
//   GOLDEN  =  0x9E3779B97F4A7C15
//   stream_key(seed, tag) = mix64(mix64(seed ^ fnv1a64(tag)) + GOLDEN)
//   index_key(key, t)     = mix64(key + uint64(t) * GOLDEN)   (t two's complement)
//   draw(key, t, slot)    = mix64(index_key(key, t) + (slot + 1) * GOLDEN)
//
// uniform01 maps a 64-bit word to (0, 1) via (w >> 11) * 2^-53 + 2^-54.
// Gaussian variates apply the inverse normal CDF to slot 0; Student-t
// variates consume additional slots for the Marsaglia-Tsang gamma sampler.

#include <cstdint>
#include <string_view>

#include "tvarch/numerics.hpp"

namespace tvarch {

namespace rng_detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001B3ull;
  }
  return h;
}

inline constexpr double to_unit_open(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace rng_detail

inline std::uint64_t stream_key(std::uint64_t seed, std::string_view tag) {
  using namespace rng_detail;
  return mix64(mix64(seed ^ fnv1a64(tag)) + kGolden);
}

// Random access into one named stream: draw(t, slot) is stateless.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::string_view tag)
      : key_(stream_key(seed, tag)) {}

  std::uint64_t bits(long long t, unsigned slot) const {
    using namespace rng_detail;
    const std::uint64_t idx_key =
        mix64(key_ + static_cast<std::uint64_t>(t) * kGolden);
    return mix64(idx_key + (static_cast<std::uint64_t>(slot) + 1) * kGolden);
  }

  double uniform(long long t, unsigned slot) const {
    return rng_detail::to_unit_open(bits(t, slot));
  }

  double gaussian(long long t, unsigned slot = 0) const {
    return normal_quantile(uniform(t, slot));
  }

 private:
  std::uint64_t key_;
};

// Marsaglia-Tsang sampler for Gamma(shape a >= 1, scale 1), driven by the
// per-index slot sequence starting at `slot0`. Each trial consumes two
// slots; acceptance probability exceeds 95%, so the walk terminates fast
// and stays a pure function of (t, slot0).
inline double gamma_variate(const CounterStream& s, long long t, double shape,
                            unsigned slot0 = 1) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  unsigned slot = slot0;
  for (;;) {
    const double x = s.gaussian(t, slot);
    const double u = s.uniform(t, slot + 1);
    slot += 2;
    const double vcube = 1.0 + c * x;
    if (vcube <= 0.0) continue;
    const double v = vcube * vcube * vcube;
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

// Replication seed derivation for Monte Carlo streams. mix64 is a bijection
// and r -> base + (r + 1) * GOLDEN is injective, so derived seeds are
// collision-free across replications for a fixed base.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t replication) {
  using namespace rng_detail;
  return mix64(base + (replication + 1) * kGolden);
}

}  // namespace tvarch
