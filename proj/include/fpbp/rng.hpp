#pragma once

#include <cmath>
#include <cstdint>

namespace fpbp {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so substreams can be opened anywhere in the pipeline without
// sharing mutable state, and replays are reproducible across platforms.
// The mixer is splitmix64 applied to the concatenated key.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

  uint64_t next_u64() { return value_at(counter_++); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Standard normal via Box-Muller (no rejection, so the draw count per
  // sample is fixed and streams stay aligned).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  uint64_t value_at(uint64_t counter) const {
    uint64_t z = seed_;
    z = mix(z + 0x9e3779b97f4a7c15ULL + mix(stream_));
    z = mix(z + mix(counter));
    return z;
  }

 private:
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream ids used across the pipeline; keeping them in one place avoids
// accidental stream collisions between modules sharing a seed.
namespace rng_stream {
constexpr uint64_t kParticlePropagate = 1;
constexpr uint64_t kParticleResample = 2;
constexpr uint64_t kSimRssi = 10;
constexpr uint64_t kSimSteps = 11;
constexpr uint64_t kSimImu = 12;
}  // namespace rng_stream

}  // namespace fpbp
