#pragma once

#include <cstdint>
#include <string_view>

namespace spectralab {

// SplitMix64 generator with a 64-bit state. Normal variates use the
// Box-Muller transform so sequences are identical across standard libraries.
//
// Independent streams are derived from a seed and a stream name:
//   Rng init = Rng::stream(seed, "init");
// Names are hashed with FNV-1a and mixed into the seed, so two streams with
// the same numeric seed but different names do not overlap in practice.
class Rng {
 public:
  explicit Rng(std::uint64_t state = 0) : state_(state) {}

  static Rng stream(std::uint64_t seed, std::string_view name);

  /// Child stream; does not advance this generator.
  Rng split(std::string_view name) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t state() const noexcept { return state_; }

  bool operator==(const Rng&) const = default;

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t fnv1a(std::string_view text);
std::uint64_t splitmix64_mix(std::uint64_t x);

}  // namespace spectralab
