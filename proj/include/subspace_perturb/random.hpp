#pragma once

#include <cstdint>
#include <random>

namespace subspace_perturb {

/// Deterministic random source. Raw draws come from std::mt19937_64, whose
/// output sequence is fixed by the C++ standard; uniforms take the top 53 bits
/// and normals use the Box-Muller transform, so a seed pins every variate.
///
/// A stream is stateful and must not be shared between concurrent tasks;
/// derive a child per task instead.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  // Number of raw 64-bit draws consumed so far.
  std::uint64_t position() const noexcept { return position_; }

  std::uint64_t next_u64();
  double uniform();      // [0, 1)
  double normal();       // standard normal
  bool bernoulli(double p);

  /// Independent stream for replicate/task `index`. The child seed is an
  /// injective function of `index` for a fixed parent seed and does not depend
  /// on how many draws the parent has consumed.
  SeededStream child(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; a bijection on 64-bit integers.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace subspace_perturb
