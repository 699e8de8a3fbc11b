#pragma once

#include <cstdint>
#include <random>

namespace sslab {

/// Deterministic random stream.  All transforms are implemented here rather
/// than via std::*_distribution so that the draw sequence is identical across
/// standard library implementations.  Every consumer takes an Rng& explicitly;
/// how many draws an operation consumes is part of its contract.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean, double stddev);

  /// Gamma(alpha, 1), Marsaglia-Tsang squeeze method.
  double gamma(double alpha);

  /// Unbiased integer on [0, n).
  std::size_t uniform_index(std::size_t n);

  /// Independent stream derived from this one (consumes one draw).
  Rng split();

private:
  std::mt19937_64 engine_;
};

}  // namespace sslab
