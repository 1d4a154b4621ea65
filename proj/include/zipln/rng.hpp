#pragma once

#include <cstdint>
#include <random>

namespace zipln {

/// Deterministic random generator with explicitly coded transforms.
///
/// The engine (mt19937_64) is bit-specified by the standard; the usual
/// <random> distributions are not, so normal/Poisson/Bernoulli draws are
/// implemented here to make seeded output reproducible across toolchains.
/// Streams derived with stream(id) depend only on the construction seed,
/// so grid cells stay independent of each other and of draw order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Child generator for an independent stream; derivation ignores any
  /// draws already made from this object.
  Rng stream(std::uint64_t id) const;

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Standard normal (Box-Muller, no cached spare).
  double normal();
  bool bernoulli(double p);
  /// Uniform category in {0, ..., k-1}.
  int categorical(int k);
  /// Poisson draw; inversion below rate 10, PTRS rejection above.
  /// Rates beyond 1e9 are refused (divergence_error) rather than saturated.
  double poisson(double rate);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

/// splitmix64 step, used for seed scrambling / stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace zipln
