#include "zipln/rng.hpp"

#include <cmath>
#include <numbers>

#include "zipln/types.hpp"

namespace zipln {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  // scramble so that small consecutive seeds give unrelated engine states
  eng_.seed(splitmix64(s));
}

Rng Rng::stream(std::uint64_t id) const {
  std::uint64_t s = seed_ ^ (0xD1B54A32D192ED03ULL * (id + 1));
  return Rng(splitmix64(s));
}

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() {
  return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform_pos();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

int Rng::categorical(int k) {
  int c = static_cast<int>(uniform() * k);
  return c >= k ? k - 1 : c;
}

double Rng::poisson(double rate) {
  if (!(rate >= 0.0)) throw validation_error("poisson: rate must be >= 0");
  if (rate > 1e9) throw divergence_error("poisson: rate exceeds 1e9 generator range");
  if (rate == 0.0) return 0.0;
  if (rate < 10.0) {
    // inversion by sequential search on the cumulative product
    const double l = std::exp(-rate);
    double prod = uniform_pos();
    double k = 0.0;
    while (prod > l) {
      prod *= uniform_pos();
      k += 1.0;
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993), exact for mu >= 10
  const double mu = rate;
  const double log_mu = std::log(mu);
  const double b = 0.931 + 2.53 * std::sqrt(mu);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = uniform() - 0.5;
    double v = uniform_pos();
    double us = 0.5 - std::abs(u);
    double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
    if (us >= 0.07 && v <= v_r) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_mu - mu - std::lgamma(k + 1.0)) {
      return k;
    }
  }
}

}  // namespace zipln
