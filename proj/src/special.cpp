#include "zipln/special.hpp"

#include <cmath>
#include <limits>

#include "zipln/types.hpp"

namespace zipln {

double lambert_w(double z) {
  if (!(z >= 0.0)) throw validation_error("lambert_w: requires z >= 0");
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return std::numeric_limits<double>::infinity();
  const double tol = 1e-14 * std::max(1.0, z);
  double w = z > 3.0 ? std::log(z) - std::log(std::log(z)) : std::log1p(z);
  for (int it = 0; it < 50; ++it) {
    double ew = std::exp(w);
    double f = w * ew - z;
    if (std::abs(f) <= tol) break;
    // Halley step
    double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    w -= f / denom;
  }
  return w;
}

double lambert_w_derivative(double z, double w) {
  if (z == 0.0) return 1.0;
  return w / (z * (1.0 + w));
}

namespace {

// Solves w + log(w) = L, the log-form of w e^w = z for z too large to
// represent (L = log z). Newton on g(w) = w + log w - L.
double lambert_w_from_log(double L) {
  double w = L - std::log(L);
  for (int it = 0; it < 50; ++it) {
    double g = w + std::log(w) - L;
    if (std::abs(g) <= 1e-14 * std::max(1.0, L)) break;
    w -= g / (1.0 + 1.0 / w);
  }
  return w;
}

}  // namespace

PhiTildeGrad phi_tilde_grad(double mu, double sigma2) {
  if (!(sigma2 > 0.0)) throw validation_error("phi_tilde: requires sigma2 > 0");
  const double log_z = mu + std::log(sigma2);
  double w;
  if (log_z > 700.0) {
    w = lambert_w_from_log(log_z);
  } else {
    w = lambert_w(sigma2 * std::exp(mu));
  }
  const double log_val = -(w * w + 2.0 * w) / (2.0 * sigma2) - 0.5 * std::log1p(w);
  const double value = std::exp(log_val);
  const double wp1 = 1.0 + w;
  const double dlog_dmu = -w / sigma2 - w / (2.0 * wp1 * wp1);
  const double dlog_ds2 =
      w * w / (2.0 * sigma2 * sigma2) - w / (2.0 * sigma2 * wp1 * wp1);
  return {value, value * dlog_dmu, value * dlog_ds2};
}

double phi_tilde(double mu, double sigma2) { return phi_tilde_grad(mu, sigma2).value; }

}  // namespace zipln
