#pragma once

namespace zipln {

/// Principal-branch Lambert W on z >= 0: returns w with w * e^w = z.
/// Halley iteration from log1p(z), residual tolerance 1e-14 * max(1, z),
/// capped at 50 iterations. Negative z is rejected.
double lambert_w(double z);

/// Derivative W'(z) = W / (z (1 + W)) for z > 0; W'(0) = 1.
double lambert_w_derivative(double z, double w);

/// Approximation of phi(mu, sigma2) = E[exp(-X)], X ~ LogNormal(mu, sigma2):
///   exp(-(W(s2 e^mu)^2 + 2 W(s2 e^mu)) / (2 s2)) / sqrt(1 + W(s2 e^mu)).
double phi_tilde(double mu, double sigma2);

struct PhiTildeGrad {
  double value;
  double d_mu;      // d phi_tilde / d mu
  double d_sigma2;  // d phi_tilde / d sigma2
};

/// phi_tilde with its partial derivatives (chain rule through Lambert W).
PhiTildeGrad phi_tilde_grad(double mu, double sigma2);

}  // namespace zipln
