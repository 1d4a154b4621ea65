#pragma once

#include "zipln/data.hpp"
#include "zipln/types.hpp"

namespace zipln {

/// Model parameters theta = (Omega, B, zero-inflation block).
///
/// Omega is the p x p precision; Sigma is its cached inverse and C a factor
/// with Omega = (C C^T)^{-1}, kept in sync through set_omega /
/// set_omega_factor. The active ZI block depends on zi_kind: a global
/// probability `pi` (ND), coefficients B0 (d0 x p, CD) or B0bar (n x d0, RD).
struct ModelParams {
  ZiKind zi_kind = ZiKind::nd;
  Mat Omega;
  Mat Sigma;
  Mat C;
  Mat B;
  double pi = 0.5;
  Mat B0;
  Mat B0bar;

  /// Set the precision; recomputes Sigma and a Cholesky factor C of Sigma.
  /// Rejects non-SPD input.
  void set_omega(const Mat& omega);

  /// Set the unconstrained factor; Omega = (C C^T)^{-1}, Sigma = C C^T.
  /// Rejects singular C.
  void set_omega_factor(const Mat& c);

  /// Logit-scale ZI field, n x p: 1 * logit(pi) (ND), X0 B0 (CD),
  /// B0bar X0bar (RD). Zero matrix for a plain PLN (kind none).
  Mat mu0(const CountDataset& data) const;

  /// Elementwise inflation probabilities sigmoid(mu0).
  Mat pi_matrix(const CountDataset& data) const;

  /// Invariants: SPD Omega, Sigma * Omega = I to 1e-8, shape agreement,
  /// pi inside [0,1].
  void validate(const CountDataset& data) const;

  Index p() const { return Omega.rows(); }
};

/// Variational parameters psi = (M, S, P), all n x p. S is strictly
/// positive; P lives in [0,1] and is pinned to exactly 0 wherever the
/// corresponding count is positive (the delta_{0,inf} masking rule).
struct VariationalParams {
  Mat M;
  Mat S;
  Mat P;

  Mat Q() const { return Mat::Ones(P.rows(), P.cols()) - P; }

  /// A = exp(O + M + S^2/2), recomputed on demand.
  Mat poisson_mean(const Mat& O) const {
    return (O.array() + M.array() + 0.5 * S.array().square()).exp().matrix();
  }

  void validate(const Mat& Y) const;

  /// True when P is exactly 0 on every positive count.
  bool mask_holds(const Mat& Y) const;
};

}  // namespace zipln
