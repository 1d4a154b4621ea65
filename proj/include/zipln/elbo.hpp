#pragma once

#include <string>

#include "zipln/params.hpp"

namespace zipln {

enum class ElboFamily { standard, enhanced };

/// Which ELBO is optimized. `standard` is the fully factorized
/// Gaussian x Bernoulli family; `enhanced` conditions the Gaussian on the
/// Bernoulli indicator. With analytic_p the Bernoulli probabilities are not
/// free parameters: P is pinned to the exact conditional law of W given Y,
/// computed through phi_tilde.
struct ElboVariant {
  ElboFamily family = ElboFamily::standard;
  bool analytic_p = false;
};

std::string to_string(const ElboVariant& v);

/// Gradients of the selected ELBO with respect to every free block.
/// dZi is 1x1 (logit scale) for ND, d0 x p for CD, n x d0 for RD and empty
/// for a plain PLN. dP is empty under analytic_p. dOmega is the symmetric
/// gradient with respect to Omega (including all Sigma-mediated terms);
/// dC is the chain-ruled gradient with respect to the factor C of
/// Omega = (C C^T)^{-1}.
struct ElboGradient {
  Mat dM;
  Mat dS;
  Mat dP;
  Mat dB;
  Mat dZi;
  Mat dOmega;
  Mat dC;
};

/// log(Y!) entrywise via log-gamma; theta-independent, so callers on a hot
/// path compute it once and pass it down.
Mat log_factorial(const Mat& Y);

/// Evaluate the selected ELBO. The masking invariant (P = 0 on positive
/// counts) is a precondition: a violation is a contract error, never -inf.
/// Under analytic_p the P in `psi` is ignored and replaced by psi_analytic.
double elbo(const ElboVariant& variant, const CountDataset& data, const ModelParams& theta,
            const VariationalParams& psi, const Mat* log_fact = nullptr);

/// Analytic gradients of the same objective; validated against central
/// finite differences in the test suite.
ElboGradient elbo_gradient(const ElboVariant& variant, const CountDataset& data,
                           const ModelParams& theta, const VariationalParams& psi,
                           const Mat* log_fact = nullptr);

/// Exact conditional probability that W_ij = 1 given Y_ij under theta:
///   pi / (phi_tilde(o + x^T B_j, Sigma_jj) (1 - pi) + pi) where Y_ij = 0,
/// and exactly 0 where Y_ij > 0.
Mat psi_analytic(const CountDataset& data, const ModelParams& theta);

/// Entropy of the variational distribution, used by the ICL criterion.
/// H1 = 1/2 sum log S^2 + (np/2) log(2 pi e) + H(P);
/// H2 replaces the S term by its Q-weighted version and adds the
/// 1/2 sum P log(Sigma_jj) term of the conditioned family.
double entropy(const ElboVariant& variant, const ModelParams& theta,
               const VariationalParams& psi);

/// Bernoulli entropy H(P) = -sum[P log P + Q log Q] with 0 log 0 = 0.
double bernoulli_entropy(const Mat& P);

}  // namespace zipln
