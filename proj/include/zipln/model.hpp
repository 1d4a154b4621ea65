#pragma once

#include <cstdint>
#include <utility>

#include "zipln/params.hpp"
#include "zipln/rng.hpp"

namespace zipln {

/// Toeplitz covariance Sigma_kj = alpha^|j-k|; unit diagonal, SPD.
Mat toeplitz_cov(Index p, double alpha);

/// Draw (Y, latent truth) from the generative model:
///   Z_i ~ N(x_i^T B, Omega^{-1}), W_ij ~ Bern(pi_ij),
///   T_ij ~ Poisson(exp(o_ij + Z_ij)), Y_ij = (1 - W_ij) T_ij.
/// `design` supplies O, X and the ZI covariates; its Y is ignored.
std::pair<CountDataset, LatentTruth> sample_dataset(const ModelParams& params,
                                                    const CountDataset& design,
                                                    std::uint64_t seed);

/// Closed-form per-entry mean and variance of Y under theta:
///   mean = (1 - pi) A,  A = exp(o + x^T B + sigma_jj / 2)
///   var  = mean + (1 - pi) A^2 (e^{sigma_jj} - (1 - pi)).
std::pair<Mat, Mat> zipln_mean_var(const ModelParams& params, const CountDataset& design);

/// Output of the method-of-moments inversion (no covariates): per-variable
/// mu, diagonal variances, off-diagonal covariances and pi.
struct MomentRecovery {
  Vec mu;
  Vec sigma_diag;
  Mat sigma;
  Vec pi;
};

/// Inverts the first three moments and the covariance of Y back to
/// (mu, Sigma, pi). Denominators m2-m1 and m3-3m2+2m1 must be strictly
/// positive or degenerate_moments_error is thrown.
MomentRecovery moment_recover(const Vec& m1, const Vec& m2, const Vec& m3, const Mat& cov);

/// Forward map for the moment oracle: population (m1, m2, m3, cov) of the
/// no-covariate model with mean vector mu, covariance sigma, inflation pi.
struct PopulationMoments {
  Vec m1, m2, m3;
  Mat cov;
};
PopulationMoments population_moments(const Vec& mu, const Mat& sigma, const Vec& pi);

/// Simulation-scenario draw: Toeplitz Sigma* with alpha ~ U[0.7, 0.9],
/// one-hot X with uniform categories, B* ~ N(gamma, 1) entrywise, ZI
/// coefficients ~ N(logit(rho), 1), zero offsets.
struct Scenario {
  ModelParams params;
  CountDataset design;
  double alpha;
};
Scenario scenario_params(const ZIConfig& config, Index n, Index p, Index d, Index d0,
                         double gamma, double rho, std::uint64_t seed);

}  // namespace zipln
