#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zipln/elbo.hpp"

namespace zipln {

enum class FitMethod { vem, gradient };

struct FitConfig {
  FitMethod method = FitMethod::vem;
  ElboVariant variant{};
  ZIConfig zi{};
  int max_iters = 1000;
  double rel_tol = 1e-6;       // relative ELBO change over the window
  int tol_window = 10;
  double learning_rate = 0.01; // base rate of the adaptive schedule
  double rms_decay = 0.9;      // moving average factor for squared gradients
  double lr_decay = 0.02;      // per-epoch 1/(1+decay*epoch) damping (stochastic runs)
  int minibatch_size = 0;      // 0 = full batch
  int inner_newton_steps = 5;  // VE-step inner solves for M and S
  std::uint64_t seed = 0;

  void validate(Index n) const;
};

struct FitResult {
  ModelParams theta;
  VariationalParams psi;
  std::vector<double> elbo_trace;
  int n_iters = 0;
  bool converged = false;
  double wall_time = 0.0;
  std::vector<std::string> warnings;
};

/// Initialization: M = log(Y+1) - O, S = 1, P = 0.5 on zeros (ZI fits),
/// B from least squares of M on X, Omega = I, ZI coefficients at zero
/// (pi = 0.5 for ND). Rank-deficient designs are rejected.
std::pair<ModelParams, VariationalParams> init_params(const CountDataset& data,
                                                      const FitConfig& config);

/// Closed-form coordinate updates (standard ELBO), each the exact argmax of
/// its block with the others held fixed.
Mat update_b(const CountDataset& data, const VariationalParams& psi);
Mat update_omega(const CountDataset& data, const ModelParams& theta,
                 const VariationalParams& psi, std::vector<std::string>* warnings = nullptr);
void update_b0(const CountDataset& data, const VariationalParams& psi, ModelParams& theta);
Mat update_p(const CountDataset& data, const ModelParams& theta, const VariationalParams& psi);

/// Alternating VEM on the standard ELBO with free P. The trace is
/// non-decreasing; a decrease beyond 1e-8 |ELBO| raises internal_error.
FitResult vem_fit(const CountDataset& data, const FitConfig& config);

/// Joint adaptive gradient ascent on (psi, theta), any variant; Omega is
/// optimized through its unconstrained factor C. A step that lowers the
/// ELBO by more than 1e-6 |ELBO| is halved and retried (up to 20 times).
FitResult gradient_fit(const CountDataset& data, const FitConfig& config);

/// Dispatch on config.method.
FitResult fit(const CountDataset& data, const FitConfig& config);

/// State threaded through stochastic steps: parameters plus the adaptive
/// step-size accumulators.
struct SgdState {
  ElboVariant variant;
  ModelParams theta;
  VariationalParams psi;
  Mat vM, vS, vP, vB, vZi, vC;  // squared-gradient moving averages
  double learning_rate = 0.01;
  double rms_decay = 0.9;
  long step_count = 0;
};

SgdState make_sgd_state(const CountDataset& data, const FitConfig& config);

/// One stochastic ascent step on the rows in `batch`; sample-sum terms are
/// scaled by n/|batch| so the expected stochastic gradient over a uniform
/// batch equals the full gradient. Empty batches are rejected.
void minibatch_step(const CountDataset& data, SgdState& state,
                    const std::vector<Index>& batch);

}  // namespace zipln
