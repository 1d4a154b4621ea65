#pragma once

#include <string>
#include <vector>

#include "zipln/optimize.hpp"

namespace zipln {

/// Number of free parameters: K = p(p+1)/2 + p d + c with
/// c = 1 (ND), p d0 (CD), n d0 (RD), 0 (plain PLN).
long param_count(const ZIConfig& config, Index n, Index p, Index d, Index d0);

struct CriteriaRow {
  std::string name;
  std::string variant;  // ELBO family label
  std::string zi;       // zero-inflation variant label
  Index n = 0, p = 0;
  double elbo = 0.0;    // stands in for the log-likelihood
  long K = 0;
  double aic = 0.0;
  double bic = 0.0;
  double icl = 0.0;
  bool converged = false;
  int n_iters = 0;
  // RD grows K with n (a semi-parametric model); criteria are still
  // reported but flagged.
  bool semi_parametric = false;
};

/// AIC = J - K, BIC = J - K/2 log n, ICL = BIC - H(psi); higher is better.
CriteriaRow criteria(const FitResult& fit, const CountDataset& data, const FitConfig& config,
                     const std::string& name);

struct CriteriaReport {
  std::vector<CriteriaRow> rows;
  int best_aic = -1;
  int best_bic = -1;
  int best_icl = -1;

  std::string to_csv() const;
  std::string to_text() const;
};

/// Tabulate rows sharing one dataset; marks the argmax per criterion with
/// ties broken by fewest parameters, then name. Mixed (n, p) is rejected.
CriteriaReport compare_models(const std::vector<CriteriaRow>& rows);

}  // namespace zipln
