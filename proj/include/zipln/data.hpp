#pragma once

#include <string>

#include "zipln/types.hpp"

namespace zipln {

/// Zero-inflation parameterization. `none` is a plain PLN fit (no W layer).
enum class ZiKind { none, nd, cd, rd };

std::string to_string(ZiKind k);
ZiKind zi_kind_from_string(const std::string& s);

struct ZIConfig {
  ZiKind kind = ZiKind::nd;
  // Intercept handling when designs are assembled from raw covariate tables
  // (used by the CLI formula builder; the library consumes X / X0 as given).
  bool pln_intercept = true;
  bool zi_intercept = true;
};

/// Observed data: counts Y (n x p), log-scale offsets O (n x p),
/// PLN covariates X (n x d) and, depending on the ZI variant, row-wise
/// ZI covariates X0 (n x d0) or column-wise covariates X0bar (d0 x p).
struct CountDataset {
  Mat Y;
  Mat O;
  Mat X;
  Mat X0;
  Mat X0bar;

  Index n() const { return Y.rows(); }
  Index p() const { return Y.cols(); }
  Index d() const { return X.cols(); }
  Index d0() const {
    if (X0.size() > 0) return X0.cols();
    if (X0bar.size() > 0) return X0bar.rows();
    return 0;
  }

  /// Shape agreement, nonnegative integral counts, variant/covariate match.
  void validate(const ZIConfig& config) const;

  /// Full-rank requirement on X (and X0 for CD): the identifiability
  /// precondition. Throws identifiability_error.
  void check_identifiability(const ZIConfig& config) const;
};

/// Design half of a dataset (no counts yet); Y is sized but ignored.
CountDataset design_only(Mat X, Mat O, Mat X0, Mat X0bar, Index p);

/// Latent draws kept by the sampler: Gaussian field Z, inflation
/// indicators W and the non-inflated counts T (Y = (1-W) .* T).
struct LatentTruth {
  Mat Z;
  Mat W;
  Mat T;
};

}  // namespace zipln
