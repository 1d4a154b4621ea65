#pragma once

#include "zipln/types.hpp"

namespace zipln {

/// PCA of a column-centered matrix via SVD.
struct PcaResult {
  Mat scores;      // n x k
  Mat loadings;    // p x k, orthonormal columns
  Vec explained;   // variance fractions, non-increasing, sum <= 1
  bool truncated;  // k was reduced to the rank of the centered matrix
};

PcaResult pca(const Mat& m, Index k);

}  // namespace zipln
