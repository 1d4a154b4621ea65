#include "zipln/pca.hpp"

namespace zipln {

PcaResult pca(const Mat& m, Index k) {
  if (k < 1 || k > m.cols()) throw validation_error("pca: k must lie in [1, p]");
  Mat centered = m.rowwise() - m.colwise().mean();
  Eigen::BDCSVD<Mat> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double total = sv.array().square().sum();

  Index rank = 0;
  const double tol = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;

  PcaResult out;
  out.truncated = k > rank;
  const Index kk = std::min(k, std::max<Index>(rank, 1));
  out.scores = svd.matrixU().leftCols(kk) * sv.head(kk).asDiagonal();
  out.loadings = svd.matrixV().leftCols(kk);
  out.explained = total > 0.0 ? Vec(sv.head(kk).array().square() / total) : Vec::Zero(kk);
  return out;
}

}  // namespace zipln
