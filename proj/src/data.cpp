#include "zipln/data.hpp"

#include <cmath>

namespace zipln {

std::string to_string(ZiKind k) {
  switch (k) {
    case ZiKind::none: return "none";
    case ZiKind::nd: return "nd";
    case ZiKind::cd: return "cd";
    case ZiKind::rd: return "rd";
  }
  return "?";
}

ZiKind zi_kind_from_string(const std::string& s) {
  if (s == "none") return ZiKind::none;
  if (s == "nd") return ZiKind::nd;
  if (s == "cd") return ZiKind::cd;
  if (s == "rd") return ZiKind::rd;
  throw validation_error("unknown zero-inflation variant: " + s);
}

void CountDataset::validate(const ZIConfig& config) const {
  const Index nn = n(), pp = p();
  if (nn == 0 || pp == 0) throw validation_error("dataset: empty count matrix");
  if (O.rows() != nn || O.cols() != pp)
    throw validation_error("dataset: offsets O must match Y in shape");
  if (X.rows() != nn || X.cols() == 0)
    throw validation_error("dataset: covariates X must have n rows");
  for (Index i = 0; i < nn; ++i)
    for (Index j = 0; j < pp; ++j) {
      double y = Y(i, j);
      if (!(y >= 0.0) || y != std::floor(y))
        throw validation_error("dataset: counts must be nonnegative integers");
    }
  switch (config.kind) {
    case ZiKind::cd:
      if (X0.size() == 0) throw validation_error("CD variant requires X0");
      if (X0.rows() != nn) throw validation_error("X0 must have n rows");
      break;
    case ZiKind::rd:
      if (X0bar.size() == 0) throw validation_error("RD variant requires X0bar");
      if (X0bar.cols() != pp) throw validation_error("X0bar must have p columns");
      break;
    case ZiKind::nd:
    case ZiKind::none:
      break;
  }
}

namespace {
bool full_column_rank(const Mat& A) {
  return Eigen::ColPivHouseholderQR<Mat>(A).rank() == A.cols();
}
}  // namespace

void CountDataset::check_identifiability(const ZIConfig& config) const {
  if (!full_column_rank(X))
    throw identifiability_error("design matrix X is rank deficient; the model is not identifiable");
  if (config.kind == ZiKind::cd && !full_column_rank(X0))
    throw identifiability_error("design matrix X0 is rank deficient; the model is not identifiable");
  if (config.kind == ZiKind::rd && !full_column_rank(Mat(X0bar.transpose())))
    throw identifiability_error("design matrix X0bar is rank deficient; the model is not identifiable");
}

CountDataset design_only(Mat X, Mat O, Mat X0, Mat X0bar, Index p) {
  CountDataset d;
  d.X = std::move(X);
  d.Y = Mat::Zero(d.X.rows(), p);
  d.O = O.size() > 0 ? std::move(O) : Mat::Zero(d.X.rows(), p);
  d.X0 = std::move(X0);
  d.X0bar = std::move(X0bar);
  return d;
}

}  // namespace zipln
