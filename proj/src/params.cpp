#include "zipln/params.hpp"

#include <cmath>

namespace zipln {

void ModelParams::set_omega(const Mat& omega) {
  if (omega.rows() != omega.cols()) throw validation_error("Omega must be square");
  if (!omega.isApprox(omega.transpose(), 1e-10))
    throw validation_error("Omega must be symmetric");
  Eigen::LLT<Mat> llt(omega);
  if (llt.info() != Eigen::Success)
    throw validation_error("Omega must be positive definite");
  Omega = omega;
  Sigma = llt.solve(Mat::Identity(omega.rows(), omega.cols()));
  // Sigma = C C^T with C its lower Cholesky factor
  Eigen::LLT<Mat> llt_sigma(Sigma);
  if (llt_sigma.info() != Eigen::Success)
    throw validation_error("Omega inverse is not positive definite");
  C = llt_sigma.matrixL();
}

void ModelParams::set_omega_factor(const Mat& c) {
  if (c.rows() != c.cols()) throw validation_error("C must be square");
  Eigen::PartialPivLU<Mat> lu(c);
  double abs_det = std::abs(lu.determinant());
  if (!(abs_det > 0.0) || !std::isfinite(abs_det))
    throw validation_error("C must be invertible");
  C = c;
  Sigma = c * c.transpose();
  Eigen::LLT<Mat> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw validation_error("C C^T is numerically singular");
  Omega = llt.solve(Mat::Identity(c.rows(), c.cols()));
  // symmetrize against accumulation error
  Omega = 0.5 * (Omega + Omega.transpose()).eval();
}

Mat ModelParams::mu0(const CountDataset& data) const {
  switch (zi_kind) {
    case ZiKind::nd:
      return Mat::Constant(data.n(), data.p(), logit(pi));
    case ZiKind::cd:
      return data.X0 * B0;
    case ZiKind::rd:
      return B0bar * data.X0bar;
    case ZiKind::none:
      return Mat::Zero(data.n(), data.p());
  }
  return {};
}

Mat ModelParams::pi_matrix(const CountDataset& data) const {
  if (zi_kind == ZiKind::none) return Mat::Zero(data.n(), data.p());
  return mu0(data).unaryExpr([](double x) { return sigmoid(x); });
}

void ModelParams::validate(const CountDataset& data) const {
  const Index pp = data.p();
  if (Omega.rows() != pp || Omega.cols() != pp)
    throw validation_error("Omega must be p x p");
  if (!Omega.isApprox(Omega.transpose(), 1e-8))
    throw validation_error("Omega must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(Omega, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw validation_error("Omega must have positive eigenvalues");
  if (Sigma.rows() != pp || !(Sigma * Omega).isIdentity(1e-8))
    throw validation_error("Sigma cache is stale: Sigma * Omega != I");
  if (B.rows() != data.d() || B.cols() != pp)
    throw validation_error("B must be d x p");
  switch (zi_kind) {
    case ZiKind::nd:
      if (!(pi >= 0.0 && pi <= 1.0)) throw validation_error("pi must lie in [0,1]");
      break;
    case ZiKind::cd:
      if (B0.rows() != data.d0() || B0.cols() != pp)
        throw validation_error("B0 must be d0 x p");
      break;
    case ZiKind::rd:
      if (B0bar.rows() != data.n() || B0bar.cols() != data.d0())
        throw validation_error("B0bar must be n x d0");
      break;
    case ZiKind::none:
      break;
  }
}

void VariationalParams::validate(const Mat& Y) const {
  if (M.rows() != Y.rows() || M.cols() != Y.cols())
    throw validation_error("M must be n x p");
  if (S.rows() != Y.rows() || S.cols() != Y.cols() || (S.array() <= 0.0).any())
    throw validation_error("S must be n x p with strictly positive entries");
  if (P.rows() != Y.rows() || P.cols() != Y.cols())
    throw validation_error("P must be n x p");
  if ((P.array() < 0.0).any() || (P.array() > 1.0).any())
    throw validation_error("P must lie in [0,1]");
  if (!mask_holds(Y))
    throw validation_error("P must be exactly 0 wherever Y > 0");
}

bool VariationalParams::mask_holds(const Mat& Y) const {
  return ((Y.array() > 0.0) && (P.array() != 0.0)).count() == 0;
}

}  // namespace zipln
