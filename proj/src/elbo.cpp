#include "zipln/elbo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "zipln/special.hpp"

namespace zipln {

namespace {

// Boundary clamp for logs of P and 1-P; the hard zero mask stays exact.
constexpr double kPClamp = 1e-7;

double clamp_unit(double x) { return std::clamp(x, kPClamp, 1.0 - kPClamp); }

double logit_clamped(double x) {
  const double c = clamp_unit(x);
  return std::log(c) - std::log1p(-c);
}

// A with columns scaled by v: out(i,j) = A(i,j) * v(j)
Mat col_scale(const Mat& A, const Vec& v) {
  return A * v.asDiagonal();
}

double log_det_omega(const ModelParams& theta) {
  const Index p = theta.Omega.rows();
  if (theta.C.rows() == p && theta.C.cols() == p) {
    Eigen::PartialPivLU<Mat> lu(theta.C);
    return -2.0 * lu.matrixLU().diagonal().array().abs().log().sum();
  }
  Eigen::LLT<Mat> llt(theta.Omega);
  if (llt.info() != Eigen::Success)
    throw validation_error("elbo: Omega is not positive definite");
  return 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
}

struct Work {
  Index n, p;
  Mat A;     // exp(O + M + S^2/2)
  Mat h;     // M - X B
  Mat Q;     // 1 - P
  Mat P;     // effective P (analytic variants overwrite)
  Mat mu0;   // empty for plain PLN
  Mat lf;
  bool has_zi;
};

Work assemble(const ElboVariant& variant, const CountDataset& data, const ModelParams& theta,
              const VariationalParams& psi, const Mat& log_fact, Mat& s2_storage) {
  Work w;
  w.n = data.n();
  w.p = data.p();
  w.has_zi = theta.zi_kind != ZiKind::none;
  if (psi.M.rows() != w.n || psi.M.cols() != w.p || psi.S.rows() != w.n ||
      psi.S.cols() != w.p)
    throw validation_error("elbo: psi shapes do not match data");
  if ((psi.S.array() <= 0.0).any()) throw validation_error("elbo: S must be positive");

  if (variant.analytic_p) {
    w.P = psi_analytic(data, theta);
  } else {
    if (psi.P.rows() != w.n || psi.P.cols() != w.p)
      throw validation_error("elbo: psi.P shape mismatch");
    if (!psi.mask_holds(data.Y))
      throw validation_error(
          "elbo: P must be exactly 0 on positive counts (delta_{0,inf} mask)");
    w.P = psi.P;
  }
  if (!w.has_zi && (w.P.array() != 0.0).any())
    throw validation_error("elbo: plain PLN requires P == 0");

  s2_storage = psi.S.array().square().matrix();
  w.A = (data.O.array() + psi.M.array() + 0.5 * s2_storage.array()).exp().matrix();
  w.h = psi.M - data.X * theta.B;
  w.Q = Mat::Ones(w.n, w.p) - w.P;
  if (w.has_zi) w.mu0 = theta.mu0(data);
  w.lf = log_fact;
  return w;
}

double shared_terms(const Work& w, const CountDataset& data, const VariationalParams& psi) {
  // E[log p(Y|Z,W)]; the masked delta term is identically zero
  double t = (w.Q.array() *
              (data.Y.array() * (data.O.array() + psi.M.array()) - w.A.array() - w.lf.array()))
                 .sum();
  if (w.has_zi) {
    t += (w.P.array() * w.mu0.array()).sum() -
         w.mu0.unaryExpr([](double x) { return softplus(x); }).sum();
  }
  return t + bernoulli_entropy(w.P);
}

}  // namespace

std::string to_string(const ElboVariant& v) {
  std::string s = v.family == ElboFamily::standard ? "Standard" : "Enhanced";
  if (v.analytic_p) s += "Analytic";
  return s;
}

Mat log_factorial(const Mat& Y) {
  return Y.unaryExpr([](double y) { return std::lgamma(y + 1.0); });
}

double bernoulli_entropy(const Mat& P) {
  double h = 0.0;
  for (Index j = 0; j < P.cols(); ++j)
    for (Index i = 0; i < P.rows(); ++i) {
      const double p = P(i, j);
      if (p > 0.0 && p < 1.0)
        h -= p * std::log(std::max(p, kPClamp)) +
             (1.0 - p) * std::log(std::max(1.0 - p, kPClamp));
    }
  return h;
}

Mat psi_analytic(const CountDataset& data, const ModelParams& theta) {
  const Index n = data.n(), p = data.p();
  Mat P = Mat::Zero(n, p);
  if (theta.zi_kind == ZiKind::none) return P;
  Mat pi = theta.pi_matrix(data);
  Mat mu_y = data.O + data.X * theta.B;
  for (Index j = 0; j < p; ++j) {
    const double sjj = theta.Sigma(j, j);
    for (Index i = 0; i < n; ++i) {
      if (data.Y(i, j) != 0.0) continue;
      const double f = phi_tilde(mu_y(i, j), sjj);
      P(i, j) = pi(i, j) / (f * (1.0 - pi(i, j)) + pi(i, j));
    }
  }
  return P;
}

double elbo(const ElboVariant& variant, const CountDataset& data, const ModelParams& theta,
            const VariationalParams& psi, const Mat* log_fact) {
  Mat lf_local;
  if (!log_fact) {
    lf_local = log_factorial(data.Y);
    log_fact = &lf_local;
  }
  Mat s2;
  Work w = assemble(variant, data, theta, psi, *log_fact, s2);
  const double n = double(w.n), np = double(w.n) * double(w.p);
  const Vec omega_diag = theta.Omega.diagonal();
  double J = shared_terms(w, data, psi) + 0.5 * n * log_det_omega(theta) + 0.5 * np;

  if (variant.family == ElboFamily::standard) {
    J += 0.5 * s2.array().log().sum();
    J -= 0.5 * ((w.h * theta.Omega).cwiseProduct(w.h)).sum();
    J -= 0.5 * (s2.colwise().sum() * omega_diag).value();
  } else {
    const Vec sigma_diag = theta.Sigma.diagonal();
    const Vec sP = w.P.colwise().sum().transpose();
    J += 0.5 * (w.Q.array() * s2.array().log()).sum();
    J += 0.5 * sP.dot(sigma_diag.array().log().matrix());
    Mat R = w.Q.cwiseProduct(w.h);
    J -= 0.5 * ((R * theta.Omega).cwiseProduct(R)).sum();
    Vec c = (w.P.array() * w.Q.array() * w.h.array().square() + w.Q.array() * s2.array())
                .matrix()
                .colwise()
                .sum()
                .transpose();
    J -= 0.5 * c.dot(omega_diag);
    J -= 0.5 * sP.dot(omega_diag.cwiseProduct(sigma_diag));
  }
  return J;
}

double entropy(const ElboVariant& variant, const ModelParams& theta,
               const VariationalParams& psi) {
  const double np = double(psi.M.rows()) * double(psi.M.cols());
  const double c = 0.5 * np * std::log(2.0 * std::numbers::pi * std::numbers::e);
  if (variant.family == ElboFamily::standard) {
    return 0.5 * psi.S.array().square().log().sum() + c + bernoulli_entropy(psi.P);
  }
  Mat Q = psi.Q();
  double h = 0.5 * (Q.array() * psi.S.array().square().log()).sum() + c +
             bernoulli_entropy(psi.P);
  Vec sP = psi.P.colwise().sum().transpose();
  h += 0.5 * sP.dot(theta.Sigma.diagonal().array().log().matrix());
  return h;
}

ElboGradient elbo_gradient(const ElboVariant& variant, const CountDataset& data,
                           const ModelParams& theta, const VariationalParams& psi,
                           const Mat* log_fact) {
  Mat lf_local;
  if (!log_fact) {
    lf_local = log_factorial(data.Y);
    log_fact = &lf_local;
  }
  Mat s2;
  Work w = assemble(variant, data, theta, psi, *log_fact, s2);
  const Index n = w.n, p = w.p;
  const Vec omega_diag = theta.Omega.diagonal();
  const Vec sigma_diag = theta.Sigma.diagonal();

  ElboGradient g;
  const bool free_p = w.has_zi && !variant.analytic_p;

  // derivative with respect to the effective P on zero entries; for analytic
  // variants this becomes the outer factor of the Psi chain rule
  Mat dP = Mat::Zero(n, p);

  if (variant.family == ElboFamily::standard) {
    g.dM = w.Q.cwiseProduct(data.Y - w.A) - w.h * theta.Omega;
    g.dS = psi.S.cwiseInverse() - w.Q.cwiseProduct(w.A).cwiseProduct(psi.S) -
           col_scale(psi.S, omega_diag);
    g.dB = data.X.transpose() * (w.h * theta.Omega);
    Mat diag_s2 = Mat::Zero(p, p);
    diag_s2.diagonal() = s2.colwise().sum().transpose();
    g.dOmega = 0.5 * double(n) * theta.Sigma - 0.5 * (w.h.transpose() * w.h + diag_s2);
    if (w.has_zi) {
      for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i)
          if (data.Y(i, j) == 0.0)
            dP(i, j) = w.A(i, j) + w.mu0(i, j) - logit_clamped(w.P(i, j));
    }
  } else {
    Mat R = w.Q.cwiseProduct(w.h);
    Mat ROmega = R * theta.Omega;
    Mat pqh = w.P.cwiseProduct(w.Q).cwiseProduct(w.h);
    g.dM = w.Q.cwiseProduct(data.Y - w.A) - w.Q.cwiseProduct(ROmega) -
           col_scale(pqh, omega_diag);
    g.dS = w.Q.cwiseProduct(psi.S.cwiseInverse() - w.A.cwiseProduct(psi.S)) -
           col_scale(w.Q.cwiseProduct(psi.S), omega_diag);
    g.dB = data.X.transpose() * (w.Q.cwiseProduct(ROmega) + col_scale(pqh, omega_diag));
    Vec c = (w.P.array() * w.Q.array() * w.h.array().square() + w.Q.array() * s2.array())
                .matrix()
                .colwise()
                .sum()
                .transpose();
    Vec sP = w.P.colwise().sum().transpose();
    Mat dOm = 0.5 * double(n) * theta.Sigma - 0.5 * R.transpose() * R;
    dOm.diagonal() -= 0.5 * (c + sP.cwiseProduct(sigma_diag));
    for (Index j = 0; j < p; ++j) {
      const double coef = 0.5 * sP(j) * (omega_diag(j) - 1.0 / sigma_diag(j));
      if (coef != 0.0) dOm += coef * theta.Sigma.col(j) * theta.Sigma.col(j).transpose();
    }
    g.dOmega = dOm;
    if (w.has_zi) {
      for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i)
          if (data.Y(i, j) == 0.0) {
            const double hij = w.h(i, j);
            dP(i, j) = w.A(i, j) + w.mu0(i, j) - logit_clamped(w.P(i, j)) -
                       0.5 * std::log(s2(i, j)) + 0.5 * std::log(sigma_diag(j)) +
                       hij * ROmega(i, j) -
                       0.5 * omega_diag(j) *
                           ((1.0 - 2.0 * w.P(i, j)) * hij * hij - s2(i, j)) -
                       0.5 * omega_diag(j) * sigma_diag(j);
          }
    }
  }

  // ZI-parameter block (direct part; both families share E[log p(W)])
  if (w.has_zi) {
    Mat resid = w.P - w.mu0.unaryExpr([](double x) { return sigmoid(x); });
    switch (theta.zi_kind) {
      case ZiKind::nd:
        g.dZi = Mat::Constant(1, 1, resid.sum());
        break;
      case ZiKind::cd:
        g.dZi = data.X0.transpose() * resid;
        break;
      case ZiKind::rd:
        g.dZi = resid * data.X0bar.transpose();
        break;
      case ZiKind::none:
        break;
    }
  }

  if (variant.analytic_p && w.has_zi) {
    // P = Psi(theta): push dP through phi_tilde and the ZI field
    Mat pi = theta.pi_matrix(data);
    Mat mu_y = data.O + data.X * theta.B;
    Mat u = Mat::Zero(n, p);  // dJ/dP * dPsi/dphi * dphi/dmu
    Mat v = Mat::Zero(n, p);  // dJ/dP * dPsi/dpi * dpi/dmu0
    Vec t = Vec::Zero(p);     // column sums of dJ/dP * dPsi/dphi * dphi/dsigma_jj
    for (Index j = 0; j < p; ++j) {
      const double sjj = sigma_diag(j);
      for (Index i = 0; i < n; ++i) {
        if (data.Y(i, j) != 0.0 || dP(i, j) == 0.0) continue;
        PhiTildeGrad f = phi_tilde_grad(mu_y(i, j), sjj);
        const double pij = pi(i, j);
        const double denom = f.value * (1.0 - pij) + pij;
        const double dpsi_df = -pij * (1.0 - pij) / (denom * denom);
        const double dpsi_dpi = f.value / (denom * denom);
        u(i, j) = dP(i, j) * dpsi_df * f.d_mu;
        t(j) += dP(i, j) * dpsi_df * f.d_sigma2;
        v(i, j) = dP(i, j) * dpsi_dpi * pij * (1.0 - pij);
      }
    }
    g.dB += data.X.transpose() * u;
    for (Index j = 0; j < p; ++j)
      if (t(j) != 0.0)
        g.dOmega -= t(j) * theta.Sigma.col(j) * theta.Sigma.col(j).transpose();
    switch (theta.zi_kind) {
      case ZiKind::nd:
        g.dZi(0, 0) += v.sum();
        break;
      case ZiKind::cd:
        g.dZi += data.X0.transpose() * v;
        break;
      case ZiKind::rd:
        g.dZi += v * data.X0bar.transpose();
        break;
      case ZiKind::none:
        break;
    }
  } else if (free_p) {
    g.dP = dP;
  }

  // chain to the unconstrained factor: Omega = (C C^T)^{-1}
  if (theta.C.rows() == p && theta.C.cols() == p) {
    g.dC = -2.0 * theta.Omega * g.dOmega * theta.Omega * theta.C;
  }
  return g;
}

}  // namespace zipln
