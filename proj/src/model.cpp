#include "zipln/model.hpp"

#include <cmath>

namespace zipln {

Mat toeplitz_cov(Index p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw validation_error("toeplitz_cov: alpha must lie in (0,1)");
  if (p <= 0) throw validation_error("toeplitz_cov: p must be positive");
  Mat sigma(p, p);
  for (Index k = 0; k < p; ++k)
    for (Index j = 0; j < p; ++j) sigma(k, j) = std::pow(alpha, std::abs(double(j - k)));
  return sigma;
}

std::pair<CountDataset, LatentTruth> sample_dataset(const ModelParams& params,
                                                    const CountDataset& design,
                                                    std::uint64_t seed) {
  ZIConfig config{params.zi_kind};
  design.validate(config);
  params.validate(design);

  const Index n = design.n(), p = design.p();
  Eigen::LLT<Mat> llt(params.Sigma);
  if (llt.info() != Eigen::Success)
    throw validation_error("sample_dataset: Omega is not positive definite");
  Mat L = llt.matrixL();

  Rng rng(seed);
  Mat pi = params.pi_matrix(design);
  Mat mean = design.X * params.B;

  LatentTruth truth;
  truth.Z.resize(n, p);
  truth.W.resize(n, p);
  truth.T.resize(n, p);
  Vec eps(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) eps(j) = rng.normal();
    truth.Z.row(i) = mean.row(i) + (L * eps).transpose();
    for (Index j = 0; j < p; ++j) {
      truth.W(i, j) = rng.bernoulli(pi(i, j)) ? 1.0 : 0.0;
      truth.T(i, j) = rng.poisson(std::exp(design.O(i, j) + truth.Z(i, j)));
    }
  }

  CountDataset data = design;
  data.Y = (Mat::Ones(n, p) - truth.W).cwiseProduct(truth.T);
  return {std::move(data), std::move(truth)};
}

std::pair<Mat, Mat> zipln_mean_var(const ModelParams& params, const CountDataset& design) {
  params.validate(design);
  const Index n = design.n(), p = design.p();
  Mat pi = params.pi_matrix(design);
  Mat mu = design.X * params.B;
  Mat mean(n, p), var(n, p);
  for (Index j = 0; j < p; ++j) {
    const double sjj = params.Sigma(j, j);
    for (Index i = 0; i < n; ++i) {
      const double a = std::exp(design.O(i, j) + mu(i, j) + 0.5 * sjj);
      const double q = 1.0 - pi(i, j);
      mean(i, j) = q * a;
      var(i, j) = mean(i, j) + q * a * a * (std::exp(sjj) - q);
    }
  }
  return {std::move(mean), std::move(var)};
}

MomentRecovery moment_recover(const Vec& m1, const Vec& m2, const Vec& m3, const Mat& cov) {
  const Index p = m1.size();
  if (m2.size() != p || m3.size() != p || cov.rows() != p || cov.cols() != p)
    throw validation_error("moment_recover: inconsistent input sizes");
  MomentRecovery out;
  out.mu.resize(p);
  out.sigma_diag.resize(p);
  out.pi.resize(p);
  Vec a_j(p);
  for (Index j = 0; j < p; ++j) {
    const double e = m2(j) - m1(j);
    const double d = m3(j) - 3.0 * m2(j) + 2.0 * m1(j);
    if (!(e > 0.0) || !(d > 0.0) || !(m1(j) > 0.0))
      throw degenerate_moments_error(
          "moment_recover: non-positive moment denominator (pi near 1 or no dispersion)");
    // e^{sigma_jj} = d * m1 / e^2, clipped just above 1 so noisy empirical
    // third moments cannot produce a negative variance
    const double exp_sjj = std::max(d * m1(j) / (e * e), 1.0 + 1e-12);
    out.sigma_diag(j) = std::log(exp_sjj);
    // A_j = e^3 / (d m1^2);  e^{mu} = A e^{-sigma/2}
    a_j(j) = e * e * e / (d * m1(j) * m1(j));
    out.mu(j) = std::log(a_j(j)) - 0.5 * out.sigma_diag(j);
    out.pi(j) = 1.0 - m1(j) / a_j(j);
  }
  out.sigma = Mat::Zero(p, p);
  out.sigma.diagonal() = out.sigma_diag;
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k) {
      if (j == k) continue;
      out.sigma(j, k) = std::log1p(cov(j, k) / (m1(j) * m1(k)));
    }
  return out;
}

PopulationMoments population_moments(const Vec& mu, const Mat& sigma, const Vec& pi) {
  const Index p = mu.size();
  PopulationMoments pm;
  pm.m1.resize(p);
  pm.m2.resize(p);
  pm.m3.resize(p);
  pm.cov.resize(p, p);
  Vec a(p);
  for (Index j = 0; j < p; ++j) {
    const double sjj = sigma(j, j);
    a(j) = std::exp(mu(j) + 0.5 * sjj);
    const double q = 1.0 - pi(j);
    const double es = std::exp(sjj);
    pm.m1(j) = q * a(j);
    pm.m2(j) = q * a(j) * (1.0 + a(j) * es);
    pm.m3(j) = q * a(j) * (1.0 + 3.0 * a(j) * es + a(j) * a(j) * es * es * es);
  }
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k) {
      if (j == k) continue;
      pm.cov(j, k) = (1.0 - pi(j)) * (1.0 - pi(k)) * a(j) * a(k) *
                     (std::exp(sigma(j, k)) - 1.0);
    }
  for (Index j = 0; j < p; ++j) pm.cov(j, j) = pm.m2(j) - pm.m1(j) * pm.m1(j);
  return pm;
}

Scenario scenario_params(const ZIConfig& config, Index n, Index p, Index d, Index d0,
                         double gamma, double rho, std::uint64_t seed) {
  if (n <= 0 || p <= 0 || d <= 0) throw validation_error("scenario_params: sizes must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw validation_error("scenario_params: rho must lie in (0,1)");
  if ((config.kind == ZiKind::cd || config.kind == ZiKind::rd) && d0 <= 0)
    throw validation_error("scenario_params: d0 must be positive for CD/RD");

  Rng rng(seed);
  Scenario sc;
  sc.alpha = 0.7 + 0.2 * rng.uniform();
  ModelParams& th = sc.params;
  th.zi_kind = config.kind;
  th.set_omega(toeplitz_cov(p, sc.alpha).inverse());

  // one-hot rows, category probability 1/d
  Mat X = Mat::Zero(n, d);
  for (Index i = 0; i < n; ++i) X(i, rng.categorical(int(d))) = 1.0;

  th.B.resize(d, p);
  for (Index r = 0; r < d; ++r)
    for (Index j = 0; j < p; ++j) th.B(r, j) = gamma + rng.normal();

  const double zi_mean = logit(rho);
  Mat X0, X0bar;
  switch (config.kind) {
    case ZiKind::nd:
      th.pi = rho;
      break;
    case ZiKind::cd: {
      X0 = Mat::Zero(n, d0);
      for (Index i = 0; i < n; ++i) X0(i, rng.categorical(int(d0))) = 1.0;
      th.B0.resize(d0, p);
      for (Index r = 0; r < d0; ++r)
        for (Index j = 0; j < p; ++j) th.B0(r, j) = zi_mean + rng.normal();
      break;
    }
    case ZiKind::rd: {
      // coefficients are per-row here; covariates are the column-wise one-hots
      X0bar = Mat::Zero(d0, p);
      for (Index j = 0; j < p; ++j) X0bar(rng.categorical(int(d0)), j) = 1.0;
      th.B0bar.resize(n, d0);
      for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < d0; ++r) th.B0bar(i, r) = zi_mean + rng.normal();
      break;
    }
    case ZiKind::none:
      th.pi = 0.0;
      break;
  }

  sc.design = design_only(std::move(X), Mat(), std::move(X0), std::move(X0bar), p);
  return sc;
}

}  // namespace zipln
