#include "zipln/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "zipln/rng.hpp"

namespace zipln {

namespace {

constexpr double kRmsEps = 1e-8;
constexpr double kPFloor = 1e-7;

Mat zero_mask_of(const Mat& Y) {
  return Y.unaryExpr([](double y) { return y == 0.0 ? 1.0 : 0.0; });
}

double clamp_prob(double x) { return std::clamp(x, kPFloor, 1.0 - kPFloor); }

// M/S-dependent part of the standard ELBO, used by the VE-step inner solves.
double inner_objective(const CountDataset& data, const Mat& Q, const Mat& Omega,
                       const Mat& XB, const Mat& M, const Mat& S) {
  Mat A = (data.O.array() + M.array() + 0.5 * S.array().square()).exp().matrix();
  Mat h = M - XB;
  double f = (Q.array() * (data.Y.array() * M.array() - A.array())).sum();
  f += S.array().log().sum();
  f -= 0.5 * ((h * Omega).cwiseProduct(h)).sum();
  f -= 0.5 * (S.array().square().matrix().colwise().sum() * Omega.diagonal()).value();
  return f;
}

struct Convergence {
  int window;
  double rel_tol;
  bool reached(const std::vector<double>& trace) const {
    const int t = int(trace.size()) - 1;
    if (t < window) return false;
    return trace[t] - trace[t - window] < rel_tol * (std::abs(trace[t]) + 1e-12);
  }
};

void rms_accumulate(Mat& v, const Mat& g, double beta) {
  if (v.size() == 0) v = Mat::Zero(g.rows(), g.cols());
  v = beta * v + (1.0 - beta) * g.cwiseProduct(g);
}

Mat rms_direction(const Mat& v, const Mat& g, double lr) {
  return lr * g.cwiseQuotient((v.cwiseSqrt().array() + kRmsEps).matrix());
}

}  // namespace

void FitConfig::validate(Index n) const {
  if (method == FitMethod::vem &&
      (variant.family != ElboFamily::standard || variant.analytic_p))
    throw validation_error("VEM requires the standard ELBO with free P");
  if (!(rel_tol > 0.0)) throw validation_error("rel_tol must be positive");
  if (max_iters <= 0) throw validation_error("max_iters must be positive");
  if (minibatch_size < 0 || minibatch_size > n)
    throw validation_error("minibatch_size must lie in [0, n]");
  if (minibatch_size > 0 && method != FitMethod::gradient)
    throw validation_error("minibatching applies to the gradient method only");
}

std::pair<ModelParams, VariationalParams> init_params(const CountDataset& data,
                                                      const FitConfig& config) {
  data.validate(config.zi);
  data.check_identifiability(config.zi);
  const Index n = data.n(), p = data.p(), d = data.d(), d0 = data.d0();

  VariationalParams psi;
  psi.M = ((data.Y.array() + 1.0).log() - data.O.array()).matrix();
  psi.S = Mat::Ones(n, p);
  psi.P = config.zi.kind == ZiKind::none ? Mat::Zero(n, p)
                                         : Mat(0.5 * zero_mask_of(data.Y));

  ModelParams theta;
  theta.zi_kind = config.zi.kind;
  theta.set_omega(Mat::Identity(p, p));
  theta.B = data.X.colPivHouseholderQr().solve(psi.M);
  switch (config.zi.kind) {
    case ZiKind::nd: theta.pi = 0.5; break;
    case ZiKind::cd: theta.B0 = Mat::Zero(d0, p); break;
    case ZiKind::rd: theta.B0bar = Mat::Zero(n, d0); break;
    case ZiKind::none: break;
  }
  return {std::move(theta), std::move(psi)};
}

Mat update_b(const CountDataset& data, const VariationalParams& psi) {
  Mat xtx = data.X.transpose() * data.X;
  Eigen::LLT<Mat> llt(xtx);
  if (llt.info() != Eigen::Success)
    throw identifiability_error("update_b: X^T X is singular");
  return llt.solve(data.X.transpose() * psi.M);
}

Mat update_omega(const CountDataset& data, const ModelParams& theta,
                 const VariationalParams& psi, std::vector<std::string>* warnings) {
  const Index n = data.n(), p = data.p();
  Mat h = psi.M - data.X * theta.B;
  Mat G = h.transpose() * h;
  G.diagonal() += psi.S.array().square().matrix().colwise().sum().transpose();
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-5 * G.trace() / double(p);
    G.diagonal().array() += jitter;
    llt.compute(G);
    if (warnings)
      warnings->push_back("update_omega: ridge jitter applied to a numerically singular update");
    if (llt.info() != Eigen::Success)
      throw divergence_error("update_omega: update matrix is singular even after jitter");
  }
  Mat omega = double(n) * llt.solve(Mat::Identity(p, p));
  return 0.5 * (omega + omega.transpose());
}

namespace {

// Damped Newton for the concave column problem
//   max_b  s^T (X0 b) - sum softplus(X0 b)
// where s is a column of P. Shared by the CD (per column) and RD (per row,
// with transposed covariates) updates.
Vec newton_logistic(const Mat& X0, const Vec& s, Vec b) {
  const Index d0 = X0.cols();
  auto value = [&](const Vec& bb) {
    Vec eta = X0 * bb;
    double v = s.dot(eta);
    for (Index i = 0; i < eta.size(); ++i) v -= softplus(eta(i));
    return v;
  };
  double f = value(b);
  for (int it = 0; it < 100; ++it) {
    Vec eta = X0 * b;
    Vec mu = eta.unaryExpr([](double x) { return sigmoid(x); });
    Vec grad = X0.transpose() * (s - mu);
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-9) break;
    Vec w = mu.array() * (1.0 - mu.array());
    Mat H = X0.transpose() * w.asDiagonal() * X0;
    H.diagonal().array() += 1e-10;
    Vec step = H.llt().solve(grad);
    double t = 1.0;
    for (int k = 0; k < 40; ++k) {
      double fnew = value(b + t * step);
      if (fnew >= f) {
        b += t * step;
        f = fnew;
        break;
      }
      t *= 0.5;
    }
    if (t < 1e-12) break;
  }
  return b;
}

}  // namespace

void update_b0(const CountDataset& data, const VariationalParams& psi, ModelParams& theta) {
  switch (theta.zi_kind) {
    case ZiKind::nd:
      theta.pi = clamp_prob(psi.P.mean());
      break;
    case ZiKind::cd: {
      for (Index j = 0; j < data.p(); ++j)
        theta.B0.col(j) = newton_logistic(data.X0, psi.P.col(j), theta.B0.col(j));
      break;
    }
    case ZiKind::rd: {
      Mat X0t = data.X0bar.transpose();  // p x d0
      for (Index i = 0; i < data.n(); ++i)
        theta.B0bar.row(i) =
            newton_logistic(X0t, psi.P.row(i).transpose(), theta.B0bar.row(i).transpose())
                .transpose();
      break;
    }
    case ZiKind::none:
      break;
  }
}

Mat update_p(const CountDataset& data, const ModelParams& theta, const VariationalParams& psi) {
  if (theta.zi_kind == ZiKind::none) return Mat::Zero(data.n(), data.p());
  Mat A = psi.poisson_mean(data.O);
  Mat mu0 = theta.mu0(data);
  Mat P = (A + mu0).unaryExpr([](double x) { return sigmoid(x); });
  return P.cwiseProduct(zero_mask_of(data.Y));
}

namespace {

// One diagonal-Newton pass over M with joint backtracking.
void inner_m_step(const CountDataset& data, const Mat& Q, const Mat& Omega, const Mat& XB,
                  Mat& M, const Mat& S, double& f) {
  Mat A = (data.O.array() + M.array() + 0.5 * S.array().square()).exp().matrix();
  Mat grad = Q.cwiseProduct(data.Y - A) - (M - XB) * Omega;
  Mat denom = Q.cwiseProduct(A) + Mat::Ones(M.rows(), 1) * Omega.diagonal().transpose();
  Mat step = grad.cwiseQuotient(denom).cwiseMax(-4.0).cwiseMin(4.0);
  double t = 1.0;
  for (int k = 0; k < 30; ++k) {
    double fnew = inner_objective(data, Q, Omega, XB, M + t * step, S);
    if (std::isfinite(fnew) && fnew >= f) {
      M += t * step;
      f = fnew;
      return;
    }
    t *= 0.5;
  }
}

// One diagonal-Newton pass over log S with joint backtracking.
void inner_s_step(const CountDataset& data, const Mat& Q, const Mat& Omega, const Mat& XB,
                  const Mat& M, Mat& S, double& f) {
  Arr s2 = S.array().square();
  Arr A = (data.O.array() + M.array() + 0.5 * s2).exp();
  Arr omega_row = (Mat::Ones(M.rows(), 1) * Omega.diagonal().transpose()).array();
  Arr grad = 1.0 - Q.array() * A * s2 - s2 * omega_row;
  Arr curv = Q.array() * A * s2 * (s2 + 2.0) + 2.0 * s2 * omega_row;
  Arr step = (grad / curv).max(-2.0).min(2.0);
  double t = 1.0;
  for (int k = 0; k < 30; ++k) {
    Mat Snew = (S.array().log() + t * step).exp().matrix();
    double fnew = inner_objective(data, Q, Omega, XB, M, Snew);
    if (std::isfinite(fnew) && fnew >= f) {
      S = Snew;
      f = fnew;
      return;
    }
    t *= 0.5;
  }
}

}  // namespace

FitResult vem_fit(const CountDataset& data, const FitConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate(data.n());
  if (config.method != FitMethod::vem)
    throw validation_error("vem_fit called with a non-VEM config");

  FitResult res;
  auto [theta, psi] = init_params(data, config);
  const Mat lf = log_factorial(data.Y);
  const bool zi = config.zi.kind != ZiKind::none;
  const Convergence conv{config.tol_window, config.rel_tol};

  double J = elbo(config.variant, data, theta, psi, &lf);
  res.elbo_trace.push_back(J);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // M-step. The ZI coefficients keep their initialization for one
    // iteration: re-estimating them from the flat initial P drives pi
    // toward a degenerate local optimum on some datasets.
    theta.set_omega(update_omega(data, theta, psi, &res.warnings));
    theta.B = update_b(data, psi);
    if (zi && iter > 1) update_b0(data, psi, theta);

    // VE-step
    if (zi) psi.P = update_p(data, theta, psi);
    Mat Q = psi.Q();
    Mat XB = data.X * theta.B;
    double f = inner_objective(data, Q, theta.Omega, XB, psi.M, psi.S);
    for (int k = 0; k < config.inner_newton_steps; ++k)
      inner_m_step(data, Q, theta.Omega, XB, psi.M, psi.S, f);
    for (int k = 0; k < config.inner_newton_steps; ++k)
      inner_s_step(data, Q, theta.Omega, XB, psi.M, psi.S, f);

    double Jnew = elbo(config.variant, data, theta, psi, &lf);
    if (!std::isfinite(Jnew))
      throw divergence_error("vem_fit: non-finite ELBO at iteration " + std::to_string(iter));
    if (Jnew < J - 1e-8 * std::abs(J))
      throw internal_error("vem_fit: ELBO decreased at iteration " + std::to_string(iter));
    res.elbo_trace.push_back(Jnew);
    J = Jnew;
    res.n_iters = iter;
    if (conv.reached(res.elbo_trace)) {
      res.converged = true;
      break;
    }
  }

  res.theta = std::move(theta);
  res.psi = std::move(psi);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

namespace {

// Free blocks of the joint ascent, kept in unconstrained coordinates:
// S as log S, P as logit P on zero entries, Omega through its factor C.
struct AscentVars {
  Mat M, L, Pl, B, C, Zi;
  bool free_p = false;
  bool has_zi = false;
};

void push_vars(const CountDataset& data, const AscentVars& v, ZiKind kind, ModelParams& theta,
               VariationalParams& psi, const Mat& mask) {
  psi.M = v.M;
  psi.S = v.L.array().exp().matrix();
  if (v.free_p)
    psi.P = v.Pl.unaryExpr([](double x) { return sigmoid(x); }).cwiseProduct(mask);
  theta.B = v.B;
  theta.set_omega_factor(v.C);
  if (v.has_zi) {
    switch (kind) {
      case ZiKind::nd: theta.pi = sigmoid(v.Zi(0, 0)); break;
      case ZiKind::cd: theta.B0 = v.Zi; break;
      case ZiKind::rd: theta.B0bar = v.Zi; break;
      case ZiKind::none: break;
    }
  }
}

struct BlockGrads {
  Mat gM, gL, gPl, gB, gC, gZi;
};

BlockGrads to_block_grads(const ElboGradient& g, const AscentVars& v,
                          const VariationalParams& psi, const Mat& mask) {
  BlockGrads b;
  b.gM = g.dM;
  b.gL = g.dS.cwiseProduct(psi.S);
  if (v.free_p)
    b.gPl = g.dP.cwiseProduct(psi.P).cwiseProduct((1.0 - psi.P.array()).matrix())
                .cwiseProduct(mask);
  b.gB = g.dB;
  b.gC = g.dC;
  if (v.has_zi) b.gZi = g.dZi;
  return b;
}

}  // namespace

FitResult gradient_fit(const CountDataset& data, const FitConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate(data.n());
  if (config.method != FitMethod::gradient)
    throw validation_error("gradient_fit called with a non-gradient config");
  if (config.minibatch_size > 0) {
    // stochastic epochs over shuffled batches
    FitResult res;
    SgdState st = make_sgd_state(data, config);
    const Mat lf = log_factorial(data.Y);
    const Convergence conv{config.tol_window, config.rel_tol};
    res.elbo_trace.push_back(elbo(st.variant, data, st.theta, st.psi, &lf));
    Rng rng(config.seed);
    std::vector<Index> order(data.n());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= config.max_iters; ++epoch) {
      st.learning_rate = config.learning_rate / (1.0 + config.lr_decay * double(epoch - 1));
      // Fisher-Yates with the project generator, deterministic per seed
      for (Index i = data.n() - 1; i > 0; --i)
        std::swap(order[i], order[rng.categorical(int(i + 1))]);
      for (Index start = 0; start < data.n(); start += config.minibatch_size) {
        const Index stop = std::min<Index>(start + config.minibatch_size, data.n());
        std::vector<Index> batch(order.begin() + start, order.begin() + stop);
        minibatch_step(data, st, batch);
      }
      double J = elbo(st.variant, data, st.theta, st.psi, &lf);
      if (!std::isfinite(J))
        throw divergence_error("gradient_fit: non-finite ELBO at epoch " + std::to_string(epoch));
      res.elbo_trace.push_back(J);
      res.n_iters = epoch;
      if (conv.reached(res.elbo_trace)) {
        res.converged = true;
        break;
      }
    }
    if (st.variant.analytic_p) st.psi.P = psi_analytic(data, st.theta);
    res.theta = std::move(st.theta);
    res.psi = std::move(st.psi);
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

  FitResult res;
  auto [theta, psi] = init_params(data, config);
  const Mat lf = log_factorial(data.Y);
  const Mat mask = zero_mask_of(data.Y);
  const bool zi = config.zi.kind != ZiKind::none;
  const Convergence conv{config.tol_window, config.rel_tol};

  AscentVars v;
  v.free_p = zi && !config.variant.analytic_p;
  v.has_zi = zi;
  v.M = psi.M;
  v.L = psi.S.array().log().matrix();
  if (v.free_p)
    v.Pl = psi.P.unaryExpr([](double x) { return logit(clamp_prob(x)); }).cwiseProduct(mask);
  v.B = theta.B;
  v.C = theta.C;
  if (zi) {
    switch (config.zi.kind) {
      case ZiKind::nd: v.Zi = Mat::Constant(1, 1, logit(theta.pi)); break;
      case ZiKind::cd: v.Zi = theta.B0; break;
      case ZiKind::rd: v.Zi = theta.B0bar; break;
      case ZiKind::none: break;
    }
  }
  push_vars(data, v, config.zi.kind, theta, psi, mask);

  Mat vM, vL, vPl, vB, vC, vZi;
  double J = elbo(config.variant, data, theta, psi, &lf);
  res.elbo_trace.push_back(J);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    ElboGradient g = elbo_gradient(config.variant, data, theta, psi, &lf);
    BlockGrads bg = to_block_grads(g, v, psi, mask);
    if (!bg.gM.allFinite() || !bg.gB.allFinite() || !bg.gC.allFinite())
      throw divergence_error("gradient_fit: non-finite gradient at iteration " +
                             std::to_string(iter));

    rms_accumulate(vM, bg.gM, config.rms_decay);
    rms_accumulate(vL, bg.gL, config.rms_decay);
    if (v.free_p) rms_accumulate(vPl, bg.gPl, config.rms_decay);
    rms_accumulate(vB, bg.gB, config.rms_decay);
    rms_accumulate(vC, bg.gC, config.rms_decay);
    if (zi) rms_accumulate(vZi, bg.gZi, config.rms_decay);

    Mat sM = rms_direction(vM, bg.gM, config.learning_rate);
    Mat sL = rms_direction(vL, bg.gL, config.learning_rate);
    Mat sPl = v.free_p ? rms_direction(vPl, bg.gPl, config.learning_rate) : Mat();
    Mat sB = rms_direction(vB, bg.gB, config.learning_rate);
    Mat sC = rms_direction(vC, bg.gC, config.learning_rate);
    Mat sZi = zi ? rms_direction(vZi, bg.gZi, config.learning_rate) : Mat();

    double scale = 1.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= 20; ++attempt) {
      AscentVars cand = v;
      cand.M += scale * sM;
      cand.L = (cand.L + scale * sL).cwiseMax(-12.0).cwiseMin(12.0);
      if (v.free_p) cand.Pl = (cand.Pl + scale * sPl).cwiseMax(-16.1).cwiseMin(16.1);
      cand.B += scale * sB;
      cand.C += scale * sC;
      if (zi) cand.Zi += scale * sZi;
      ModelParams theta_c = theta;
      VariationalParams psi_c = psi;
      double Jc;
      try {
        push_vars(data, cand, config.zi.kind, theta_c, psi_c, mask);
        Jc = elbo(config.variant, data, theta_c, psi_c, &lf);
      } catch (const validation_error&) {
        scale *= 0.5;
        continue;
      }
      if (std::isfinite(Jc) && Jc >= J - 1e-6 * std::abs(J)) {
        v = std::move(cand);
        theta = std::move(theta_c);
        psi = std::move(psi_c);
        J = Jc;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted)
      throw stalled_ascent_error("gradient_fit: no ascent step found after 20 halvings");

    res.elbo_trace.push_back(J);
    res.n_iters = iter;
    if (conv.reached(res.elbo_trace)) {
      res.converged = true;
      break;
    }
  }

  if (config.variant.analytic_p) psi.P = psi_analytic(data, theta);
  res.theta = std::move(theta);
  res.psi = std::move(psi);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

FitResult fit(const CountDataset& data, const FitConfig& config) {
  return config.method == FitMethod::vem ? vem_fit(data, config) : gradient_fit(data, config);
}

SgdState make_sgd_state(const CountDataset& data, const FitConfig& config) {
  SgdState st;
  st.variant = config.variant;
  auto [theta, psi] = init_params(data, config);
  st.theta = std::move(theta);
  st.psi = std::move(psi);
  st.learning_rate = config.learning_rate;
  st.rms_decay = config.rms_decay;
  return st;
}

void minibatch_step(const CountDataset& data, SgdState& state,
                    const std::vector<Index>& batch) {
  if (batch.empty()) throw validation_error("minibatch_step: empty batch");
  for (Index i : batch)
    if (i < 0 || i >= data.n()) throw validation_error("minibatch_step: index out of range");

  const Index nb = Index(batch.size());
  const Index n = data.n(), p = data.p();
  const double scale = double(n) / double(nb);
  const bool zi = state.theta.zi_kind != ZiKind::none;
  const bool free_p = zi && !state.variant.analytic_p;

  // row-subset view of data and parameters
  CountDataset sub;
  sub.Y.resize(nb, p);
  sub.O.resize(nb, p);
  sub.X.resize(nb, data.X.cols());
  if (data.X0.size() > 0) sub.X0.resize(nb, data.X0.cols());
  sub.X0bar = data.X0bar;
  VariationalParams psi_b;
  psi_b.M.resize(nb, p);
  psi_b.S.resize(nb, p);
  psi_b.P.resize(nb, p);
  ModelParams theta_b = state.theta;
  if (state.theta.zi_kind == ZiKind::rd) theta_b.B0bar.resize(nb, data.d0());
  for (Index k = 0; k < nb; ++k) {
    const Index i = batch[k];
    sub.Y.row(k) = data.Y.row(i);
    sub.O.row(k) = data.O.row(i);
    sub.X.row(k) = data.X.row(i);
    if (data.X0.size() > 0) sub.X0.row(k) = data.X0.row(i);
    psi_b.M.row(k) = state.psi.M.row(i);
    psi_b.S.row(k) = state.psi.S.row(i);
    psi_b.P.row(k) = state.psi.P.row(i);
    if (state.theta.zi_kind == ZiKind::rd) theta_b.B0bar.row(k) = state.theta.B0bar.row(i);
  }

  ElboGradient g = elbo_gradient(state.variant, sub, theta_b, psi_b);
  state.step_count += 1;
  const double lr = state.learning_rate;
  const double beta = state.rms_decay;

  // theta blocks: dense accumulators
  auto dense_step = [&](Mat& v, const Mat& grad_scaled) {
    rms_accumulate(v, grad_scaled, beta);
    return rms_direction(v, grad_scaled, lr);
  };
  state.theta.B += dense_step(state.vB, Mat(scale * g.dB));
  Mat c_new = state.theta.C + dense_step(state.vC, Mat(scale * g.dC));
  state.theta.set_omega_factor(c_new);
  if (zi && state.theta.zi_kind != ZiKind::rd) {
    Mat gzi = scale * g.dZi;
    if (state.vZi.size() == 0) state.vZi = Mat::Zero(gzi.rows(), gzi.cols());
    state.vZi = beta * state.vZi + (1.0 - beta) * gzi.cwiseProduct(gzi);
    Mat step = rms_direction(state.vZi, gzi, lr);
    if (state.theta.zi_kind == ZiKind::nd)
      state.theta.pi = sigmoid(logit(state.theta.pi) + step(0, 0));
    else
      state.theta.B0 += step;
  }

  // psi rows (and B0bar rows for RD): sparse row-wise accumulators
  if (state.vM.size() == 0) {
    state.vM = Mat::Zero(n, p);
    state.vS = Mat::Zero(n, p);
    state.vP = Mat::Zero(n, p);
    if (state.theta.zi_kind == ZiKind::rd)
      state.vZi = Mat::Zero(n, data.d0());
  }
  for (Index k = 0; k < nb; ++k) {
    const Index i = batch[k];
    for (Index j = 0; j < p; ++j) {
      const double gm = scale * g.dM(k, j);
      state.vM(i, j) = beta * state.vM(i, j) + (1.0 - beta) * gm * gm;
      state.psi.M(i, j) += lr * gm / (std::sqrt(state.vM(i, j)) + kRmsEps);

      const double gs = scale * g.dS(k, j) * state.psi.S(i, j);  // log-S coordinates
      state.vS(i, j) = beta * state.vS(i, j) + (1.0 - beta) * gs * gs;
      double lnew = std::log(state.psi.S(i, j)) + lr * gs / (std::sqrt(state.vS(i, j)) + kRmsEps);
      state.psi.S(i, j) = std::exp(std::clamp(lnew, -12.0, 12.0));

      if (free_p && data.Y(i, j) == 0.0) {
        const double pij = state.psi.P(i, j);
        const double gp = scale * g.dP(k, j) * pij * (1.0 - pij);
        state.vP(i, j) = beta * state.vP(i, j) + (1.0 - beta) * gp * gp;
        double ln = logit(clamp_prob(pij)) + lr * gp / (std::sqrt(state.vP(i, j)) + kRmsEps);
        state.psi.P(i, j) = sigmoid(std::clamp(ln, -16.1, 16.1));
      }
    }
    if (state.theta.zi_kind == ZiKind::rd) {
      for (Index r = 0; r < data.d0(); ++r) {
        const double gz = scale * g.dZi(k, r);
        state.vZi(i, r) = beta * state.vZi(i, r) + (1.0 - beta) * gz * gz;
        state.theta.B0bar(i, r) += lr * gz / (std::sqrt(state.vZi(i, r)) + kRmsEps);
      }
    }
  }
}

}  // namespace zipln
