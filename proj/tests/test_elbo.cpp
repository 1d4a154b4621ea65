#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "zipln/elbo.hpp"
#include "zipln/special.hpp"

using namespace zipln;
using oracle::Instance;
using oracle::random_instance;

namespace {

const ElboVariant kStandard{ElboFamily::standard, false};
const ElboVariant kEnhanced{ElboFamily::enhanced, false};
const ElboVariant kStandardA{ElboFamily::standard, true};
const ElboVariant kEnhancedA{ElboFamily::enhanced, true};

// finite differences of the ELBO in every free block, compared to the
// analytic gradient
double check_gradients(const ElboVariant& variant, Instance inst, double h = 1e-5) {
  const CountDataset& data = inst.data;
  ElboGradient g = elbo_gradient(variant, data, inst.theta, inst.psi);
  double worst = 0.0;

  auto f_M = [&](const Mat& m) {
    VariationalParams q = inst.psi;
    q.M = m;
    return elbo(variant, data, inst.theta, q);
  };
  worst = std::max(worst, oracle::max_rel_err(g.dM, oracle::fd_gradient(f_M, inst.psi.M, h)));

  auto f_S = [&](const Mat& s) {
    VariationalParams q = inst.psi;
    q.S = s;
    return elbo(variant, data, inst.theta, q);
  };
  worst = std::max(worst, oracle::max_rel_err(g.dS, oracle::fd_gradient(f_S, inst.psi.S, h)));

  if (!variant.analytic_p && inst.theta.zi_kind != ZiKind::none) {
    // only zero-count entries are free; perturbing masked ones is a
    // contract violation by design
    Mat fdP = Mat::Zero(data.n(), data.p());
    Mat p_work = inst.psi.P;
    for (Index j = 0; j < data.p(); ++j)
      for (Index i = 0; i < data.n(); ++i) {
        if (data.Y(i, j) > 0.0) continue;
        VariationalParams q = inst.psi;
        const double orig = p_work(i, j);
        q.P = p_work;
        q.P(i, j) = orig + h;
        const double fp = elbo(variant, data, inst.theta, q);
        q.P(i, j) = orig - h;
        const double fm = elbo(variant, data, inst.theta, q);
        fdP(i, j) = (fp - fm) / (2.0 * h);
      }
    worst = std::max(worst, oracle::max_rel_err(g.dP, fdP));
  }

  auto f_B = [&](const Mat& b) {
    ModelParams t = inst.theta;
    t.B = b;
    return elbo(variant, data, t, inst.psi);
  };
  worst = std::max(worst, oracle::max_rel_err(g.dB, oracle::fd_gradient(f_B, inst.theta.B, h)));

  auto f_C = [&](const Mat& c) {
    ModelParams t = inst.theta;
    t.set_omega_factor(c);
    return elbo(variant, data, t, inst.psi);
  };
  worst = std::max(worst, oracle::max_rel_err(g.dC, oracle::fd_gradient(f_C, inst.theta.C, h)));

  switch (inst.theta.zi_kind) {
    case ZiKind::nd: {
      auto f_zi = [&](const Mat& z) {
        ModelParams t = inst.theta;
        t.pi = sigmoid(z(0, 0));
        return elbo(variant, data, t, inst.psi);
      };
      Mat z0 = Mat::Constant(1, 1, logit(inst.theta.pi));
      worst = std::max(worst, oracle::max_rel_err(g.dZi, oracle::fd_gradient(f_zi, z0, h)));
      break;
    }
    case ZiKind::cd: {
      auto f_zi = [&](const Mat& z) {
        ModelParams t = inst.theta;
        t.B0 = z;
        return elbo(variant, data, t, inst.psi);
      };
      worst = std::max(worst, oracle::max_rel_err(g.dZi, oracle::fd_gradient(f_zi, inst.theta.B0, h)));
      break;
    }
    case ZiKind::rd: {
      auto f_zi = [&](const Mat& z) {
        ModelParams t = inst.theta;
        t.B0bar = z;
        return elbo(variant, data, t, inst.psi);
      };
      worst = std::max(worst,
                       oracle::max_rel_err(g.dZi, oracle::fd_gradient(f_zi, inst.theta.B0bar, h)));
      break;
    }
    case ZiKind::none:
      break;
  }
  return worst;
}

}  // namespace

TEST_CASE("scalar pinned ELBO value") {
  // n = p = d = 1, Y = 0, O = 0, X = 1, B = 0, Omega = 1, ND pi = 0.5,
  // psi = (M=0, S=1, P=0): J = -e^{0.5} - log 2
  CountDataset data = design_only(Mat::Ones(1, 1), Mat(), Mat(), Mat(), 1);
  ModelParams th;
  th.zi_kind = ZiKind::nd;
  th.set_omega(Mat::Identity(1, 1));
  th.B = Mat::Zero(1, 1);
  th.pi = 0.5;
  VariationalParams psi{Mat::Zero(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1)};
  const double expected = -std::exp(0.5) - std::log(2.0);
  CHECK(elbo(kStandard, data, th, psi) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(-2.3418).epsilon(1e-4));
  // same instance: the two families coincide when P = 0
  CHECK(elbo(kEnhanced, data, th, psi) == doctest::Approx(expected).epsilon(1e-14));
  // and the pinned gradient dJ/dM = -e^{0.5}
  ElboGradient g = elbo_gradient(kStandard, data, th, psi);
  CHECK(g.dM(0, 0) == doctest::Approx(-std::exp(0.5)).epsilon(1e-14));
}

TEST_CASE("family collapse J2 == J1 whenever P == 0") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Instance inst = random_instance(ZiKind::nd, 6, 4, 2, 0, seed);
    inst.psi.P.setZero();
    const double j1 = elbo(kStandard, inst.data, inst.theta, inst.psi);
    const double j2 = elbo(kEnhanced, inst.data, inst.theta, inst.psi);
    CHECK(std::abs(j1 - j2) <= 1e-10 * std::abs(j1));
  }
}

TEST_CASE("mask violation is an error, not -inf") {
  Instance inst = random_instance(ZiKind::nd, 5, 3, 2, 0, 4);
  bool found = false;
  for (Index j = 0; j < 3 && !found; ++j)
    for (Index i = 0; i < 5 && !found; ++i)
      if (inst.data.Y(i, j) > 0.0) {
        inst.psi.P(i, j) = 0.5;
        found = true;
      }
  REQUIRE(found);
  CHECK_THROWS_AS(elbo(kStandard, inst.data, inst.theta, inst.psi), validation_error);
}

TEST_CASE("elbo matches Monte-Carlo estimate from both families") {
  Instance inst = random_instance(ZiKind::nd, 3, 2, 2, 0, 11);
  for (const auto& variant : {kStandard, kEnhanced}) {
    const double j = elbo(variant, inst.data, inst.theta, inst.psi);
    auto mc = oracle::mc_elbo(variant, inst.data, inst.theta, inst.psi, 200'000, 13);
    CHECK(std::abs(j - mc.mean) <= 5.0 * mc.se);
  }
}

TEST_CASE("psi_analytic structure") {
  Instance inst = random_instance(ZiKind::nd, 8, 4, 2, 0, 21);
  Mat P = psi_analytic(inst.data, inst.theta);
  Mat mu_y = inst.data.O + inst.data.X * inst.theta.B;
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 8; ++i) {
      if (inst.data.Y(i, j) > 0.0) {
        CHECK(P(i, j) == 0.0);
      } else {
        const double f = phi_tilde(mu_y(i, j), inst.theta.Sigma(j, j));
        const double pi = inst.theta.pi;
        CHECK(P(i, j) == doctest::Approx(pi / (f * (1 - pi) + pi)).epsilon(1e-12));
      }
    }
  // pi = 0 kills the numerator
  inst.theta.pi = 0.0;
  CHECK(psi_analytic(inst.data, inst.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psi_analytic arithmetic identity at phi = 1/2") {
  // pi = 0.5 and phi value 0.5 gives P = 2/3
  const double pi = 0.5, f = 0.5;
  CHECK(pi / (f * (1 - pi) + pi) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("entropy pinned values") {
  const Index n = 4, p = 3;
  ModelParams th;
  th.zi_kind = ZiKind::nd;
  th.set_omega(Mat::Identity(p, p));
  th.B = Mat::Zero(1, p);
  VariationalParams psi{Mat::Zero(n, p), Mat::Ones(n, p), Mat::Constant(n, p, 0.5)};
  // P = 0.5 everywhere (all-zero Y): H(P) = np log 2
  CHECK(bernoulli_entropy(psi.P) ==
        doctest::Approx(double(n * p) * std::log(2.0)).epsilon(1e-12));
  // P = 0, S = 1: H1 = (np/2) log(2 pi e)
  psi.P.setZero();
  const double expect = 0.5 * double(n * p) * std::log(2.0 * M_PI * std::exp(1.0));
  CHECK(entropy(kStandard, th, psi) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("H1 equals H2 when P == 0") {
  for (std::uint64_t seed : {31u, 32u}) {
    Instance inst = random_instance(ZiKind::nd, 6, 4, 2, 0, seed);
    inst.psi.P.setZero();
    CHECK(entropy(kStandard, inst.theta, inst.psi) ==
          doctest::Approx(entropy(kEnhanced, inst.theta, inst.psi)).epsilon(1e-12));
  }
}

TEST_CASE("lower bound: elbo <= exact log-likelihood at p = 1") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Instance inst = random_instance(ZiKind::nd, 20, 1, 2, 0, 100 + seed);
    const double ll = oracle::exact_loglik_p1(inst.data, inst.theta);
    for (const auto& variant : {kStandard, kEnhanced, kStandardA, kEnhancedA}) {
      const double j = elbo(variant, inst.data, inst.theta, inst.psi);
      CHECK(j <= ll + 1e-6);
    }
  }
}

TEST_CASE("gradients match finite differences across variants and ZI kinds") {
  int idx = 0;
  for (ZiKind kind : {ZiKind::nd, ZiKind::cd, ZiKind::rd, ZiKind::none}) {
    for (const auto& variant : {kStandard, kEnhanced, kStandardA, kEnhancedA}) {
      if (kind == ZiKind::none && variant.analytic_p) continue;
      Instance inst = random_instance(kind, 6, 4, 2, 2, 500 + idx++);
      const double err = check_gradients(variant, std::move(inst));
      INFO("kind=", int(kind), " variant=", to_string(variant), " err=", err);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("log_factorial precompute matches direct evaluation") {
  Mat Y(2, 2);
  Y << 0, 1, 5, 40;
  Mat lf = log_factorial(Y);
  CHECK(lf(0, 0) == 0.0);
  CHECK(lf(0, 1) == 0.0);
  CHECK(lf(1, 0) == doctest::Approx(std::log(120.0)).epsilon(1e-12));
  Instance inst = random_instance(ZiKind::nd, 5, 3, 2, 0, 77);
  Mat lf2 = log_factorial(inst.data.Y);
  CHECK(elbo(kStandard, inst.data, inst.theta, inst.psi, &lf2) ==
        elbo(kStandard, inst.data, inst.theta, inst.psi));
}
