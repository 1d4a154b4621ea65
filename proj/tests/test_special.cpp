#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "zipln/special.hpp"

using namespace zipln;

TEST_CASE("lambert_w pinned values") {
  CHECK(lambert_w(0.0) == 0.0);
  CHECK(std::abs(lambert_w(std::exp(1.0)) - 1.0) < 1e-14);
  CHECK(std::abs(lambert_w(1.0) - 0.56714329040978387) < 1e-13);
}

TEST_CASE("lambert_w residual on log grid") {
  for (double logz = std::log(1e-9); logz <= std::log(1e6); logz += 0.37) {
    const double z = std::exp(logz);
    const double w = lambert_w(z);
    CHECK(std::abs(w * std::exp(w) - z) <= 1e-12 * std::max(1.0, z));
  }
}

TEST_CASE("lambert_w rejects negative input") {
  CHECK_THROWS_AS(lambert_w(-0.1), validation_error);
}

TEST_CASE("lambert_w derivative matches finite differences") {
  for (double z : {1e-6, 0.1, 1.0, 10.0, 1e4}) {
    const double h = 1e-6 * std::max(1.0, z);
    const double fd = (lambert_w(z + h) - lambert_w(z - h)) / (2 * h);
    const double an = lambert_w_derivative(z, lambert_w(z));
    CHECK(std::abs(fd - an) < 1e-5 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("phi_tilde small-sigma limit is exp(-e^mu)") {
  for (double mu : {-1.0, 0.0, 1.5}) {
    CHECK(phi_tilde(mu, 1e-9) == doctest::Approx(std::exp(-std::exp(mu))).epsilon(1e-5));
  }
}

TEST_CASE("phi_tilde agrees with Monte Carlo at (0,1)") {
  auto mc = oracle::mc_phi(0.0, 1.0, 2'000'000, 99);
  const double pt = phi_tilde(0.0, 1.0);
  CHECK(std::abs(pt - mc.mean) / mc.mean < 0.01 + 3.0 * mc.se / mc.mean);
}

TEST_CASE("phi_tilde strictly decreasing in mu") {
  for (double s2 : {0.3, 1.0, 2.5}) {
    double prev = phi_tilde(-2.0, s2);
    for (double mu = -1.9; mu <= 4.0; mu += 0.1) {
      const double cur = phi_tilde(mu, s2);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("phi_tilde rejects non-positive variance") {
  CHECK_THROWS_AS(phi_tilde(0.0, 0.0), validation_error);
  CHECK_THROWS_AS(phi_tilde(0.0, -1.0), validation_error);
}

TEST_CASE("phi_tilde gradient matches finite differences") {
  for (double mu : {-1.0, 0.5, 2.0}) {
    for (double s2 : {0.4, 1.0, 2.2}) {
      auto g = phi_tilde_grad(mu, s2);
      const double h = 1e-6;
      const double fd_mu = (phi_tilde(mu + h, s2) - phi_tilde(mu - h, s2)) / (2 * h);
      const double fd_s2 = (phi_tilde(mu, s2 + h) - phi_tilde(mu, s2 - h)) / (2 * h);
      CHECK(g.d_mu == doctest::Approx(fd_mu).epsilon(1e-6));
      CHECK(g.d_sigma2 == doctest::Approx(fd_s2).epsilon(1e-6));
    }
  }
}

TEST_CASE("phi_tilde handles huge arguments without overflow") {
  const double v = phi_tilde(800.0, 1.0);
  CHECK(v == 0.0);
  CHECK(std::isfinite(phi_tilde_grad(800.0, 1.0).d_mu));
}
