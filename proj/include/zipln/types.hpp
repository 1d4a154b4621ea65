#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace zipln {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Arr = Eigen::ArrayXXd;
using Index = Eigen::Index;

// Invalid model/data/config inputs (shape mismatches, non-SPD precision, ...).
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Rank-deficient design matrices: the model is not identifiable.
struct identifiability_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Moment inversion hit a non-positive denominator (pi near 1 or no dispersion).
struct degenerate_moments_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite objective or gradient during optimization.
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Backtracking could not find an ascent step.
struct stalled_ascent_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ELBO decreased where theory forbids it: a broken update.
struct internal_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed input file; carries a 1-based line number when known.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg, long line = -1)
      : std::runtime_error(msg), line_number(line) {}
  long line_number;
};

// Output path cannot be created or written.
struct write_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(1 + e^x) without overflow
inline double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

}  // namespace zipln
