#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "zipln/model.hpp"
#include "zipln/optimize.hpp"

namespace zipln {

/// Estimator roster of the simulation study. PLN ignores zero-inflation;
/// OraclePLN is fitted on the non-inflated counts T and is excluded from
/// reconstruction comparisons.
enum class BenchMethod { standard, enhanced, standard_analytic, enhanced_analytic, pln, oracle_pln };

std::string to_string(BenchMethod m);
BenchMethod bench_method_from_string(const std::string& s);
std::vector<BenchMethod> default_roster();

struct ScenarioGrid {
  enum class Axis { pi_sweep, gamma_sweep, n_sweep, p_sweep };
  Axis axis = Axis::pi_sweep;
  std::vector<double> values;  // filled with the per-axis default when empty

  int replicates = 10;
  ZiKind zi_kind = ZiKind::nd;

  // fixed parameters at desk scale; --paper-scale restores n=1000, p=250
  Index n = 300, p = 30, d = 3, d0 = 4;
  double gamma = 2.0;
  double rho = 0.3;

  std::uint64_t seed = 1;
  int max_iters = 300;
  double rel_tol = 1e-6;

  std::vector<double> axis_values() const;
  static std::vector<double> default_axis(Axis axis, bool desk_scale);
};

ScenarioGrid::Axis axis_from_string(const std::string& s);
std::string to_string(ScenarioGrid::Axis a);

struct BenchRecord {
  std::string scenario;
  double axis_value = 0.0;
  int replicate = 0;
  std::string method;
  double rmse_sigma = std::numeric_limits<double>::quiet_NaN();
  double rmse_b = std::numeric_limits<double>::quiet_NaN();
  double rmse_pi = std::numeric_limits<double>::quiet_NaN();
  double recon_error = std::numeric_limits<double>::quiet_NaN();
  double elbo = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  std::string status = "ok";
};

/// Frobenius / l2 distance between an estimate and the truth; the
/// per-replicate ingredient of the study's RMSE (cells average these).
double rmse(const Mat& estimate, const Mat& truth);

/// Posterior reconstruction Yhat = (1 - P) .* exp(O + M + S^2/2).
Mat reconstruct(const FitResult& fit, const CountDataset& data);

/// Full grid: per cell and replicate, draw a fresh theta*, sample data, fit
/// every method. Individual fit failures are recorded in the record status,
/// never aborting the grid. Deterministic for a fixed grid seed, independent
/// of `jobs`.
std::vector<BenchRecord> run_scenario_grid(const ScenarioGrid& grid,
                                           const std::vector<BenchMethod>& methods, int jobs);

/// Writes records.csv (one row per record) and aggregate.csv (mean and 95%
/// CI per cell x method, with failure counts).
void emit_report(const std::vector<BenchRecord>& records, const std::filesystem::path& out_dir);

}  // namespace zipln
