#include "zipln/simbench.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "zipln/csv.hpp"
#include "zipln/rng.hpp"

namespace zipln {

std::string to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::standard: return "Standard";
    case BenchMethod::enhanced: return "Enhanced";
    case BenchMethod::standard_analytic: return "StandardAnalytic";
    case BenchMethod::enhanced_analytic: return "EnhancedAnalytic";
    case BenchMethod::pln: return "PLN";
    case BenchMethod::oracle_pln: return "OraclePLN";
  }
  return "?";
}

BenchMethod bench_method_from_string(const std::string& s) {
  for (BenchMethod m : {BenchMethod::standard, BenchMethod::enhanced,
                        BenchMethod::standard_analytic, BenchMethod::enhanced_analytic,
                        BenchMethod::pln, BenchMethod::oracle_pln})
    if (to_string(m) == s) return m;
  throw validation_error("unknown bench method: " + s);
}

std::vector<BenchMethod> default_roster() {
  return {BenchMethod::standard, BenchMethod::enhanced, BenchMethod::standard_analytic,
          BenchMethod::enhanced_analytic, BenchMethod::pln, BenchMethod::oracle_pln};
}

std::vector<double> ScenarioGrid::default_axis(Axis axis, bool desk_scale) {
  switch (axis) {
    case Axis::pi_sweep: return {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    case Axis::gamma_sweep: return {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    case Axis::n_sweep:
      if (desk_scale) return {100, 200, 300, 400, 500, 600};
      return {100, 200, 300, 400, 500, 600};
    case Axis::p_sweep:
      if (desk_scale) return {10, 20, 30, 40, 50};
      return {100, 200, 300, 400, 500};
  }
  return {};
}

std::vector<double> ScenarioGrid::axis_values() const {
  if (!values.empty()) return values;
  return default_axis(axis, true);
}

ScenarioGrid::Axis axis_from_string(const std::string& s) {
  if (s == "pi") return ScenarioGrid::Axis::pi_sweep;
  if (s == "gamma") return ScenarioGrid::Axis::gamma_sweep;
  if (s == "n") return ScenarioGrid::Axis::n_sweep;
  if (s == "p") return ScenarioGrid::Axis::p_sweep;
  throw validation_error("unknown sweep axis: " + s + " (expected pi|gamma|n|p)");
}

std::string to_string(ScenarioGrid::Axis a) {
  switch (a) {
    case ScenarioGrid::Axis::pi_sweep: return "pi";
    case ScenarioGrid::Axis::gamma_sweep: return "gamma";
    case ScenarioGrid::Axis::n_sweep: return "n";
    case ScenarioGrid::Axis::p_sweep: return "p";
  }
  return "?";
}

double rmse(const Mat& estimate, const Mat& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw validation_error("rmse: shape mismatch");
  return (estimate - truth).norm();
}

Mat reconstruct(const FitResult& fit, const CountDataset& data) {
  return fit.psi.Q().cwiseProduct(fit.psi.poisson_mean(data.O));
}

namespace {

FitConfig method_config(BenchMethod m, const ScenarioGrid& grid, std::uint64_t seed) {
  FitConfig cfg;
  cfg.max_iters = grid.max_iters;
  cfg.rel_tol = grid.rel_tol;
  cfg.seed = seed;
  switch (m) {
    case BenchMethod::standard:
      cfg.method = FitMethod::vem;
      cfg.variant = {ElboFamily::standard, false};
      cfg.zi.kind = grid.zi_kind;
      break;
    case BenchMethod::enhanced:
      cfg.method = FitMethod::gradient;
      cfg.variant = {ElboFamily::enhanced, false};
      cfg.zi.kind = grid.zi_kind;
      break;
    case BenchMethod::standard_analytic:
      cfg.method = FitMethod::gradient;
      cfg.variant = {ElboFamily::standard, true};
      cfg.zi.kind = grid.zi_kind;
      break;
    case BenchMethod::enhanced_analytic:
      cfg.method = FitMethod::gradient;
      cfg.variant = {ElboFamily::enhanced, true};
      cfg.zi.kind = grid.zi_kind;
      break;
    case BenchMethod::pln:
    case BenchMethod::oracle_pln:
      cfg.method = FitMethod::vem;
      cfg.variant = {ElboFamily::standard, false};
      cfg.zi.kind = ZiKind::none;
      break;
  }
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t grid_seed, std::uint64_t cell, std::uint64_t rep,
                          std::uint64_t salt) {
  std::uint64_t s = grid_seed ^ (cell * 0x9E3779B97F4A7C15ULL) ^ (rep * 0xC2B2AE3D27D4EB4FULL) ^
                    (salt * 0x165667B19E3779F9ULL);
  return splitmix64(s);
}

struct CellJob {
  int cell_index;
  double value;
  int replicate;
};

std::vector<BenchRecord> run_cell(const ScenarioGrid& grid, const std::vector<BenchMethod>& methods,
                                  const CellJob& job) {
  ScenarioGrid g = grid;
  double gamma = g.gamma, rho = g.rho;
  Index n = g.n, p = g.p;
  switch (g.axis) {
    case ScenarioGrid::Axis::pi_sweep: rho = job.value; break;
    case ScenarioGrid::Axis::gamma_sweep: gamma = job.value; break;
    case ScenarioGrid::Axis::n_sweep: n = Index(job.value); break;
    case ScenarioGrid::Axis::p_sweep: p = Index(job.value); break;
  }

  const std::uint64_t theta_seed = derive_seed(g.seed, job.cell_index, job.replicate, 1);
  const std::uint64_t data_seed = derive_seed(g.seed, job.cell_index, job.replicate, 2);

  ZIConfig zi_config{g.zi_kind};
  Scenario sc = scenario_params(zi_config, n, p, g.d, g.d0, gamma, rho, theta_seed);
  auto [data, truth] = sample_dataset(sc.params, sc.design, data_seed);
  const Mat pi_star = sc.params.pi_matrix(data);

  std::vector<BenchRecord> records;
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const BenchMethod m = methods[mi];
    BenchRecord rec;
    rec.scenario = to_string(g.axis);
    rec.axis_value = job.value;
    rec.replicate = job.replicate;
    rec.method = to_string(m);
    CountDataset fit_data = data;
    if (m == BenchMethod::oracle_pln) fit_data.Y = truth.T;
    if (m == BenchMethod::pln || m == BenchMethod::oracle_pln) {
      fit_data.X0 = Mat();
      fit_data.X0bar = Mat();
    }
    FitConfig cfg = method_config(m, g, derive_seed(g.seed, job.cell_index, job.replicate, 3 + mi));
    try {
      FitResult fr = fit(fit_data, cfg);
      rec.rmse_sigma = rmse(fr.theta.Sigma, sc.params.Sigma);
      rec.rmse_b = rmse(fr.theta.B, sc.params.B);
      if (m != BenchMethod::pln && m != BenchMethod::oracle_pln)
        rec.rmse_pi = rmse(fr.theta.pi_matrix(fit_data), pi_star);
      if (m != BenchMethod::oracle_pln)
        rec.recon_error = rmse(reconstruct(fr, fit_data), fit_data.Y);
      rec.elbo = fr.elbo_trace.back();
      rec.wall_time_s = fr.wall_time;
      rec.status = fr.converged ? "ok" : "max_iters";
    } catch (const std::exception& e) {
      rec.status = std::string("failed: ") + e.what();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<BenchRecord> run_scenario_grid(const ScenarioGrid& grid,
                                           const std::vector<BenchMethod>& methods, int jobs) {
  if (methods.empty()) throw validation_error("run_scenario_grid: empty method roster");
  if (grid.replicates <= 0) throw validation_error("run_scenario_grid: replicates must be positive");
  const auto values = grid.axis_values();

  std::vector<CellJob> cell_jobs;
  for (int ci = 0; ci < int(values.size()); ++ci)
    for (int r = 0; r < grid.replicates; ++r)
      cell_jobs.push_back({ci, values[size_t(ci)], r});

  std::vector<std::vector<BenchRecord>> slots(cell_jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t k = next.fetch_add(1);
      if (k >= cell_jobs.size()) return;
      slots[k] = run_cell(grid, methods, cell_jobs[k]);
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, int(cell_jobs.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<BenchRecord> records;
  for (auto& slot : slots)
    for (auto& rec : slot) records.push_back(std::move(rec));
  return records;
}

namespace {

struct Aggregate {
  int n_ok = 0;
  int n_failed = 0;
  std::vector<std::vector<double>> metric_values;  // one vector per metric
};

constexpr const char* kMetricNames[] = {"rmse_sigma", "rmse_b", "rmse_pi", "recon_error",
                                        "elbo", "wall_time_s"};

std::vector<double> record_metrics(const BenchRecord& r) {
  return {r.rmse_sigma, r.rmse_b, r.rmse_pi, r.recon_error, r.elbo, r.wall_time_s};
}

}  // namespace

void emit_report(const std::vector<BenchRecord>& records, const std::filesystem::path& out_dir) {
  if (records.empty()) throw validation_error("emit_report: no records");
  std::filesystem::create_directories(out_dir);

  std::ofstream raw(out_dir / "records.csv");
  if (!raw) throw write_error("cannot write " + (out_dir / "records.csv").string());
  raw << "scenario,axis_value,replicate,method,rmse_sigma,rmse_b,rmse_pi,recon_error,elbo,"
         "wall_time_s,status\n";
  for (const auto& r : records) {
    raw << r.scenario << ',' << format_g17(r.axis_value) << ',' << r.replicate << ',' << r.method
        << ',' << format_g17(r.rmse_sigma) << ',' << format_g17(r.rmse_b) << ','
        << format_g17(r.rmse_pi) << ',' << format_g17(r.recon_error) << ',' << format_g17(r.elbo)
        << ',' << format_g17(r.wall_time_s) << ',' << r.status << '\n';
  }

  // aggregates per (scenario, axis_value, method), insertion-ordered
  std::vector<std::pair<std::string, Aggregate>> groups;
  std::vector<std::tuple<std::string, double, std::string>> keys;
  for (const auto& r : records) {
    std::string key = r.scenario + "," + format_g17(r.axis_value) + "," + r.method;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, Aggregate{}});
      groups.back().second.metric_values.resize(std::size(kMetricNames));
      it = groups.end() - 1;
    }
    Aggregate& agg = it->second;
    const bool failed = r.status.rfind("failed", 0) == 0;
    (failed ? agg.n_failed : agg.n_ok) += 1;
    if (!failed) {
      auto vals = record_metrics(r);
      for (size_t k = 0; k < vals.size(); ++k)
        if (std::isfinite(vals[k])) agg.metric_values[k].push_back(vals[k]);
    }
  }

  std::ofstream agg_out(out_dir / "aggregate.csv");
  if (!agg_out) throw write_error("cannot write " + (out_dir / "aggregate.csv").string());
  agg_out << "scenario,axis_value,method,n_ok,n_failed";
  for (const char* name : kMetricNames) agg_out << ',' << name << "_mean," << name << "_ci95";
  agg_out << '\n';
  for (const auto& [key, agg] : groups) {
    agg_out << key << ',' << agg.n_ok << ',' << agg.n_failed;
    for (const auto& vals : agg.metric_values) {
      if (vals.empty()) {
        agg_out << ",nan,nan";
        continue;
      }
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= double(vals.size());
      double sd = 0.0;
      if (vals.size() > 1) {
        for (double v : vals) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / double(vals.size() - 1));
      }
      const double ci = 1.96 * sd / std::sqrt(double(vals.size()));
      agg_out << ',' << format_g17(mean) << ',' << format_g17(ci);
    }
    agg_out << '\n';
  }
}

}  // namespace zipln
