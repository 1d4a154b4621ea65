// zipln: fit zero-inflated Poisson log-normal models on CSV count tables,
// simulate datasets, run benchmark grids, compare fitted models and export
// latent-space projections.
//
// Exit codes: 0 success (fit: converged), 1 usage error, 2 fit stopped at
// max-iters, 3 rank-deficient design (identifiability), 4 malformed input
// file, 5 output write failure, 6 other runtime error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "zipln/csv.hpp"
#include "zipln/model.hpp"
#include "zipln/optimize.hpp"
#include "zipln/pca.hpp"
#include "zipln/selection.hpp"
#include "zipln/simbench.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace zipln;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string fingerprint_counts(const Mat& y) {
  // FNV-1a over dimensions and exact cell values
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  for (Index i = 0; i < y.rows(); ++i)
    for (Index j = 0; j < y.cols(); ++j) mix(format_g17(y(i, j)));
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ensure_outdir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw write_error("cannot create output directory " + dir.string());
}

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw write_error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// design construction from covariate tables

bool cell_is_numeric(const std::string& s) {
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0';
}

struct DesignBuild {
  Mat X;
  std::vector<std::string> names;
};

Index find_column(const Table& t, const std::string& name) {
  for (Index j = 0; j < t.cols(); ++j)
    if (t.col_names[size_t(j)] == name) return j;
  throw validation_error("covariate column not found: " + name);
}

bool column_is_numeric(const Table& t, Index j) {
  for (Index i = 0; i < t.rows(); ++i)
    if (!cell_is_numeric(t.cells[size_t(i)][size_t(j)])) return false;
  return true;
}

std::vector<std::string> sorted_levels(const Table& t, Index j) {
  std::set<std::string> s;
  for (Index i = 0; i < t.rows(); ++i) s.insert(t.cells[size_t(i)][size_t(j)]);
  return {s.begin(), s.end()};
}

void append_column(DesignBuild& d, const std::string& name, const Vec& col) {
  d.X.conservativeResize(col.size(), d.X.cols() + 1);
  d.X.col(d.X.cols() - 1) = col;
  d.names.push_back(name);
}

// Terms are column names or cat:cat interactions; categorical columns are
// one-hot encoded with the first level dropped when an intercept is active.
DesignBuild build_design(const Table& t, const std::vector<std::string>& terms, bool intercept,
                         const std::string& what) {
  DesignBuild d;
  d.X.resize(t.rows(), 0);
  if (intercept) append_column(d, "intercept", Vec::Ones(t.rows()));
  for (const std::string& term : terms) {
    auto colon = term.find(':');
    if (colon == std::string::npos) {
      Index j = find_column(t, term);
      if (column_is_numeric(t, j)) {
        Vec col(t.rows());
        for (Index i = 0; i < t.rows(); ++i) col(i) = std::stod(t.cells[size_t(i)][size_t(j)]);
        append_column(d, term, col);
      } else {
        auto levels = sorted_levels(t, j);
        for (size_t l = intercept ? 1 : 0; l < levels.size(); ++l) {
          Vec col(t.rows());
          for (Index i = 0; i < t.rows(); ++i)
            col(i) = t.cells[size_t(i)][size_t(j)] == levels[l] ? 1.0 : 0.0;
          append_column(d, term + "=" + levels[l], col);
        }
      }
    } else {
      const std::string a = term.substr(0, colon), b = term.substr(colon + 1);
      Index ja = find_column(t, a), jb = find_column(t, b);
      if (column_is_numeric(t, ja) || column_is_numeric(t, jb))
        throw validation_error(what + ": interactions are limited to categorical columns (" +
                               term + ")");
      auto la = sorted_levels(t, ja), lb = sorted_levels(t, jb);
      bool first = true;
      for (const auto& va : la)
        for (const auto& vb : lb) {
          if (intercept && first) {
            first = false;
            continue;
          }
          Vec col(t.rows());
          for (Index i = 0; i < t.rows(); ++i)
            col(i) = (t.cells[size_t(i)][size_t(ja)] == va &&
                      t.cells[size_t(i)][size_t(jb)] == vb)
                         ? 1.0
                         : 0.0;
          append_column(d, a + "=" + va + ":" + b + "=" + vb, col);
        }
    }
  }
  if (d.X.cols() == 0)
    throw validation_error(what + ": empty design (no intercept and no terms)");
  return d;
}

std::vector<std::string> split_terms(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string counts;
  std::string covariates;
  std::string zi_covariates;
  std::string offsets;
  std::string out = "zipln_fit";
  std::string zi = "nd";
  std::string method = "vem";
  std::string elbo_family = "standard";
  bool analytic_p = false;
  std::string pln_formula;  // comma-separated terms; empty = all columns
  std::string zi_formula;
  bool no_intercept = false;
  bool no_zi_intercept = false;
  bool offset_total_counts = false;
  double min_prevalence = 0.0;
  int max_iters = 1000;
  double tol = 1e-6;
  int minibatch = 0;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  std::string name = "fit";

  json to_json() const {
    return json{{"counts", counts},
                {"covariates", covariates},
                {"zi_covariates", zi_covariates},
                {"offsets", offsets},
                {"zi", zi},
                {"method", method},
                {"elbo", elbo_family},
                {"analytic_p", analytic_p},
                {"pln_formula", pln_formula},
                {"zi_formula", zi_formula},
                {"no_intercept", no_intercept},
                {"no_zi_intercept", no_zi_intercept},
                {"offset_total_counts", offset_total_counts},
                {"min_prevalence", min_prevalence},
                {"max_iters", max_iters},
                {"tol", tol},
                {"minibatch", minibatch},
                {"learning_rate", learning_rate},
                {"seed", seed},
                {"name", name}};
  }
  static FitOptions from_json(const json& j) {
    FitOptions o;
    o.counts = j.at("counts");
    o.covariates = j.value("covariates", "");
    o.zi_covariates = j.value("zi_covariates", "");
    o.offsets = j.value("offsets", "");
    o.zi = j.value("zi", "nd");
    o.method = j.value("method", "vem");
    o.elbo_family = j.value("elbo", "standard");
    o.analytic_p = j.value("analytic_p", false);
    o.pln_formula = j.value("pln_formula", "");
    o.zi_formula = j.value("zi_formula", "");
    o.no_intercept = j.value("no_intercept", false);
    o.no_zi_intercept = j.value("no_zi_intercept", false);
    o.offset_total_counts = j.value("offset_total_counts", false);
    o.min_prevalence = j.value("min_prevalence", 0.0);
    o.max_iters = j.value("max_iters", 1000);
    o.tol = j.value("tol", 1e-6);
    o.minibatch = j.value("minibatch", 0);
    o.learning_rate = j.value("learning_rate", 0.01);
    o.seed = j.value("seed", std::uint64_t(0));
    o.name = j.value("name", "fit");
    return o;
  }
};

int run_fit(const FitOptions& opt) {
  Table counts = read_table(opt.counts);
  Mat Y = table_to_matrix(counts, true, opt.counts);
  std::vector<std::string> var_names = counts.col_names;
  std::vector<std::string> sample_ids = counts.row_ids;

  // optional prevalence filter, explicit and recorded in the manifest
  if (opt.min_prevalence > 0.0) {
    std::vector<Index> keep;
    for (Index j = 0; j < Y.cols(); ++j) {
      const double prev = (Y.col(j).array() > 0.0).count() / double(Y.rows());
      if (prev >= opt.min_prevalence) keep.push_back(j);
    }
    if (keep.empty()) throw validation_error("min-prevalence filter removed every variable");
    Mat yk(Y.rows(), Index(keep.size()));
    std::vector<std::string> names;
    for (size_t k = 0; k < keep.size(); ++k) {
      yk.col(Index(k)) = Y.col(keep[k]);
      names.push_back(var_names[size_t(keep[k])]);
    }
    Y = std::move(yk);
    var_names = std::move(names);
  }
  const Index n = Y.rows(), p = Y.cols();

  CountDataset data;
  data.Y = Y;

  // offsets
  if (!opt.offsets.empty() && opt.offset_total_counts)
    throw validation_error("--offsets and --offset-total-counts are mutually exclusive");
  if (!opt.offsets.empty()) {
    Table ot = read_table(opt.offsets);
    data.O = table_to_matrix(ot, false, opt.offsets);
    if (data.O.rows() != n || data.O.cols() != p)
      throw validation_error("offsets must match the (filtered) count matrix shape");
  } else if (opt.offset_total_counts) {
    data.O.resize(n, p);
    for (Index i = 0; i < n; ++i) {
      const double total = Y.row(i).sum();
      if (total <= 0.0)
        throw validation_error(
            "sample with zero total count cannot use --offset-total-counts; filter it first");
      data.O.row(i).setConstant(std::log(total));
    }
  } else {
    data.O = Mat::Zero(n, p);
  }

  // PLN design
  std::vector<std::string> design_names;
  if (!opt.covariates.empty()) {
    Table ct = read_table(opt.covariates);
    if (ct.rows() != n)
      throw validation_error("covariates row count does not match the count table");
    std::vector<std::string> terms =
        opt.pln_formula.empty() ? ct.col_names : split_terms(opt.pln_formula);
    DesignBuild d = build_design(ct, terms, !opt.no_intercept, "covariates");
    data.X = d.X;
    design_names = d.names;
  } else {
    data.X = Mat::Ones(n, 1);
    design_names = {"intercept"};
  }

  // ZI design
  ZIConfig zi_config{zi_kind_from_string(opt.zi)};
  std::vector<std::string> zi_names;
  if (zi_config.kind == ZiKind::cd) {
    if (opt.zi_covariates.empty())
      throw validation_error("--zi cd requires --zi-covariates (row-wise sample covariates)");
    Table zt = read_table(opt.zi_covariates);
    if (zt.rows() != n)
      throw validation_error("zi-covariates row count does not match the count table");
    std::vector<std::string> terms =
        opt.zi_formula.empty() ? zt.col_names : split_terms(opt.zi_formula);
    DesignBuild d = build_design(zt, terms, !opt.no_zi_intercept, "zi-covariates");
    data.X0 = d.X;
    zi_names = d.names;
  } else if (zi_config.kind == ZiKind::rd) {
    if (opt.zi_covariates.empty())
      throw validation_error("--zi rd requires --zi-covariates (column-wise covariates, d0 x p)");
    Table zt = read_table(opt.zi_covariates);
    Mat x0bar = table_to_matrix(zt, false, opt.zi_covariates);
    if (zt.col_names != var_names)
      throw validation_error(
          "zi-covariates columns must match the (filtered) count table variables");
    if (!opt.no_zi_intercept) {
      Mat with_ones(x0bar.rows() + 1, p);
      with_ones.row(0).setOnes();
      with_ones.bottomRows(x0bar.rows()) = x0bar;
      x0bar = std::move(with_ones);
      zi_names.push_back("intercept");
    }
    for (const auto& id : zt.row_ids) zi_names.push_back(id);
    data.X0bar = x0bar;
  } else if (!opt.zi_covariates.empty()) {
    throw validation_error("--zi-covariates is only meaningful with --zi cd or --zi rd");
  }

  FitConfig cfg;
  cfg.method = opt.method == "vem" ? FitMethod::vem : FitMethod::gradient;
  if (opt.method != "vem" && opt.method != "grad")
    throw validation_error("--method must be vem or grad");
  if (opt.elbo_family != "standard" && opt.elbo_family != "enhanced")
    throw validation_error("--elbo must be standard or enhanced");
  cfg.variant.family =
      opt.elbo_family == "standard" ? ElboFamily::standard : ElboFamily::enhanced;
  cfg.variant.analytic_p = opt.analytic_p;
  cfg.zi = zi_config;
  cfg.max_iters = opt.max_iters;
  cfg.rel_tol = opt.tol;
  cfg.minibatch_size = opt.minibatch;
  cfg.learning_rate = opt.learning_rate;
  cfg.seed = opt.seed;

  data.validate(zi_config);
  FitResult res = fit(data, cfg);

  const fs::path out = opt.out;
  ensure_outdir(out);
  std::vector<std::string> var_axis = var_names;
  write_matrix(out / "omega.csv", res.theta.Omega, var_axis, &var_axis, "variable");
  write_matrix(out / "sigma.csv", res.theta.Sigma, var_axis, &var_axis, "variable");
  write_matrix(out / "b.csv", res.theta.B, var_axis, &design_names, "coefficient");
  switch (zi_config.kind) {
    case ZiKind::nd:
      write_matrix(out / "pi.csv", Mat::Constant(1, 1, res.theta.pi), {"pi"});
      break;
    case ZiKind::cd:
      write_matrix(out / "b0.csv", res.theta.B0, var_axis, &zi_names, "coefficient");
      break;
    case ZiKind::rd:
      write_matrix(out / "b0bar.csv", res.theta.B0bar, zi_names, &sample_ids, "sample");
      break;
    case ZiKind::none:
      break;
  }
  write_matrix(out / "m.csv", res.psi.M, var_axis, &sample_ids, "sample");
  write_matrix(out / "s.csv", res.psi.S, var_axis, &sample_ids, "sample");
  write_matrix(out / "p.csv", res.psi.P, var_axis, &sample_ids, "sample");

  std::vector<std::string> iter_ids;
  Mat trace(Index(res.elbo_trace.size()), 1);
  for (size_t t = 0; t < res.elbo_trace.size(); ++t) {
    trace(Index(t), 0) = res.elbo_trace[t];
    iter_ids.push_back(std::to_string(t));
  }
  write_matrix(out / "elbo_trace.csv", trace, {"elbo"}, &iter_ids, "iteration");

  CriteriaRow row = criteria(res, data, cfg, opt.name);
  json crit{{"name", row.name},
            {"variant", row.variant},
            {"zi", row.zi},
            {"n", row.n},
            {"p", row.p},
            {"K", row.K},
            {"elbo", row.elbo},
            {"AIC", row.aic},
            {"BIC", row.bic},
            {"ICL", row.icl},
            {"converged", row.converged},
            {"n_iters", row.n_iters},
            {"semi_parametric", row.semi_parametric}};
  {
    std::ofstream cj(out / "criteria.json");
    if (!cj) throw write_error("cannot write " + (out / "criteria.json").string());
    cj << crit.dump(2) << '\n';
  }

  json manifest{{"tool", "zipln"},
                {"version", kToolVersion},
                {"command", "fit"},
                {"options", opt.to_json()},
                {"dataset_fingerprint", fingerprint_counts(data.Y)}};
  write_manifest(out, manifest);

  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << (res.converged ? "converged" : "stopped at max-iters") << " after " << res.n_iters
            << " iterations, elbo " << format_g17(res.elbo_trace.back()) << '\n';
  return res.converged ? 0 : 2;
}

// ---------------------------------------------------------------------------
// simulate

struct SimOptions {
  std::string out = "zipln_sim";
  std::string zi = "nd";
  Index n = 100, p = 20, d = 1, d0 = 1;
  double gamma = 2.0;
  double rho = 0.3;
  double pi = -1.0;  // ND only; defaults to rho
  std::uint64_t seed = 0;

  json to_json() const {
    return json{{"zi", zi},     {"n", n},     {"p", p},   {"d", d},     {"d0", d0},
                {"gamma", gamma}, {"rho", rho}, {"pi", pi}, {"seed", seed}};
  }
  static SimOptions from_json(const json& j) {
    SimOptions o;
    o.zi = j.value("zi", "nd");
    o.n = j.value("n", Index(100));
    o.p = j.value("p", Index(20));
    o.d = j.value("d", Index(1));
    o.d0 = j.value("d0", Index(1));
    o.gamma = j.value("gamma", 2.0);
    o.rho = j.value("rho", 0.3);
    o.pi = j.value("pi", -1.0);
    o.seed = j.value("seed", std::uint64_t(0));
    return o;
  }
};

void run_simulate(const SimOptions& opt) {
  ZIConfig zi_config{zi_kind_from_string(opt.zi)};
  if (zi_config.kind == ZiKind::none)
    throw validation_error("simulate: use --zi nd with --pi 0 for a pure PLN draw");
  Scenario sc = scenario_params(zi_config, opt.n, opt.p, opt.d, opt.d0, opt.gamma, opt.rho,
                                opt.seed);
  if (zi_config.kind == ZiKind::nd && opt.pi >= 0.0) {
    if (opt.pi > 1.0) throw validation_error("--pi must lie in [0,1]");
    sc.params.pi = opt.pi;
  }
  auto [data, truth] = sample_dataset(sc.params, sc.design, opt.seed ^ 0x9E3779B97F4A7C15ULL);

  const fs::path out = opt.out;
  ensure_outdir(out);
  auto vnames = default_names("v", opt.p);
  auto dnames = default_names("x", data.d());
  write_matrix(out / "y.csv", data.Y, vnames, nullptr, "sample");
  write_matrix(out / "x.csv", data.X, dnames, nullptr, "sample");
  write_matrix(out / "o.csv", data.O, vnames, nullptr, "sample");
  write_matrix(out / "z.csv", truth.Z, vnames, nullptr, "sample");
  write_matrix(out / "w.csv", truth.W, vnames, nullptr, "sample");
  write_matrix(out / "t.csv", truth.T, vnames, nullptr, "sample");
  write_matrix(out / "sigma_star.csv", sc.params.Sigma, vnames, &vnames, "variable");
  write_matrix(out / "b_star.csv", sc.params.B, vnames, &dnames, "coefficient");
  switch (zi_config.kind) {
    case ZiKind::nd:
      write_matrix(out / "pi_star.csv", Mat::Constant(1, 1, sc.params.pi), {"pi"});
      break;
    case ZiKind::cd: {
      auto z0names = default_names("x0_", opt.d0);
      write_matrix(out / "x0.csv", data.X0, z0names, nullptr, "sample");
      write_matrix(out / "b0_star.csv", sc.params.B0, vnames, &z0names, "coefficient");
      break;
    }
    case ZiKind::rd: {
      auto z0names = default_names("x0_", opt.d0);
      write_matrix(out / "x0bar.csv", data.X0bar, vnames, &z0names, "covariate");
      write_matrix(out / "b0bar_star.csv", sc.params.B0bar, z0names, nullptr, "sample");
      break;
    }
    case ZiKind::none:
      break;
  }

  json manifest{{"tool", "zipln"},
                {"version", kToolVersion},
                {"command", "simulate"},
                {"options", opt.to_json()},
                {"alpha", sc.alpha},
                {"dataset_fingerprint", fingerprint_counts(data.Y)}};
  write_manifest(out, manifest);
  std::cerr << "wrote simulated dataset to " << out.string() << " (alpha="
            << format_g17(sc.alpha) << ")\n";
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::string out = "zipln_bench";
  std::string axis = "pi";
  std::string values;   // comma-separated; empty = per-axis default
  std::string methods;  // comma-separated; empty = full roster
  std::string zi = "nd";
  int replicates = 10;
  Index n = 300, p = 30, d = 3, d0 = 4;
  double gamma = 2.0, rho = 0.3;
  bool paper_scale = false;
  int max_iters = 300;
  int jobs = 1;
  std::uint64_t seed = 1;

  json to_json() const {
    return json{{"axis", axis},       {"values", values},   {"methods", methods},
                {"zi", zi},           {"replicates", replicates}, {"n", n},
                {"p", p},             {"d", d},             {"d0", d0},
                {"gamma", gamma},     {"rho", rho},         {"paper_scale", paper_scale},
                {"max_iters", max_iters}, {"jobs", jobs},   {"seed", seed}};
  }
  static BenchOptions from_json(const json& j) {
    BenchOptions o;
    o.axis = j.value("axis", "pi");
    o.values = j.value("values", "");
    o.methods = j.value("methods", "");
    o.zi = j.value("zi", "nd");
    o.replicates = j.value("replicates", 10);
    o.n = j.value("n", Index(300));
    o.p = j.value("p", Index(30));
    o.d = j.value("d", Index(3));
    o.d0 = j.value("d0", Index(4));
    o.gamma = j.value("gamma", 2.0);
    o.rho = j.value("rho", 0.3);
    o.paper_scale = j.value("paper_scale", false);
    o.max_iters = j.value("max_iters", 300);
    o.jobs = j.value("jobs", 1);
    o.seed = j.value("seed", std::uint64_t(1));
    return o;
  }
};

void run_bench(const BenchOptions& opt) {
  ScenarioGrid grid;
  grid.axis = axis_from_string(opt.axis);
  grid.zi_kind = zi_kind_from_string(opt.zi);
  if (grid.zi_kind == ZiKind::none)
    throw validation_error("bench: the generating model needs zero-inflation (--zi nd|cd|rd)");
  grid.replicates = opt.replicates;
  grid.n = opt.n;
  grid.p = opt.p;
  grid.d = opt.d;
  grid.d0 = opt.d0;
  grid.gamma = opt.gamma;
  grid.rho = opt.rho;
  grid.max_iters = opt.max_iters;
  grid.seed = opt.seed;
  if (opt.paper_scale) {
    grid.n = 1000;
    grid.p = 250;
    grid.d = 3;
    grid.d0 = 4;
    grid.replicates = 30;
    grid.values = ScenarioGrid::default_axis(grid.axis, false);
  }
  if (!opt.values.empty()) {
    grid.values.clear();
    for (const auto& tok : split_terms(opt.values)) grid.values.push_back(std::stod(tok));
  }

  std::vector<BenchMethod> roster;
  if (opt.methods.empty()) {
    roster = default_roster();
  } else {
    for (const auto& tok : split_terms(opt.methods)) roster.push_back(bench_method_from_string(tok));
  }

  auto records = run_scenario_grid(grid, roster, opt.jobs);
  const fs::path out = opt.out;
  ensure_outdir(out);
  emit_report(records, out);

  json manifest{{"tool", "zipln"},
                {"version", kToolVersion},
                {"command", "bench"},
                {"options", opt.to_json()},
                {"note",
                 "records.csv wall_time_s is hardware-dependent and exempt from byte-for-byte "
                 "replay identity"}};
  write_manifest(out, manifest);
  std::cerr << "wrote " << records.size() << " bench records to " << out.string() << '\n';
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::vector<std::string> fit_dirs;
  std::string out = "zipln_compare";

  json to_json() const { return json{{"fit_dirs", fit_dirs}}; }
  static CompareOptions from_json(const json& j) {
    CompareOptions o;
    o.fit_dirs = j.at("fit_dirs").get<std::vector<std::string>>();
    return o;
  }
};

void run_compare(const CompareOptions& opt) {
  if (opt.fit_dirs.empty()) throw validation_error("compare: no fit directories given");
  std::vector<CriteriaRow> rows;
  std::string fingerprint;
  for (const auto& dir : opt.fit_dirs) {
    json manifest = read_json(fs::path(dir) / "manifest.json");
    json crit = read_json(fs::path(dir) / "criteria.json");
    const std::string fp = manifest.value("dataset_fingerprint", "");
    if (fingerprint.empty())
      fingerprint = fp;
    else if (fp != fingerprint)
      throw validation_error("compare: fit in " + dir +
                             " was computed on a different dataset (fingerprint mismatch)");
    CriteriaRow row;
    row.name = crit.at("name");
    row.variant = crit.at("variant");
    row.zi = crit.at("zi");
    row.n = crit.at("n");
    row.p = crit.at("p");
    row.K = crit.at("K");
    row.elbo = crit.at("elbo");
    row.aic = crit.at("AIC");
    row.bic = crit.at("BIC");
    row.icl = crit.at("ICL");
    row.converged = crit.at("converged");
    row.n_iters = crit.at("n_iters");
    row.semi_parametric = crit.value("semi_parametric", false);
    rows.push_back(std::move(row));
  }
  CriteriaReport rep = compare_models(rows);
  std::cout << rep.to_text();

  const fs::path out = opt.out;
  ensure_outdir(out);
  {
    std::ofstream cs(out / "criteria.csv");
    if (!cs) throw write_error("cannot write " + (out / "criteria.csv").string());
    cs << rep.to_csv();
  }
  json manifest{{"tool", "zipln"},
                {"version", kToolVersion},
                {"command", "compare"},
                {"options", opt.to_json()},
                {"dataset_fingerprint", fingerprint}};
  write_manifest(out, manifest);
}

// ---------------------------------------------------------------------------
// project

struct ProjectOptions {
  std::string fit_dir;
  std::string out;
  Index k = 2;

  json to_json() const { return json{{"fit_dir", fit_dir}, {"k", k}}; }
  static ProjectOptions from_json(const json& j) {
    ProjectOptions o;
    o.fit_dir = j.at("fit_dir");
    o.k = j.at("k");
    return o;
  }
};

void run_project(const ProjectOptions& opt) {
  Table mt = read_table(fs::path(opt.fit_dir) / "m.csv");
  Mat m = table_to_matrix(mt, false, "m.csv");
  PcaResult res = pca(m, opt.k);
  if (res.truncated)
    std::cerr << "warning: k exceeds the rank of the centered latent means; truncated to "
              << res.scores.cols() << " components\n";

  const fs::path out = opt.out.empty() ? fs::path(opt.fit_dir) / "projection" : fs::path(opt.out);
  ensure_outdir(out);
  auto pc_names = default_names("PC", res.scores.cols());
  write_matrix(out / "scores.csv", res.scores, pc_names, &mt.row_ids, mt.id_header);
  write_matrix(out / "loadings.csv", res.loadings, pc_names, &mt.col_names, "variable");
  write_matrix(out / "explained_variance.csv", res.explained, {"fraction"}, &pc_names,
               "component");
  json manifest{{"tool", "zipln"},
                {"version", kToolVersion},
                {"command", "project"},
                {"options", opt.to_json()}};
  write_manifest(out, manifest);
}

// ---------------------------------------------------------------------------
// replay

int run_replay(const std::string& manifest_path, const std::string& out_override) {
  json manifest = read_json(manifest_path);
  const std::string command = manifest.at("command");
  const json& options = manifest.at("options");
  if (command == "fit") {
    FitOptions o = FitOptions::from_json(options);
    if (!out_override.empty()) o.out = out_override;
    return run_fit(o);
  }
  if (command == "simulate") {
    SimOptions o = SimOptions::from_json(options);
    o.out = out_override.empty() ? "zipln_sim_replay" : out_override;
    run_simulate(o);
    return 0;
  }
  if (command == "bench") {
    BenchOptions o = BenchOptions::from_json(options);
    o.out = out_override.empty() ? "zipln_bench_replay" : out_override;
    run_bench(o);
    return 0;
  }
  if (command == "compare") {
    CompareOptions o = CompareOptions::from_json(options);
    o.out = out_override.empty() ? "zipln_compare_replay" : out_override;
    run_compare(o);
    return 0;
  }
  if (command == "project") {
    ProjectOptions o = ProjectOptions::from_json(options);
    if (!out_override.empty())
      o.out = out_override;
    else
      o.out = "zipln_project_replay";
    run_project(o);
    return 0;
  }
  throw validation_error("replay: unknown command in manifest: " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-inflated Poisson log-normal models: fit, simulate, benchmark, compare"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV count table");
  fit_cmd->add_option("counts", fit_opt.counts, "count CSV (id column + variable header)")
      ->required();
  fit_cmd->add_option("--covariates", fit_opt.covariates, "sample covariates CSV");
  fit_cmd->add_option("--zi-covariates", fit_opt.zi_covariates,
                      "ZI covariates CSV (row-wise for cd, column-wise d0 x p for rd)");
  fit_cmd->add_option("--offsets", fit_opt.offsets, "offsets CSV (log scale)");
  fit_cmd->add_flag("--offset-total-counts", fit_opt.offset_total_counts,
                    "use log total count per sample as offset");
  fit_cmd->add_option("--out", fit_opt.out, "output directory");
  fit_cmd->add_option("--zi", fit_opt.zi, "zero-inflation variant: nd|cd|rd|none");
  fit_cmd->add_option("--method", fit_opt.method, "vem|grad");
  fit_cmd->add_option("--elbo", fit_opt.elbo_family, "standard|enhanced");
  fit_cmd->add_flag("--analytic-p", fit_opt.analytic_p, "pin P to the exact conditional of W");
  fit_cmd->add_option("--pln-formula", fit_opt.pln_formula,
                      "comma-separated covariate terms (a, b, a:b); default all columns");
  fit_cmd->add_option("--zi-formula", fit_opt.zi_formula, "terms for the ZI design (cd)");
  fit_cmd->add_flag("--no-intercept", fit_opt.no_intercept, "drop the PLN intercept");
  fit_cmd->add_flag("--no-zi-intercept", fit_opt.no_zi_intercept, "drop the ZI intercept");
  fit_cmd->add_option("--min-prevalence", fit_opt.min_prevalence,
                      "drop variables observed in fewer than this fraction of samples");
  fit_cmd->add_option("--max-iters", fit_opt.max_iters, "iteration cap");
  fit_cmd->add_option("--tol", fit_opt.tol, "relative ELBO tolerance");
  fit_cmd->add_option("--minibatch", fit_opt.minibatch, "stochastic batch size (grad only)");
  fit_cmd->add_option("--learning-rate", fit_opt.learning_rate, "adaptive step base rate");
  fit_cmd->add_option("--seed", fit_opt.seed, "random seed");
  fit_cmd->add_option("--name", fit_opt.name, "model name used in criteria reports");

  SimOptions sim_opt;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a synthetic dataset with ground truth");
  sim_cmd->add_option("--out", sim_opt.out, "output directory");
  sim_cmd->add_option("--zi", sim_opt.zi, "nd|cd|rd");
  sim_cmd->add_option("--n", sim_opt.n, "samples");
  sim_cmd->add_option("--p", sim_opt.p, "variables");
  sim_cmd->add_option("--d", sim_opt.d, "PLN covariate categories");
  sim_cmd->add_option("--d0", sim_opt.d0, "ZI covariate categories (cd/rd)");
  sim_cmd->add_option("--gamma", sim_opt.gamma, "Gaussian mean of B entries");
  sim_cmd->add_option("--rho", sim_opt.rho, "target inflation level in (0,1)");
  sim_cmd->add_option("--pi", sim_opt.pi, "exact ND inflation probability in [0,1]");
  sim_cmd->add_option("--seed", sim_opt.seed, "random seed");

  BenchOptions bench_opt;
  auto* bench_cmd = app.add_subcommand("bench", "run a simulation-study grid");
  bench_cmd->add_option("--out", bench_opt.out, "output directory");
  bench_cmd->add_option("--axis", bench_opt.axis, "sweep axis: pi|gamma|n|p");
  bench_cmd->add_option("--values", bench_opt.values, "comma-separated axis values");
  bench_cmd->add_option("--methods", bench_opt.methods,
                        "comma-separated roster (Standard,Enhanced,StandardAnalytic,"
                        "EnhancedAnalytic,PLN,OraclePLN)");
  bench_cmd->add_option("--zi", bench_opt.zi, "generating variant: nd|cd|rd");
  bench_cmd->add_option("--replicates", bench_opt.replicates, "replicates per cell");
  bench_cmd->add_option("--n", bench_opt.n, "samples per dataset");
  bench_cmd->add_option("--p", bench_opt.p, "variables per dataset");
  bench_cmd->add_option("--d", bench_opt.d, "PLN covariate categories");
  bench_cmd->add_option("--d0", bench_opt.d0, "ZI covariate categories");
  bench_cmd->add_option("--gamma", bench_opt.gamma, "Gaussian mean of B entries");
  bench_cmd->add_option("--rho", bench_opt.rho, "inflation level used off-axis");
  bench_cmd->add_flag("--paper-scale", bench_opt.paper_scale,
                      "n=1000, p=250, 30 replicates (hours-scale)");
  bench_cmd->add_option("--max-iters", bench_opt.max_iters, "per-fit iteration cap");
  bench_cmd->add_option("--jobs", bench_opt.jobs, "worker threads");
  bench_cmd->add_option("--seed", bench_opt.seed, "grid seed");

  CompareOptions cmp_opt;
  auto* cmp_cmd = app.add_subcommand("compare", "tabulate criteria across fitted models");
  cmp_cmd->add_option("fit_dirs", cmp_opt.fit_dirs, "fit output directories")->required();
  cmp_cmd->add_option("--out", cmp_opt.out, "output directory");

  ProjectOptions proj_opt;
  auto* proj_cmd = app.add_subcommand("project", "PCA of the latent means M");
  proj_cmd->add_option("fit_dir", proj_opt.fit_dir, "fit output directory")->required();
  proj_cmd->add_option("-k,--components", proj_opt.k, "number of components");
  proj_cmd->add_option("--out", proj_opt.out, "output directory (default fit_dir/projection)");

  std::string replay_manifest, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a recorded manifest");
  replay_cmd->add_option("manifest", replay_manifest, "manifest.json path")->required();
  replay_cmd->add_option("--out", replay_out, "output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) return run_fit(fit_opt);
    if (*sim_cmd) {
      run_simulate(sim_opt);
      return 0;
    }
    if (*bench_cmd) {
      run_bench(bench_opt);
      return 0;
    }
    if (*cmp_cmd) {
      run_compare(cmp_opt);
      return 0;
    }
    if (*proj_cmd) {
      run_project(proj_opt);
      return 0;
    }
    if (*replay_cmd) return run_replay(replay_manifest, replay_out);
  } catch (const identifiability_error& e) {
    std::cerr << "error: " << e.what()
              << " (the model is identifiable only for full-rank designs)\n";
    return 3;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what();
    if (e.line_number >= 0) std::cerr << " (line " << e.line_number << ")";
    std::cerr << '\n';
    return 4;
  } catch (const write_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const validation_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 6;
  }
  return 0;
}
