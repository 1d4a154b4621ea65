#include "zipln/selection.hpp"

#include <cmath>
#include <sstream>

#include "zipln/csv.hpp"

namespace zipln {

long param_count(const ZIConfig& config, Index n, Index p, Index d, Index d0) {
  if (n <= 0 || p <= 0 || d < 0) throw validation_error("param_count: sizes must be positive");
  long K = long(p) * (long(p) + 1) / 2 + long(p) * long(d);
  switch (config.kind) {
    case ZiKind::nd: K += 1; break;
    case ZiKind::cd: K += long(p) * long(d0); break;
    case ZiKind::rd: K += long(n) * long(d0); break;
    case ZiKind::none: break;
  }
  return K;
}

CriteriaRow criteria(const FitResult& fit, const CountDataset& data, const FitConfig& config,
                     const std::string& name) {
  CriteriaRow row;
  row.name = name;
  row.variant = to_string(config.variant);
  row.zi = to_string(config.zi.kind);
  row.n = data.n();
  row.p = data.p();
  row.elbo = fit.elbo_trace.back();
  row.K = param_count(config.zi, data.n(), data.p(), data.d(), data.d0());
  row.aic = row.elbo - double(row.K);
  row.bic = row.elbo - 0.5 * double(row.K) * std::log(double(data.n()));
  row.icl = row.bic - entropy(config.variant, fit.theta, fit.psi);
  row.converged = fit.converged;
  row.n_iters = fit.n_iters;
  row.semi_parametric = config.zi.kind == ZiKind::rd;
  return row;
}

CriteriaReport compare_models(const std::vector<CriteriaRow>& rows) {
  if (rows.empty()) throw validation_error("compare_models: no rows");
  for (const auto& r : rows)
    if (r.n != rows.front().n || r.p != rows.front().p)
      throw validation_error("compare_models: rows come from different datasets");

  CriteriaReport rep;
  rep.rows = rows;
  auto better = [&](double a_val, int a, double b_val, int b) {
    if (a_val != b_val) return a_val > b_val;
    if (rep.rows[a].K != rep.rows[b].K) return rep.rows[a].K < rep.rows[b].K;
    return rep.rows[a].name < rep.rows[b].name;
  };
  auto argmax = [&](auto field) {
    int best = 0;
    for (int i = 1; i < int(rep.rows.size()); ++i)
      if (better(field(rep.rows[i]), i, field(rep.rows[best]), best)) best = i;
    return best;
  };
  rep.best_aic = argmax([](const CriteriaRow& r) { return r.aic; });
  rep.best_bic = argmax([](const CriteriaRow& r) { return r.bic; });
  rep.best_icl = argmax([](const CriteriaRow& r) { return r.icl; });
  return rep;
}

std::string CriteriaReport::to_csv() const {
  std::ostringstream os;
  os << "name,variant,zi,n,p,K,elbo,AIC,BIC,ICL,converged,n_iters,best_AIC,best_BIC,best_ICL,"
        "semi_parametric\n";
  for (int i = 0; i < int(rows.size()); ++i) {
    const auto& r = rows[i];
    os << r.name << ',' << r.variant << ',' << r.zi << ',' << r.n << ',' << r.p << ',' << r.K
       << ',' << format_g17(r.elbo) << ',' << format_g17(r.aic) << ',' << format_g17(r.bic)
       << ',' << format_g17(r.icl) << ',' << (r.converged ? 1 : 0) << ',' << r.n_iters << ','
       << (i == best_aic ? 1 : 0) << ',' << (i == best_bic ? 1 : 0) << ','
       << (i == best_icl ? 1 : 0) << ',' << (r.semi_parametric ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string CriteriaReport::to_text() const {
  std::ostringstream os;
  os << "model selection criteria (higher is better; * marks the best)\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %-18s %-5s %10s %14s %14s %14s %14s\n", "name", "variant",
                "zi", "K", "elbo", "AIC", "BIC", "ICL");
  os << buf;
  for (int i = 0; i < int(rows.size()); ++i) {
    const auto& r = rows[i];
    std::snprintf(buf, sizeof buf, "%-16s %-18s %-5s %10ld %14.2f %13.2f%s %13.2f%s %13.2f%s%s\n",
                  r.name.c_str(), r.variant.c_str(), r.zi.c_str(), r.K, r.elbo, r.aic,
                  i == best_aic ? "*" : " ", r.bic, i == best_bic ? "*" : " ", r.icl,
                  i == best_icl ? "*" : " ", r.semi_parametric ? "  [semi-parametric]" : "");
    os << buf;
  }
  return os.str();
}

}  // namespace zipln
