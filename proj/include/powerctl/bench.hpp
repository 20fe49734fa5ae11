#pragma once

#include <cmath>
#include <future>
#include <ostream>
#include <vector>

#include "powerctl/finite.hpp"
#include "powerctl/io.hpp"
#include "powerctl/threshold.hpp"

namespace powerctl {

/// Threshold policy cost against the finite-N optimum at one arrival rate.
struct BenchRow {
  double rho = 0.0;
  double g_mf = 0.0;
  double g_vi = 0.0;
  double rel_err_pct = 0.0;
  double abs_err_pct = 0.0;
};

inline BenchRow compare_point(const ModelParams& params, int users, double vi_tol = 1e-9) {
  const FiniteMdp mdp(params, users);
  BenchRow row;
  row.rho = params.rho;
  row.g_vi = relative_value_iteration(mdp, VIOptions{vi_tol}).g;
  row.g_mf = evaluate_policy_exact(finite_policy(make_policy(params)), mdp).g;
  const double gap = std::abs(row.g_mf - row.g_vi);
  row.rel_err_pct = gap * 100.0 / row.g_mf;
  row.abs_err_pct = gap * 100.0;
  return row;
}

/// One row per arrival rate, evaluated concurrently, returned in input order.
inline std::vector<BenchRow> compare_sweep(const ModelParams& params, int users, const std::vector<double>& rhos,
                                           double vi_tol = 1e-9) {
  std::vector<std::future<BenchRow>> jobs;
  for (double r : rhos) {
    ModelParams p = params;
    p.rho = r;
    jobs.push_back(std::async(std::launch::async, [p = validate_params(p), users, vi_tol] {
      return compare_point(p, users, vi_tol);
    }));
  }
  std::vector<BenchRow> rows;
  for (auto& j : jobs) rows.push_back(j.get());
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "rho,g_mf,g_vi,rel_err_pct,abs_err_pct\n";
  for (const auto& r : rows)
    os << fmt12(r.rho) << ',' << fmt12(r.g_mf) << ',' << fmt12(r.g_vi) << ',' << fmt12(r.rel_err_pct) << ','
       << fmt12(r.abs_err_pct) << '\n';
}

}  // namespace powerctl
