#pragma once

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <vector>

#include "powerctl/equilibrium.hpp"
#include "powerctl/finite.hpp"
#include "powerctl/fluid.hpp"

namespace powerctl {

/// Which boundary threshold goes with which boundary regime.
///  - EquilibriumMatched: the threshold equals m4 of the optimal equilibrium.
///  - Swapped: silent regime gets the always-transmit threshold and vice versa.
enum class Pairing { EquilibriumMatched, Swapped };

inline const char* to_string(Pairing p) {
  return p == Pairing::EquilibriumMatched ? "EquilibriumMatched" : "Swapped";
}

struct ThresholdPolicy {
  double pi = 0.0;
  Regime regime = Regime::Passive;
  Pairing pairing = Pairing::EquilibriumMatched;

  FeedbackLaw fluid_law() const { return FeedbackLaw::threshold(pi); }

  /// Fluid rule: s4 = 0 iff m4 <= pi.
  int apply(const Measure4& m) const { return m[3] <= pi ? 0 : 1; }

  /// Finite rule: all n4 (GOOD,1) users transmit iff n4/N > pi.
  int apply(const AggregateState& s) const {
    const double m4 = static_cast<double>(s[3]) / static_cast<double>(s.total());
    return m4 > pi ? s[3] : 0;
  }
};

/// m4 at the silent equilibrium.
inline double passive_threshold(const ModelParams& params) { return params.beta_good(); }

/// m4 at the always-transmit equilibrium.
inline double active_threshold(const ModelParams& params) {
  const double b1 = params.beta_good();
  const double r = params.rho;
  return b1 * r / (r + b1 * (1 - r));
}

inline ThresholdPolicy make_policy(const EquilibriumReport& rep, const ModelParams& params,
                                   Pairing pairing = Pairing::EquilibriumMatched) {
  ThresholdPolicy policy{0.0, rep.regime, pairing};
  const bool matched = pairing == Pairing::EquilibriumMatched;
  switch (rep.regime) {
    case Regime::Interior: policy.pi = rep.m_star[3]; break;
    case Regime::Passive: policy.pi = matched ? passive_threshold(params) : active_threshold(params); break;
    case Regime::Active: policy.pi = matched ? active_threshold(params) : passive_threshold(params); break;
  }
  return policy;
}

inline ThresholdPolicy make_policy(const ModelParams& params, Pairing pairing = Pairing::EquilibriumMatched) {
  return make_policy(optimal_equilibrium(params), params, pairing);
}

inline FinitePolicy finite_policy(const ThresholdPolicy& policy) {
  return [policy](const AggregateState& s) { return policy.apply(s); };
}

struct BiasCheckOptions {
  /// Costs are compared as integrals of (cost - E*) over [0, horizon].
  double horizon = 1000.0;
  double dt = 0.01;
  /// Costs closer than this count as equal; ties go to the threshold nearest pi.
  double tie_tol = 1e-9;
};

struct BiasStartResult {
  Measure4 m0{};
  std::vector<double> costs;
  double argmin = 0.0;
};

struct PairingVerdict {
  bool applicable = false;
  double matched_pi = 0.0;
  double swapped_pi = 0.0;
  double matched_cost = 0.0;
  double swapped_cost = 0.0;
  Pairing winner = Pairing::EquilibriumMatched;
};

struct BiasCheckReport {
  Regime regime = Regime::Passive;
  double pi = 0.0;
  double e_star = 0.0;
  double grid_step = 0.0;
  double horizon = 0.0;
  std::vector<double> thresholds;
  std::vector<BiasStartResult> starts;
  bool pass = false;
  PairingVerdict pairing;
};

/// Grid search over thresholds {0, step, ..., beta_1 + step}: for every start
/// the threshold minimising the transient cost must lie within one step of
/// the policy's pi. In boundary regimes also compares the two pairings.
inline BiasCheckReport bias_optimality_check(const ModelParams& params, const std::vector<Measure4>& starts,
                                             double grid_step, const BiasCheckOptions& opt = {}) {
  if (!(grid_step > 0.0)) throw DomainError("grid step must be > 0");
  if (starts.empty()) throw DomainError("at least one start is required");
  const EquilibriumReport eq = optimal_equilibrium(params);
  const ThresholdPolicy policy = make_policy(eq, params);

  BiasCheckReport rep;
  rep.regime = eq.regime;
  rep.pi = policy.pi;
  rep.e_star = eq.E_star;
  rep.grid_step = grid_step;
  rep.horizon = opt.horizon;
  const double top = params.beta_good() + grid_step;
  const auto count = static_cast<long>(std::floor(top / grid_step + 1e-9));
  for (long i = 0; i <= count; ++i) rep.thresholds.push_back(std::min(1.0, static_cast<double>(i) * grid_step));

  rep.pass = true;
  for (const Measure4& m0 : starts) {
    BiasStartResult r{m0, {}, 0.0};
    double best = std::numeric_limits<double>::infinity();
    for (double th : rep.thresholds) {
      r.costs.push_back(horizon_cost(m0, FeedbackLaw::threshold(th), eq.E_star, opt.horizon, params, opt.dt));
      best = std::min(best, r.costs.back());
    }
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.thresholds.size(); ++i) {
      const double gap = std::abs(rep.thresholds[i] - policy.pi);
      if (r.costs[i] <= best + opt.tie_tol && gap < nearest) {
        nearest = gap;
        r.argmin = rep.thresholds[i];
      }
    }
    rep.pass = rep.pass && std::abs(r.argmin - policy.pi) <= grid_step * (1 + 1e-9);
    rep.starts.push_back(std::move(r));
  }

  if (eq.regime != Regime::Interior) {
    PairingVerdict& v = rep.pairing;
    v.applicable = true;
    v.matched_pi = policy.pi;
    v.swapped_pi = make_policy(eq, params, Pairing::Swapped).pi;
    for (const Measure4& m0 : starts) {
      v.matched_cost += horizon_cost(m0, FeedbackLaw::threshold(v.matched_pi), eq.E_star, opt.horizon, params, opt.dt);
      v.swapped_cost += horizon_cost(m0, FeedbackLaw::threshold(v.swapped_pi), eq.E_star, opt.horizon, params, opt.dt);
    }
    v.winner = v.swapped_cost < v.matched_cost - opt.tie_tol ? Pairing::Swapped : Pairing::EquilibriumMatched;
  }
  return rep;
}

inline void to_json(nlohmann::json& j, const ThresholdPolicy& p) {
  j = nlohmann::json{{"pi", p.pi}, {"regime", to_string(p.regime)}, {"pairing", to_string(p.pairing)}};
}

inline void to_json(nlohmann::json& j, const BiasCheckReport& r) {
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : r.starts) starts.push_back({{"m0", s.m0}, {"costs", s.costs}, {"argmin", s.argmin}});
  j = nlohmann::json{{"regime", to_string(r.regime)},
                     {"pi", r.pi},
                     {"E_star", r.e_star},
                     {"grid_step", r.grid_step},
                     {"horizon", r.horizon},
                     {"thresholds", r.thresholds},
                     {"starts", starts},
                     {"pass", r.pass}};
  if (r.pairing.applicable)
    j["pairing"] = {{"matched_pi", r.pairing.matched_pi},
                    {"swapped_pi", r.pairing.swapped_pi},
                    {"matched_cost", r.pairing.matched_cost},
                    {"swapped_cost", r.pairing.swapped_cost},
                    {"winner", to_string(r.pairing.winner)}};
  else
    j["pairing"] = nullptr;
}

}  // namespace powerctl
