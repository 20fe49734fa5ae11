#pragma once

#include <cmath>
#include <nlohmann/json.hpp>
#include <string>

#include "powerctl/kernel.hpp"

namespace powerctl {

enum class Regime { Passive, Active, Interior };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Passive: return "Passive";
    case Regime::Active: return "Active";
    case Regime::Interior: return "Interior";
  }
  return "?";
}

/// Fixed point of the fluid dynamics under constant activation s4.
inline Measure4 equilibrium_measure(double s4, const ModelParams& params) {
  require_two_state(params, "equilibrium_measure");
  if (!(s4 >= 0.0 && s4 <= 1.0)) throw DomainError("s4 outside [0,1]");
  const double b1 = params.beta_good();
  const double b0 = params.beta_bad();
  const double r = params.rho;
  const double d = r + b1 * s4 * (1 - r);
  return {b0 * b1 * (1 - r) * s4 / d, b0 * r / d, b1 * b1 * (1 - r) * s4 / d, b1 * r / d};
}

/// Long-run cost per slot at the fixed point of constant activation s4.
inline double equilibrium_cost(double s4, const ModelParams& params) {
  const Measure4 m = equilibrium_measure(s4, params);
  return params.theta * params.n0 * s4 / (1.0 - params.theta * m[3]) + params.lambda * (m[1] + m[3]);
}

inline double equilibrium_cost_derivative(double s4, const ModelParams& params) {
  require_two_state(params, "equilibrium_cost_derivative");
  const double b1 = params.beta_good();
  const double r = params.rho;
  const double th = params.theta;
  const double power_num = 2 * b1 * r * s4 * (1 - r) * (1 - th * b1) + r * r * (1 - th * b1) +
                           s4 * s4 * b1 * b1 * (1 - r) * (1 - r);
  const double power_den = r + b1 * s4 * (1 - r) - th * b1 * r;
  const double queue_den = r + b1 * s4 * (1 - r);
  return th * params.n0 * power_num / (power_den * power_den) -
         params.lambda * r * b1 * (1 - r) / (queue_den * queue_den);
}

/// Largest noise level for which the equilibrium cost is convex in s4.
inline double convexity_bound(const ModelParams& params) {
  require_two_state(params, "convexity_bound");
  const double slack = 1.0 - params.beta_good() * params.theta;
  return params.lambda * (1 - params.rho) * slack * slack / (params.rho * params.theta * params.theta);
}

inline bool convexity_holds(const ModelParams& params) { return params.n0 <= convexity_bound(params); }

struct RegimeConstants {
  /// At or above this noise level staying silent is optimal.
  double n0_0 = 0.0;
  /// At or below this noise level transmitting always is optimal.
  double n0_1 = 0.0;
};

namespace detail {

inline RegimeConstants regime_constants(const ModelParams& params) {
  const double b1 = params.beta_good();
  const double r = params.rho;
  const double th = params.theta;
  const double lam = params.lambda;
  RegimeConstants c;
  c.n0_0 = lam * b1 * (1 - r) * (1 - th * b1) / (r * th);
  const double lead = r + b1 - b1 * r * (1 + th);
  const double full = b1 + r - b1 * r;
  const double num = lam * b1 * (1 - r) * r * lead * lead / (full * full);
  const double den = th * (2 * b1 * (1 - r) * r * (1 - th * b1) + r * r * (1 - th * b1) +
                           b1 * b1 * (1 - r) * (1 - r));
  c.n0_1 = num / den;
  return c;
}

}  // namespace detail

inline RegimeConstants n0_thresholds(const ModelParams& params) {
  require_two_state(params, "n0_thresholds");
  const RegimeConstants c = detail::regime_constants(params);
  if (!(c.n0_1 < c.n0_0))
    throw DegenerateRegime("regime constants out of order: n0_1=" + std::to_string(c.n0_1) +
                           " >= n0_0=" + std::to_string(c.n0_0));
  return c;
}

/// Noise level at which an interior equilibrium with occupancy m4 of
/// (GOOD,1) is optimal.
inline double n0_from_m4(double m4, const ModelParams& params) {
  require_two_state(params, "n0_from_m4");
  const double b1 = params.beta_good();
  const double th = params.theta;
  if (!(m4 > 0.0 && m4 <= b1)) throw DomainError("m4 outside (0, beta_1]");
  const double den = th * params.rho * (th * m4 * (m4 - 2 * b1) + b1);
  if (!(den > 0.0)) throw DomainError("n0_from_m4 denominator is not positive");
  const double slack = 1.0 - th * m4;
  return params.lambda * (1 - params.rho) * m4 * m4 * slack * slack / den;
}

struct EquilibriumReport {
  Regime regime = Regime::Passive;
  double s4_star = 0.0;
  Measure4 m_star{};
  double E_star = 0.0;
  double n0_0 = 0.0;
  double n0_1 = 0.0;
  bool convexity_ok = false;
  double convexity_bound = 0.0;
};

inline constexpr double kRootTol = 1e-12;

/// Average-optimal constant activation and its equilibrium.
///
/// Out-of-order regime constants only occur with the convexity bound below
/// n0_1, so any noise level that passes the convexity check is Active there.
inline EquilibriumReport optimal_equilibrium(const ModelParams& params) {
  require_two_state(params, "optimal_equilibrium");
  EquilibriumReport rep;
  rep.convexity_bound = convexity_bound(params);
  rep.convexity_ok = params.n0 <= rep.convexity_bound;
  if (!rep.convexity_ok)
    throw ConvexityUnverified("N0=" + std::to_string(params.n0) + " exceeds the convexity bound " +
                              std::to_string(rep.convexity_bound));
  const RegimeConstants c = detail::regime_constants(params);
  rep.n0_0 = c.n0_0;
  rep.n0_1 = c.n0_1;
  if (params.n0 >= c.n0_0) {
    rep.regime = Regime::Passive;
    rep.s4_star = 0.0;
  } else if (params.n0 <= c.n0_1) {
    rep.regime = Regime::Active;
    rep.s4_star = 1.0;
  } else {
    rep.regime = Regime::Interior;
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > kRootTol) {
      const double mid = 0.5 * (lo + hi);
      if (equilibrium_cost_derivative(mid, params) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    rep.s4_star = 0.5 * (lo + hi);
  }
  rep.m_star = equilibrium_measure(rep.s4_star, params);
  rep.E_star = equilibrium_cost(rep.s4_star, params);
  return rep;
}

inline void to_json(nlohmann::json& j, const EquilibriumReport& r) {
  j = nlohmann::json{{"regime", to_string(r.regime)},
                     {"s4_star", r.s4_star},
                     {"m_star", r.m_star},
                     {"E_star", r.E_star},
                     {"n0_0", r.n0_0},
                     {"n0_1", r.n0_1},
                     {"convexity_ok", r.convexity_ok},
                     {"convexity_bound", r.convexity_bound}};
}

}  // namespace powerctl
