#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "powerctl/io.hpp"
#include "powerctl/kernel.hpp"

namespace powerctl {

/// One slot of the mean-field recursion m' = (I + U(s4)) m.
inline Measure4 discrete_step(const Measure4& m, double s4, const ModelParams& params) {
  const Measure4 d = drift_vector(m, s4, params);
  return {m[0] + d[0], m[1] + d[1], m[2] + d[2], m[3] + d[3]};
}

/// General form: per-class success fractions g on arbitrary tables.
inline Measure discrete_step(const Measure& m, std::span<const double> g, const KernelTables& tables) {
  const DriftMatrix drift = drift_matrix(g, tables);
  const Eigen::Map<const Eigen::VectorXd> v(m.values().data(), static_cast<Eigen::Index>(m.size()));
  const Eigen::VectorXd next = v + drift.u * v;
  return Measure(std::vector<double>(next.data(), next.data() + next.size()));
}

/// Power plus queue cost per unit time at state m under activation s4.
inline double instantaneous_cost(const Measure4& m, double s4, const ModelParams& params) {
  return params.theta * params.n0 * s4 / (1.0 - params.theta * m[3] * s4) +
         params.lambda * (m[1] + m[3]);
}

/// Time-shared cost of activating a fraction s4 of class 4 at the full
/// power level; equals the instantaneous cost at s4 in {0, 1}.
inline double relaxed_cost(const Measure4& m, double s4, const ModelParams& params) {
  return params.theta * params.n0 * s4 / (1.0 - params.theta * m[3]) + params.lambda * (m[1] + m[3]);
}

/// Feedback for the (GOOD,1) activation: a constant s4, or the threshold
/// rule s4 = 0 iff m4 <= threshold.
struct FeedbackLaw {
  enum class Kind { Constant, Threshold };
  Kind kind = Kind::Constant;
  double value = 0.0;

  static FeedbackLaw constant(double s4) {
    if (!(s4 >= 0.0 && s4 <= 1.0)) throw DomainError("constant control outside [0,1]");
    return {Kind::Constant, s4};
  }
  static FeedbackLaw threshold(double pi) {
    if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("threshold outside [0,1]");
    return {Kind::Threshold, pi};
  }

  double operator()(const Measure4& m) const {
    if (kind == Kind::Constant) return value;
    return m[3] <= value ? 0.0 : 1.0;
  }
};

struct TrajectorySample {
  double t = 0.0;
  Measure4 m{};
  double s4 = 0.0;
  double inst_cost = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  /// Integral of (inst_cost - cost_offset) over the run.
  double cost_integral = 0.0;
};

inline void write_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,m1,m2,m3,m4,s4,inst_cost\n";
  for (const auto& s : tr.samples) {
    os << fmt12(s.t);
    for (double x : s.m) os << ',' << fmt12(x);
    os << ',' << fmt12(s.s4) << ',' << fmt12(s.inst_cost) << '\n';
  }
}

struct IntegratorOptions {
  double dt = 0.01;
  /// Width of the bisection bracket around a located switching time.
  double event_tol = 1e-10;
  double simplex_tol = 1e-7;
  /// Subtracted from the instantaneous cost in the running integral.
  double cost_offset = 0.0;
};

namespace detail {

/// Active region of a threshold law. On the switching surface with the two
/// vector fields pointing at each other the state slides along m4 = pi under
/// the equivalent control that zeroes dm4/dt, and the running cost is the
/// matching time share of the passive and active costs.
enum class Mode { Passive, Active, Sliding, Fixed };

struct FluidState {
  Measure4 m{};
  double cost = 0.0;
};

class ClosedLoop {
 public:
  static constexpr double kSurfaceTol = 1e-12;

  ClosedLoop(const ModelParams& params, const FeedbackLaw& law, const IntegratorOptions& opt)
      : params_(params), law_(law), opt_(opt) {}

  Mode classify(const Measure4& m) const {
    if (law_.kind == FeedbackLaw::Kind::Constant) return Mode::Fixed;
    const double pi = law_.value;
    if (m[3] > pi + kSurfaceTol) return Mode::Active;
    if (m[3] < pi - kSurfaceTol) return Mode::Passive;
    if (rate4(m, 0.0) <= 0.0) return Mode::Passive;
    if (rate4(m, 1.0) < 0.0) return Mode::Sliding;
    return Mode::Active;
  }

  double control(const Measure4& m, Mode mode) const {
    switch (mode) {
      case Mode::Passive: return 0.0;
      case Mode::Active: return 1.0;
      case Mode::Fixed: return law_.value;
      case Mode::Sliding: {
        const double f0 = rate4(m, 0.0);
        const double f1 = rate4(m, 1.0);
        return std::clamp(f0 / (f0 - f1), 0.0, 1.0);
      }
    }
    return 0.0;
  }

  double control(const Measure4& m) const { return control(m, classify(m)); }

  double running_cost(const Measure4& m, Mode mode) const {
    const double s = control(m, mode);
    return mode == Mode::Sliding ? relaxed_cost(m, s, params_) : instantaneous_cost(m, s, params_);
  }

  double running_cost(const Measure4& m) const { return running_cost(m, classify(m)); }

  /// Advances `x` by at most `h`, stopping at the first switching event.
  /// Returns the time advanced.
  double advance(FluidState& x, double h) const {
    const Mode mode = classify(x.m);
    FluidState y = rk4(x, h, mode);
    if (!leaves(y.m, mode)) {
      if (mode == Mode::Sliding) snap(y.m);
      x = y;
      return h;
    }
    double lo = 0.0;
    double hi = h;
    while (hi - lo > opt_.event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (leaves(rk4(x, mid, mode).m, mode))
        hi = mid;
      else
        lo = mid;
    }
    y = rk4(x, hi, mode);
    if (mode != Mode::Sliding) snap(y.m);
    x = y;
    return hi;
  }

 private:
  double rate4(const Measure4& m, double a) const {
    const double b1 = params_.beta_good();
    const double r = params_.rho;
    return b1 * r * m[0] + b1 * m[1] + b1 * r * m[2] - (b1 * a * (1 - r) + params_.beta_bad()) * m[3];
  }

  bool leaves(const Measure4& m, Mode mode) const {
    const double pi = law_.value;
    switch (mode) {
      case Mode::Passive: return m[3] > pi + kSurfaceTol;
      case Mode::Active: return m[3] < pi - kSurfaceTol;
      case Mode::Sliding: return rate4(m, 0.0) <= 0.0 || rate4(m, 1.0) >= 0.0;
      case Mode::Fixed: return false;
    }
    return false;
  }

  /// Moves m4 onto the surface, keeping the total mass.
  void snap(Measure4& m) const {
    m[1] += m[3] - law_.value;
    m[3] = law_.value;
  }

  FluidState derivative(const FluidState& x, Mode mode) const {
    const Measure4 d = drift_vector(x.m, control(x.m, mode), params_);
    return {d, running_cost(x.m, mode) - opt_.cost_offset};
  }

  static FluidState axpy(const FluidState& x, double h, const FluidState& k) {
    FluidState out = x;
    for (std::size_t i = 0; i < 4; ++i) out.m[i] += h * k.m[i];
    out.cost += h * k.cost;
    return out;
  }

  FluidState rk4(const FluidState& x, double h, Mode mode) const {
    const FluidState k1 = derivative(x, mode);
    const FluidState k2 = derivative(axpy(x, 0.5 * h, k1), mode);
    const FluidState k3 = derivative(axpy(x, 0.5 * h, k2), mode);
    const FluidState k4 = derivative(axpy(x, h, k3), mode);
    FluidState out = x;
    for (std::size_t i = 0; i < 4; ++i)
      out.m[i] += h / 6.0 * (k1.m[i] + 2.0 * k2.m[i] + 2.0 * k3.m[i] + k4.m[i]);
    out.cost += h / 6.0 * (k1.cost + 2.0 * k2.cost + 2.0 * k3.cost + k4.cost);
    return out;
  }

  ModelParams params_;
  FeedbackLaw law_;
  IntegratorOptions opt_;
};

inline void check_simplex(const Measure4& m, double tol, double t) {
  double sum = 0.0;
  double lowest = 1.0;
  for (double x : m) {
    sum += x;
    lowest = std::min(lowest, x);
  }
  if (!(std::abs(sum - 1.0) <= tol) || lowest < -1e-9)
    throw StepTooLarge("fluid state left the simplex at t=" + std::to_string(t) +
                       " (sum " + std::to_string(sum) + ", min " + std::to_string(lowest) + ")");
}

/// Runs the closed loop on the grid t_n = n*dt, splitting steps at switching
/// events. `visit(t, state, s4, cost)` is called at t=0 and after every step; a
/// true return stops the run. Returns the final time.
inline double run_closed_loop(FluidState& x, const FeedbackLaw& law, double horizon,
                              const ModelParams& params, const IntegratorOptions& opt,
                              const std::function<bool(double, const FluidState&, double, double)>& visit) {
  require_two_state(params, "fluid integration");
  if (!(opt.dt > 0.0)) throw DomainError("integration step dt must be > 0");
  if (!(horizon >= 0.0)) throw DomainError("horizon must be >= 0");
  const ClosedLoop loop(params, law, opt);
  double t = 0.0;
  if (visit(t, x, loop.control(x.m), loop.running_cost(x.m))) return t;
  int stalled = 0;
  for (long n = 1; t < horizon; ++n) {
    const double target = std::min(static_cast<double>(n) * opt.dt, horizon);
    while (t < target) {
      const double taken = loop.advance(x, target - t);
      t = (target - t - taken) <= 1e-15 * std::max(1.0, target) ? target : t + taken;
      check_simplex(x.m, opt.simplex_tol, t);
      stalled = taken < 1e-13 ? stalled + 1 : 0;
      if (stalled > 1000)
        throw NonConvergent("switching chatter at t=" + std::to_string(t) +
                            ": no progress between events");
      if (visit(t, x, loop.control(x.m), loop.running_cost(x.m))) return t;
    }
  }
  return t;
}

}  // namespace detail

/// RK4 integration of dm/dt = U(s4(m)) m with switching times located by
/// bisection. Samples land on the dt grid plus every switching event.
inline Trajectory integrate(const Measure4& m0, const FeedbackLaw& law, double horizon,
                            const ModelParams& params, const IntegratorOptions& opt = {}) {
  Trajectory tr;
  detail::FluidState x{m0, 0.0};
  detail::run_closed_loop(x, law, horizon, params, opt,
                          [&](double t, const detail::FluidState& s, double s4, double cost) {
                            if (tr.samples.empty() || t > tr.samples.back().t)
                              tr.samples.push_back({t, s.m, s4, cost});
                            return false;
                          });
  tr.cost_integral = x.cost;
  return tr;
}

/// Closed-form solution of the passive (s4 = 0) dynamics at time t.
inline Measure4 passive_trajectory_closed_form(const Measure4& m0, double t, const ModelParams& params) {
  require_two_state(params, "passive_trajectory_closed_form");
  const double b1 = params.beta_good();
  const double b0 = params.beta_bad();
  const double fast = std::exp(-t);
  const double slow = std::exp(-params.rho * t);
  const double empty = m0[0] + m0[2];
  Measure4 m;
  m[0] = (b1 * m0[0] - b0 * m0[2]) * fast + b0 * empty * slow;
  m[2] = (b0 * m0[2] - b1 * m0[0]) * fast + b1 * empty * slow;
  m[3] = b1 * (1.0 + fast * (empty - 1.0)) + fast * m0[3] - empty * b1 * slow;
  m[1] = 1.0 - m[0] - m[2] - m[3];
  return m;
}

struct BiasTarget {
  Measure4 m_star{};
  double e_star = 0.0;
};

struct BiasOptions {
  double dt = 0.01;
  double state_tol = 1e-9;
  double cost_tol = 1e-10;
  double t_max = 1e5;
};

/// Integral over [0, inf) of (cost - E*) along the closed loop, stopped once
/// the state and cost have settled at the target equilibrium.
inline double bias_cost(const Measure4& m0, const FeedbackLaw& law, const BiasTarget& target,
                        const ModelParams& params, const BiasOptions& opt = {}) {
  IntegratorOptions iopt;
  iopt.dt = opt.dt;
  iopt.cost_offset = target.e_star;
  detail::FluidState x{m0, 0.0};
  bool settled = false;
  detail::run_closed_loop(x, law, opt.t_max, params, iopt,
                          [&](double, const detail::FluidState& s, double, double cost) {
                            double dist = 0.0;
                            for (std::size_t i = 0; i < 4; ++i) dist += std::abs(s.m[i] - target.m_star[i]);
                            settled = dist < opt.state_tol &&
                                      std::abs(cost - target.e_star) <
                                          opt.cost_tol;
                            return settled;
                          });
  if (!settled)
    throw NonConvergent("bias integral did not settle before t_max=" + std::to_string(opt.t_max));
  return x.cost;
}

/// Integral over [0, horizon] of (cost - reference) along the closed loop.
inline double horizon_cost(const Measure4& m0, const FeedbackLaw& law, double reference, double horizon,
                           const ModelParams& params, double dt = 0.01) {
  IntegratorOptions iopt;
  iopt.dt = dt;
  iopt.cost_offset = reference;
  detail::FluidState x{m0, 0.0};
  detail::run_closed_loop(x, law, horizon, params, iopt,
                          [](double, const detail::FluidState&, double, double) { return false; });
  return x.cost;
}

}  // namespace powerctl
