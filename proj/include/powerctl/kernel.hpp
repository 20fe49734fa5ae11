#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <span>
#include <vector>

#include "powerctl/model.hpp"

namespace powerctl {

/// Next-slot queue distribution for a user holding `queue` packets, given
/// whether its transmission succeeded. Overflow at q_max is dropped.
inline std::vector<double> queue_kernel(int queue, bool success, double rho, int q_max) {
  if (queue < 0 || queue > q_max) throw OutOfRange("queue length out of range");
  std::vector<double> next(static_cast<std::size_t>(q_max + 1), 0.0);
  const int served = success ? std::max(queue - 1, 0) : queue;
  next[static_cast<std::size_t>(served)] += 1.0 - rho;
  next[static_cast<std::size_t>(std::min(served + 1, q_max))] += rho;
  return next;
}

/// Per-class one-slot transition tables: gamma0 after a failed (or absent)
/// transmission, gamma1 after a successful one. Rows index the current state.
struct KernelTables {
  Eigen::MatrixXd gamma0;
  Eigen::MatrixXd gamma1;
  ChannelModel channel_model = ChannelModel::IID;

  const Eigen::MatrixXd& gamma(int success) const { return success ? gamma1 : gamma0; }
  Eigen::Index size() const { return gamma0.rows(); }
};

inline KernelTables build_tables(const ModelParams& params, ChannelModel model = ChannelModel::IID) {
  if (model == ChannelModel::Markov && params.markov.empty())
    throw WrongDimensions("Markov channel tables requested but no Markov matrix given");
  const auto n = static_cast<Eigen::Index>(params.num_states());
  KernelTables tables{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), model};
  for (Eigen::Index i = 0; i < n; ++i) {
    const StateIndex from = state_from_flat(static_cast<int>(i) + 1, params);
    for (int success = 0; success <= 1; ++success) {
      const auto queue = queue_kernel(from.queue_len, success == 1, params.rho, params.q_max);
      Eigen::MatrixXd& table = success ? tables.gamma1 : tables.gamma0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const StateIndex to = state_from_flat(static_cast<int>(j) + 1, params);
        table(i, j) = params.channel_transition(model, static_cast<std::size_t>(from.channel_level),
                                                static_cast<std::size_t>(to.channel_level)) *
                      queue[static_cast<std::size_t>(to.queue_len)];
      }
    }
  }
  return tables;
}

/// Generator of the fluid dynamics, dm/dt = U m. Columns sum to zero.
struct DriftMatrix {
  Eigen::MatrixXd u;
};

/// U built from the tables and the per-class success fractions g.
inline DriftMatrix drift_matrix(std::span<const double> g, const KernelTables& tables) {
  const Eigen::Index n = tables.size();
  if (static_cast<Eigen::Index>(g.size()) != n) throw WrongDimensions("success fractions length");
  Eigen::MatrixXd nu(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gi = g[static_cast<std::size_t>(i)];
    if (!(gi >= 0.0 && gi <= 1.0)) throw DomainError("success fraction outside [0,1]");
    nu.row(i) = gi * tables.gamma1.row(i) + (1.0 - gi) * tables.gamma0.row(i);
  }
  DriftMatrix d{Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double out = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == i) continue;
      out += nu(i, r);
      d.u(r, i) = nu(i, r);
    }
    d.u(i, i) = -out;
  }
  return d;
}

inline DriftMatrix drift_matrix(std::span<const double> g, const ModelParams& params,
                                ChannelModel model = ChannelModel::IID) {
  return drift_matrix(g, build_tables(params, model));
}

/// The GOOD/BAD single-packet generator written out entry by entry.
inline DriftMatrix drift_matrix_4state(double s4, const ModelParams& params) {
  require_two_state(params, "drift_matrix_4state");
  const double b1 = params.beta_good();
  const double b0 = params.beta_bad();
  const double r = params.rho;
  DriftMatrix d{Eigen::MatrixXd(4, 4)};
  d.u << -b1 - b0 * r, 0.0, b0 * (1 - r), s4 * b0 * (1 - r),
         b0 * r, -b1, b0 * r, s4 * b0 * r + (1 - s4) * b0,
         b1 * (1 - r), 0.0, -b1 * r - b0, s4 * b1 * (1 - r),
         b1 * r, b1, b1 * r, -s4 * b1 * (1 - r) - b0;
  return d;
}

/// Rate of change of each class under activation `a` of state 4. Affine in
/// `a`, so fractional controls in [0,1] are accepted.
inline Measure4 drift_vector(const Measure4& m, double a, const ModelParams& params) {
  require_two_state(params, "drift_vector");
  const double b1 = params.beta_good();
  const double b0 = params.beta_bad();
  const double r = params.rho;
  return {-(b1 + b0 * r) * m[0] + b0 * (1 - r) * m[2] + a * b0 * (1 - r) * m[3],
          b0 * r * m[0] - b1 * m[1] + b0 * r * m[2] + (r * a + (1 - a)) * b0 * m[3],
          b1 * (1 - r) * m[0] - (b1 * r + b0) * m[2] + a * b1 * (1 - r) * m[3],
          b1 * r * m[0] + b1 * m[1] + b1 * r * m[2] - (b1 * a * (1 - r) + b0) * m[3]};
}

}  // namespace powerctl
