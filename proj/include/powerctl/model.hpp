#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "powerctl/errors.hpp"

namespace powerctl {

enum class ChannelModel { IID, Markov };

/// Physical and statistical constants of the network.
///
/// Channel levels are indexed 0..K-1 in ascending gain order. A user's
/// per-slot state is (channel level, queue length); see StateIndex for the
/// flat numbering.
struct ModelParams {
  std::vector<double> gains{0.0, 1.0};
  /// i.i.d. channel law, one probability per level.
  std::vector<double> beta{0.6, 0.4};
  /// Markov channel law, markov[from][to]. Empty when only the i.i.d. law is used.
  std::vector<std::vector<double>> markov;
  double rho = 0.1;     ///< arrival probability per slot
  double theta = 0.2;   ///< SINR target
  double n0 = 1.0;      ///< noise power
  double lambda = 1.5;  ///< cost per queued packet per slot
  double p_max = 10.0;
  int q_max = 1;

  std::size_t channel_levels() const noexcept { return gains.size(); }
  std::size_t num_states() const noexcept {
    return gains.size() * static_cast<std::size_t>(q_max + 1);
  }
  bool is_two_state() const noexcept { return gains.size() == 2 && q_max == 1; }
  double beta_good() const { return beta.at(1); }
  double beta_bad() const { return beta.at(0); }

  /// Probability that a user at channel level `from` is at level `to` next slot.
  double channel_transition(ChannelModel model, std::size_t from, std::size_t to) const {
    return model == ChannelModel::IID ? beta.at(to) : markov.at(from).at(to);
  }
};

/// GOOD/BAD channel, single-packet buffers: theta=0.2, beta_1=0.4, lambda=1.5, N0=1.
inline ModelParams default_scenario(double rho = 0.1) {
  ModelParams p;
  p.rho = rho;
  return p;
}

namespace detail {

inline constexpr double kDistributionTol = 1e-12;

inline void check_distribution(std::span<const double> probs, const std::string& what) {
  double sum = 0.0;
  for (double x : probs) {
    if (!(x >= 0.0)) throw NotADistribution(what + " has a negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kDistributionTol)
    throw NotADistribution(what + " sums to " + std::to_string(sum) + ", expected 1");
}

}  // namespace detail

/// Returns `raw` unchanged when every model invariant holds; throws otherwise.
inline ModelParams validate_params(const ModelParams& raw) {
  const std::size_t k = raw.gains.size();
  if (k == 0) throw WrongDimensions("at least one channel level is required");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(raw.gains[i] >= 0.0)) throw DomainError("channel gains must be non-negative");
    if (i > 0 && raw.gains[i] < raw.gains[i - 1])
      throw DomainError("channel gains must be sorted ascending");
  }
  if (raw.beta.size() != k)
    throw WrongDimensions("beta has " + std::to_string(raw.beta.size()) + " entries for " +
                          std::to_string(k) + " channel levels");
  detail::check_distribution(raw.beta, "beta");
  if (!raw.markov.empty()) {
    if (raw.markov.size() != k) throw WrongDimensions("Markov channel matrix must be K x K");
    for (std::size_t i = 0; i < k; ++i) {
      if (raw.markov[i].size() != k) throw WrongDimensions("Markov channel matrix must be K x K");
      detail::check_distribution(raw.markov[i], "Markov channel row " + std::to_string(i));
    }
  }

  if (!(raw.theta > 0.0)) throw AssumptionViolation("parameter range", raw.theta, "theta must be > 0");
  if (!(raw.theta < 1.0))
    throw AssumptionViolation("Assumption 1", raw.theta, "SINR target theta must be < 1");
  if (!(raw.n0 > 0.0)) throw AssumptionViolation("parameter range", raw.n0, "noise N0 must be > 0");
  if (!(raw.p_max > 0.0))
    throw AssumptionViolation("parameter range", raw.p_max, "p_max must be > 0");
  for (double c : raw.gains) {
    if (c <= 0.0) continue;
    const double reachable = raw.p_max * c / (raw.n0 + raw.p_max * c);
    if (raw.theta > reachable)
      throw AssumptionViolation("Assumption 2", raw.theta,
                                "theta exceeds p_max*c/(N0+p_max*c) = " +
                                    std::to_string(reachable) + " for gain " + std::to_string(c));
  }
  if (!(raw.rho > 0.0 && raw.rho < 1.0))
    throw AssumptionViolation("parameter range", raw.rho, "arrival probability rho must lie in (0,1)");
  if (!(raw.lambda >= 0.0))
    throw AssumptionViolation("parameter range", raw.lambda, "lambda must be >= 0");
  if (raw.q_max < 1)
    throw AssumptionViolation("parameter range", raw.q_max, "q_max must be >= 1");
  return raw;
}

/// (channel level, queue length) and its 1-based flat number
/// flat = level*(q_max+1) + queue + 1.
struct StateIndex {
  int channel_level = 0;
  int queue_len = 0;
  int flat = 1;

  std::size_t zero_based() const noexcept { return static_cast<std::size_t>(flat - 1); }
  friend bool operator==(const StateIndex&, const StateIndex&) = default;
};

inline StateIndex state_index(int level, int queue, const ModelParams& params) {
  if (level < 0 || level >= static_cast<int>(params.channel_levels()))
    throw OutOfRange("channel level " + std::to_string(level) + " out of range");
  if (queue < 0 || queue > params.q_max)
    throw OutOfRange("queue length " + std::to_string(queue) + " out of range");
  return {level, queue, level * (params.q_max + 1) + queue + 1};
}

inline StateIndex state_from_flat(int flat, const ModelParams& params) {
  if (flat < 1 || flat > static_cast<int>(params.num_states()))
    throw OutOfRange("flat state " + std::to_string(flat) + " out of range");
  const int width = params.q_max + 1;
  return {(flat - 1) / width, (flat - 1) % width, flat};
}

/// Queue length of a 1-based flat state.
inline int sigma(int flat, const ModelParams& params) {
  return state_from_flat(flat, params).queue_len;
}

inline double gain_of_state(std::size_t zero_based, const ModelParams& params) {
  return params.gains.at(zero_based / static_cast<std::size_t>(params.q_max + 1));
}

/// Occupancy measure over the K(q_max+1) per-user states (0-based storage).
class Measure {
 public:
  static constexpr double kSumTol = 1e-9;

  explicit Measure(std::vector<double> values) : values_(std::move(values)) {
    double sum = 0.0;
    for (double x : values_) {
      if (!(x >= -1e-12 && x <= 1.0 + 1e-12)) throw NotADistribution("measure entry outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kSumTol)
      throw NotADistribution("measure sums to " + std::to_string(sum));
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// Per-class activation fractions s_i in [0,1]. Classes with zero gain or an
/// empty queue never transmit, so their entry must be zero.
class ControlProfile {
 public:
  ControlProfile(std::vector<double> s, const ModelParams& params) : s_(std::move(s)) {
    if (s_.size() != params.num_states())
      throw WrongDimensions("control profile length " + std::to_string(s_.size()) +
                            " != state count " + std::to_string(params.num_states()));
    for (std::size_t i = 0; i < s_.size(); ++i) {
      if (!(s_[i] >= 0.0 && s_[i] <= 1.0)) throw DomainError("activation fraction outside [0,1]");
      const bool idle = gain_of_state(i, params) == 0.0 ||
                        sigma(static_cast<int>(i) + 1, params) == 0;
      if (idle && s_[i] != 0.0)
        throw DomainError("state " + std::to_string(i + 1) +
                          " has zero gain or an empty queue and cannot be activated");
    }
  }

  /// Two-state model: only (GOOD, 1 packet) is ever activated.
  static ControlProfile class4(double s4, const ModelParams& params) {
    std::vector<double> s(params.num_states(), 0.0);
    s.at(3) = s4;
    return ControlProfile(std::move(s), params);
  }

  std::size_t size() const noexcept { return s_.size(); }
  double operator[](std::size_t i) const { return s_[i]; }
  std::span<const double> values() const noexcept { return s_; }

 private:
  std::vector<double> s_;
};

/// Occupancy of the four states (BAD,0), (BAD,1), (GOOD,0), (GOOD,1) of the
/// GOOD/BAD single-packet model, 0-based.
using Measure4 = std::array<double, 4>;

inline Measure to_measure(const Measure4& m) { return Measure({m.begin(), m.end()}); }

/// The equilibrium and fluid analysis covers only gains {0,1} with q_max = 1.
inline void require_two_state(const ModelParams& params, const char* op) {
  if (!params.is_two_state())
    throw WrongDimensions(std::string(op) + " requires K=2 channel levels and q_max=1");
  if (params.gains[0] != 0.0 || params.gains[1] != 1.0)
    throw WrongDimensions(std::string(op) + " requires channel gains {0, 1}");
}

/// Minimal per-class powers driving each class to SINR = theta * s_i in the
/// mean-field interference limit.
inline std::vector<double> power_star(const ControlProfile& s, const Measure& m,
                                      const ModelParams& params) {
  if (m.size() != s.size()) throw WrongDimensions("measure and control lengths differ");
  double load = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) load += s[j] * m[j];
  const double denom = 1.0 - params.theta * load;
  std::vector<double> p(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double c = gain_of_state(i, params);
    if (c > 0.0) p[i] = params.theta * params.n0 * s[i] / (c * denom);
  }
  return p;
}

inline double mean_field_sinr(std::size_t i, std::span<const double> power, const Measure& m,
                              const ModelParams& params) {
  if (power.size() != m.size()) throw WrongDimensions("power and measure lengths differ");
  double received = 0.0;
  for (std::size_t j = 0; j < power.size(); ++j) received += power[j] * gain_of_state(j, params) * m[j];
  return power[i] * gain_of_state(i, params) / (received + params.n0);
}

/// SINR of user n among N users with interference weights 1/N.
inline double finite_sinr(std::size_t n, std::span<const double> gains, std::span<const double> power,
                          const ModelParams& params) {
  if (gains.size() != power.size()) throw WrongDimensions("gain and power lengths differ");
  if (n >= gains.size()) throw OutOfRange("user index out of range");
  double interference = 0.0;
  for (std::size_t k = 0; k < gains.size(); ++k)
    if (k != n) interference += gains[k] * power[k];
  interference /= static_cast<double>(gains.size());
  return gains[n] * power[n] / (interference + params.n0);
}

/// Relative slack on the SINR test. The exact-theta power solutions land on
/// theta only up to rounding.
inline constexpr double kSinrRelTol = 1e-12;

inline int rate(std::size_t n, std::span<const double> gains, std::span<const double> power,
                const ModelParams& params) {
  const double sinr = finite_sinr(n, gains, power, params);
  return sinr > 0.0 && sinr >= params.theta * (1.0 - kSinrRelTol) ? 1 : 0;
}

}  // namespace powerctl
