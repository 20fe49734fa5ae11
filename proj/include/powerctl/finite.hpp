#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "powerctl/io.hpp"
#include "powerctl/kernel.hpp"

namespace powerctl {

/// Users per class (n1..n4), 0-based storage.
struct AggregateState {
  std::array<int, 4> counts{};

  int total() const noexcept { return counts[0] + counts[1] + counts[2] + counts[3]; }
  int operator[](std::size_t i) const { return counts[i]; }
  friend auto operator<=>(const AggregateState&, const AggregateState&) = default;
};

/// All compositions of N into four classes in lexicographic order.
class StateSpace {
 public:
  explicit StateSpace(int users) : users_(users) {
    if (users < 1) throw DomainError("user count must be >= 1");
    const auto side = static_cast<std::size_t>(users + 1);
    lookup_.assign(side * side * side, kNone);
    for (int a = 0; a <= users; ++a)
      for (int b = 0; a + b <= users; ++b)
        for (int c = 0; a + b + c <= users; ++c) {
          lookup_[key(a, b, c)] = states_.size();
          states_.push_back({{a, b, c, users - a - b - c}});
        }
  }

  int users() const noexcept { return users_; }
  std::size_t size() const noexcept { return states_.size(); }
  const AggregateState& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<AggregateState>& states() const noexcept { return states_; }

  std::size_t index_of(const AggregateState& s) const {
    if (s.total() != users_ || *std::min_element(s.counts.begin(), s.counts.end()) < 0)
      throw OutOfRange("counts do not form a state of " + std::to_string(users_) + " users");
    return lookup_[key(s[0], s[1], s[2])];
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t key(int a, int b, int c) const {
    const auto side = static_cast<std::size_t>(users_ + 1);
    return (static_cast<std::size_t>(a) * side + static_cast<std::size_t>(b)) * side +
           static_cast<std::size_t>(c);
  }

  int users_;
  std::vector<AggregateState> states_;
  std::vector<std::size_t> lookup_;
};

inline StateSpace enumerate_states(int users, const ModelParams& params) {
  require_two_state(params, "enumerate_states");
  return StateSpace(users);
}

/// Symmetric power at which each of k simultaneous GOOD-channel senders
/// reaches SINR exactly theta.
inline double transmit_power(int k, int users, const ModelParams& params) {
  if (k < 1) throw OutOfRange("transmit_power needs k >= 1");
  if (users < 1) throw DomainError("user count must be >= 1");
  const double load = params.theta * (k - 1) / users;
  if (!(load < 1.0)) throw Infeasible(k, "interference load theta*(k-1)/N >= 1");
  const double p = params.theta * params.n0 / (1.0 - load);
  if (p > params.p_max)
    throw Infeasible(k, "power " + std::to_string(p) + " exceeds p_max " + std::to_string(params.p_max));
  return p;
}

/// Cost of one slot charged on the pre-transition counts.
inline double stage_cost(const AggregateState& s, int k, int users, const ModelParams& params) {
  if (k < 0 || k > s[3]) throw OutOfRange("action k=" + std::to_string(k) + " outside [0, n4]");
  const double queued = params.lambda * (s[1] + s[3]);
  return k == 0 ? queued : k * transmit_power(k, users, params) + queued;
}

using StateDistribution = std::map<AggregateState, double>;

namespace detail {

inline double binomial(int n, int r) {
  double out = 1.0;
  for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

/// Destination counts of `count` independent users sharing transition row `row`.
inline StateDistribution multinomial(int count, const Eigen::RowVectorXd& row) {
  StateDistribution out;
  for (int a = 0; a <= count; ++a)
    for (int b = 0; a + b <= count; ++b)
      for (int c = 0; a + b + c <= count; ++c) {
        const int d = count - a - b - c;
        const double coef = binomial(count, a) * binomial(count - a, b) * binomial(count - a - b, c);
        const double p = coef * std::pow(row(0), a) * std::pow(row(1), b) * std::pow(row(2), c) *
                         std::pow(row(3), d);
        if (p > 0.0) out[{{a, b, c, d}}] += p;
      }
  return out;
}

inline StateDistribution convolve(const StateDistribution& x, const StateDistribution& y) {
  StateDistribution out;
  for (const auto& [sx, px] : x)
    for (const auto& [sy, py] : y) {
      AggregateState s;
      for (std::size_t i = 0; i < 4; ++i) s.counts[i] = sx.counts[i] + sy.counts[i];
      out[s] += px * py;
    }
  return out;
}

}  // namespace detail

/// Law of next slot's counts when k of the (GOOD,1) users transmit and
/// every other user stays silent.
inline StateDistribution transition_distribution(const AggregateState& s, int k, const KernelTables& tables) {
  if (tables.size() != 4) throw WrongDimensions("aggregate transitions need the four-state tables");
  if (k < 0 || k > s[3]) throw OutOfRange("action k=" + std::to_string(k) + " outside [0, n4]");
  StateDistribution dist{{AggregateState{}, 1.0}};
  for (Eigen::Index i = 0; i < 3; ++i)
    if (s[static_cast<std::size_t>(i)] > 0)
      dist = detail::convolve(dist, detail::multinomial(s[static_cast<std::size_t>(i)], tables.gamma0.row(i)));
  if (k > 0) dist = detail::convolve(dist, detail::multinomial(k, tables.gamma1.row(3)));
  if (s[3] - k > 0) dist = detail::convolve(dist, detail::multinomial(s[3] - k, tables.gamma0.row(3)));
  return dist;
}

inline StateDistribution transition_distribution(const AggregateState& s, int k, const ModelParams& params) {
  require_two_state(params, "transition_distribution");
  if (k > 0) transmit_power(k, s.total(), params);
  return transition_distribution(s, k, build_tables(params));
}

/// Map from counts to the number of (GOOD,1) users told to transmit.
using FinitePolicy = std::function<int(const AggregateState&)>;

/// Aggregated N-user MDP with precomputed costs and sparse transitions.
/// Actions are k in {0..n4} where transmit_power(k) is feasible.
class FiniteMdp {
 public:
  struct Transition {
    std::size_t to;
    double p;
  };
  struct Action {
    int k;
    double cost;
    std::vector<Transition> next;
  };

  FiniteMdp(const ModelParams& params, int users) : params_(params), space_(enumerate_states(users, params)) {
    const KernelTables tables = build_tables(params_);
    actions_.resize(space_.size());
    for (std::size_t i = 0; i < space_.size(); ++i) {
      const AggregateState& s = space_[i];
      for (int k = 0; k <= s[3]; ++k) {
        double cost = 0.0;
        try {
          cost = stage_cost(s, k, users, params_);
        } catch (const Infeasible&) {
          continue;
        }
        Action a{k, cost, {}};
        for (const auto& [to, p] : transition_distribution(s, k, tables)) a.next.push_back({space_.index_of(to), p});
        actions_[i].push_back(std::move(a));
      }
    }
  }

  const ModelParams& params() const noexcept { return params_; }
  const StateSpace& space() const noexcept { return space_; }
  int users() const noexcept { return space_.users(); }
  const std::vector<Action>& actions(std::size_t state) const { return actions_.at(state); }

  /// The action record for k at `state`; throws if k is not available there.
  const Action& action(std::size_t state, int k) const {
    for (const Action& a : actions_.at(state))
      if (a.k == k) return a;
    throw OutOfRange("action k=" + std::to_string(k) + " unavailable in state " + std::to_string(state));
  }

 private:
  ModelParams params_;
  StateSpace space_;
  std::vector<std::vector<Action>> actions_;
};

struct VIResult {
  double g = 0.0;
  std::vector<double> h;
  std::vector<int> policy;
  long iterations = 0;
  double span_residual = 0.0;
};

struct VIOptions {
  double tol = 1e-9;
  long max_iterations = 1000000;
};

/// Average-cost relative value iteration anchored at state 0, stopped on the
/// span of successive differences. Ties go to the smallest k.
inline VIResult relative_value_iteration(const FiniteMdp& mdp, const VIOptions& opt = {}) {
  const std::size_t n = mdp.space().size();
  VIResult res;
  res.h.assign(n, 0.0);
  res.policy.assign(n, 0);
  std::vector<double> next(n);
  for (long it = 1; it <= opt.max_iterations; ++it) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (const auto& a : mdp.actions(s)) {
        double q = a.cost;
        for (const auto& t : a.next) q += t.p * res.h[t.to];
        if (q < best) {
          best = q;
          best_k = a.k;
        }
      }
      next[s] = best;
      res.policy[s] = best_k;
      lo = std::min(lo, best - res.h[s]);
      hi = std::max(hi, best - res.h[s]);
    }
    const double anchor = next[0];
    for (std::size_t s = 0; s < n; ++s) res.h[s] = next[s] - anchor;
    res.iterations = it;
    res.span_residual = hi - lo;
    if (res.span_residual < opt.tol) {
      res.g = 0.5 * (lo + hi);
      return res;
    }
  }
  throw NoConvergence(opt.max_iterations, res.span_residual);
}

inline VIResult relative_value_iteration(const ModelParams& params, int users, double tol = 1e-9) {
  return relative_value_iteration(FiniteMdp(params, users), VIOptions{tol});
}

inline void to_json(nlohmann::json& j, const VIResult& r) {
  j = nlohmann::json{{"g", r.g},
                     {"iterations", r.iterations},
                     {"span_residual", r.span_residual},
                     {"policy", r.policy},
                     {"h", r.h}};
}

namespace detail {

/// Strongly connected components whose edges never leave the component.
inline std::size_t count_closed_classes(const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0;
  std::size_t comps = 0;

  // Iterative Tarjan: frames hold (node, next edge position).
  std::vector<std::pair<std::size_t, std::size_t>> frames;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    frames.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < adj[v].size()) {
        const std::size_t w = adj[v][pos++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = comps;
        } while (w != done);
        ++comps;
      }
    }
  }
  std::vector<bool> leaves(comps, false);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t w : adj[v])
      if (comp[w] != comp[v]) leaves[comp[v]] = true;
  return static_cast<std::size_t>(std::count(leaves.begin(), leaves.end(), false));
}

}  // namespace detail

struct PolicyEvaluation {
  double g = 0.0;
  std::vector<double> stationary;
};

/// Long-run average cost of a stationary policy from the stationary law of
/// the induced chain.
inline PolicyEvaluation evaluate_policy_exact(const FinitePolicy& policy, const FiniteMdp& mdp) {
  const std::size_t n = mdp.space().size();
  std::vector<const FiniteMdp::Action*> chosen(n);
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t s = 0; s < n; ++s) {
    chosen[s] = &mdp.action(s, policy(mdp.space()[s]));
    for (const auto& t : chosen[s]->next) adj[s].push_back(t.to);
  }
  const std::size_t closed = detail::count_closed_classes(adj);
  if (closed != 1)
    throw MultichainDetected("policy induces " + std::to_string(closed) + " closed recurrent classes");

  // Lazy chain (P + I)/2 shares the stationary law and is aperiodic.
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  constexpr long kMaxSweeps = 10000000;
  for (long sweep = 0;; ++sweep) {
    if (sweep == kMaxSweeps) throw NonConvergent("stationary power iteration did not converge");
    for (std::size_t s = 0; s < n; ++s) next[s] = 0.5 * pi[s];
    for (std::size_t s = 0; s < n; ++s)
      for (const auto& t : chosen[s]->next) next[t.to] += 0.5 * pi[s] * t.p;
    double total = 0.0;
    for (double x : next) total += x;
    double diff = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      next[s] /= total;
      diff += std::abs(next[s] - pi[s]);
    }
    pi.swap(next);
    if (diff < 1e-12) break;
  }
  PolicyEvaluation out{0.0, pi};
  for (std::size_t s = 0; s < n; ++s) out.g += pi[s] * chosen[s]->cost;
  return out;
}

inline double evaluate_policy_exact(const FinitePolicy& policy, const ModelParams& params, int users) {
  return evaluate_policy_exact(policy, FiniteMdp(params, users)).g;
}

/// Seeded generator with a platform-independent uniform mapping.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn from a probability vector by inversion.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

struct UserState {
  int level = 0;
  int queue = 0;

  /// 0-based class in the (channel, queue) numbering.
  std::size_t flat(const ModelParams& params) const {
    return static_cast<std::size_t>(level * (params.q_max + 1) + queue);
  }
};

/// One slot of a single user: service, arrival, then a fresh channel level.
inline UserState step_user(const UserState& u, bool success, const ModelParams& params, ChannelModel model,
                           Rng& rng) {
  UserState next;
  const int served = success ? std::max(u.queue - 1, 0) : u.queue;
  next.queue = std::min(served + (rng.bernoulli(params.rho) ? 1 : 0), params.q_max);
  if (model == ChannelModel::IID) {
    next.level = static_cast<int>(rng.categorical(params.beta));
  } else {
    if (params.markov.empty()) throw WrongDimensions("Markov channel requested but no matrix given");
    next.level = static_cast<int>(rng.categorical(params.markov.at(static_cast<std::size_t>(u.level))));
  }
  return next;
}

struct SimulationRecord {
  long t = 0;
  AggregateState counts;
  int action = 0;
  double cost = 0.0;
};

struct SimulationOptions {
  /// Fraction of the horizon discarded before averaging.
  double burn_in = 0.1;
  /// Starting counts; all users at (BAD, empty) when unset.
  std::optional<AggregateState> initial;
  bool record = true;
  ChannelModel channel = ChannelModel::IID;
};

struct SimulationResult {
  double mean_cost = 0.0;
  /// Half-width of the 95% batch-means confidence interval.
  double ci95 = 0.0;
  std::vector<SimulationRecord> trajectory;
};

/// Slot-by-slot simulation of N users. Deterministic for a given seed.
inline SimulationResult simulate(const FinitePolicy& policy, const ModelParams& params, int users, long horizon,
                                 std::uint64_t seed, const SimulationOptions& opt = {}) {
  require_two_state(params, "simulate");
  if (users < 1) throw DomainError("user count must be >= 1");
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  if (!(opt.burn_in >= 0.0 && opt.burn_in < 1.0)) throw DomainError("burn_in must lie in [0,1)");

  Rng rng(seed);
  std::vector<UserState> people(static_cast<std::size_t>(users));
  if (opt.initial) {
    if (opt.initial->total() != users) throw OutOfRange("initial counts do not sum to N");
    std::size_t n = 0;
    for (std::size_t cls = 0; cls < 4; ++cls)
      for (int c = 0; c < (*opt.initial)[cls]; ++c) people[n++] = {static_cast<int>(cls / 2), static_cast<int>(cls % 2)};
  }

  const long burn = static_cast<long>(std::floor(opt.burn_in * static_cast<double>(horizon)));
  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(horizon - burn));
  SimulationResult out;
  std::vector<double> power(people.size());
  std::vector<double> gain(people.size());
  for (long t = 0; t < horizon; ++t) {
    AggregateState counts;
    for (const auto& u : people) ++counts.counts[u.flat(params)];
    const int k = policy(counts);
    const double cost = stage_cost(counts, k, users, params);
    const double p = k > 0 ? transmit_power(k, users, params) : 0.0;

    int chosen = 0;
    double received = 0.0;
    for (std::size_t n = 0; n < people.size(); ++n) {
      gain[n] = params.gains[static_cast<std::size_t>(people[n].level)];
      const bool sends = people[n].flat(params) == 3 && chosen < k;
      power[n] = sends ? p : 0.0;
      chosen += sends ? 1 : 0;
      received += gain[n] * power[n];
    }
    for (std::size_t n = 0; n < people.size(); ++n) {
      const double own = gain[n] * power[n];
      const double sinr = own / ((received - own) / users + params.n0);
      const bool success = sinr > 0.0 && sinr >= params.theta * (1.0 - kSinrRelTol);
      people[n] = step_user(people[n], success, params, opt.channel, rng);
    }

    if (opt.record) out.trajectory.push_back({t, counts, k, cost});
    if (t >= burn) kept.push_back(cost);
  }

  double sum = 0.0;
  for (double c : kept) sum += c;
  out.mean_cost = sum / static_cast<double>(kept.size());
  constexpr std::size_t kBatches = 20;
  if (kept.size() >= kBatches) {
    const std::size_t width = kept.size() / kBatches;
    std::vector<double> means(kBatches, 0.0);
    for (std::size_t b = 0; b < kBatches; ++b) {
      for (std::size_t i = b * width; i < (b + 1) * width; ++i) means[b] += kept[i];
      means[b] /= static_cast<double>(width);
    }
    double centre = 0.0;
    for (double m : means) centre += m;
    centre /= kBatches;
    double var = 0.0;
    for (double m : means) var += (m - centre) * (m - centre);
    var /= kBatches - 1;
    constexpr double kStudent19 = 2.093;
    out.ci95 = kStudent19 * std::sqrt(var / kBatches);
  }
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<SimulationRecord>& trajectory) {
  os << "t,n1,n2,n3,n4,action,cost\n";
  for (const auto& r : trajectory)
    os << r.t << ',' << r.counts[0] << ',' << r.counts[1] << ',' << r.counts[2] << ',' << r.counts[3] << ','
       << r.action << ',' << fmt12(r.cost) << '\n';
}

}  // namespace powerctl
