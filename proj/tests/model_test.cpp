#include <gtest/gtest.h>

#include <random>

#include "powerctl/model.hpp"

using namespace powerctl;

TEST(ValidateParams, DefaultScenarioIsValid) {
  const ModelParams p = default_scenario();
  const ModelParams out = validate_params(p);
  EXPECT_EQ(out.theta, p.theta);
  EXPECT_EQ(out.beta, p.beta);
}

TEST(ValidateParams, ThetaOneViolatesSinrBound) {
  ModelParams p = default_scenario();
  p.theta = 1.0;
  try {
    validate_params(p);
    FAIL() << "expected AssumptionViolation";
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.assumption(), "Assumption 1");
    EXPECT_EQ(e.value(), 1.0);
  }
}

TEST(ValidateParams, PowerCapTooLowForTarget) {
  ModelParams p = default_scenario();
  p.theta = 0.5;
  p.p_max = 0.5;
  try {
    validate_params(p);
    FAIL() << "expected AssumptionViolation";
  } catch (const AssumptionViolation& e) {
    EXPECT_EQ(e.assumption(), "Assumption 2");
  }
}

TEST(ValidateParams, RejectsBadChannelLaws) {
  ModelParams p = default_scenario();
  p.beta = {0.5, 0.4};
  EXPECT_THROW(validate_params(p), NotADistribution);
  p.beta = {1.2, -0.2};
  EXPECT_THROW(validate_params(p), NotADistribution);
  p = default_scenario();
  p.markov = {{0.9, 0.1}, {0.3, 0.6}};
  EXPECT_THROW(validate_params(p), NotADistribution);
  p.markov = {{1.0}};
  EXPECT_THROW(validate_params(p), WrongDimensions);
}

TEST(ValidateParams, RejectsRangeErrors) {
  for (auto mutate : std::vector<void (*)(ModelParams&)>{
           [](ModelParams& p) { p.rho = 0.0; }, [](ModelParams& p) { p.rho = 1.0; },
           [](ModelParams& p) { p.lambda = -1.0; }, [](ModelParams& p) { p.n0 = 0.0; },
           [](ModelParams& p) { p.q_max = 0; }}) {
    ModelParams p = default_scenario();
    mutate(p);
    EXPECT_THROW(validate_params(p), AssumptionViolation);
  }
}

TEST(StateIndex, TwoStateCorners) {
  const ModelParams p = default_scenario();
  EXPECT_EQ(state_index(0, 0, p).flat, 1);
  const StateIndex s = state_index(1, 1, p);
  EXPECT_EQ(s.flat, 4);
  EXPECT_EQ(sigma(4, p), 1);
}

TEST(StateIndex, BijectionOnThreeLevels) {
  ModelParams p;
  p.gains = {0.0, 0.5, 1.0};
  p.beta = {0.2, 0.3, 0.5};
  p.q_max = 2;
  EXPECT_EQ(state_index(2, 1, p).flat, 8);
  EXPECT_EQ(state_from_flat(8, p), state_index(2, 1, p));
  for (int f = 1; f <= 9; ++f) {
    const StateIndex s = state_from_flat(f, p);
    EXPECT_EQ(state_index(s.channel_level, s.queue_len, p).flat, f);
    EXPECT_EQ(sigma(f, p), s.queue_len);
  }
  EXPECT_THROW(state_index(3, 0, p), OutOfRange);
  EXPECT_THROW(state_index(0, 3, p), OutOfRange);
  EXPECT_THROW(state_from_flat(10, p), OutOfRange);
  EXPECT_THROW(state_from_flat(0, p), OutOfRange);
}

TEST(ControlProfile, SupportRule) {
  const ModelParams p = default_scenario();
  EXPECT_NO_THROW(ControlProfile({0, 0, 0, 0.7}, p));
  EXPECT_THROW(ControlProfile({0, 0.5, 0, 0}, p), DomainError);
  EXPECT_THROW(ControlProfile({0, 0, 0.5, 0}, p), DomainError);
  EXPECT_THROW(ControlProfile({0, 0, 0, 1.5}, p), DomainError);
  EXPECT_THROW(ControlProfile({0, 0, 0}, p), WrongDimensions);
}

TEST(Measure, Validation) {
  EXPECT_NO_THROW(Measure({0.25, 0.25, 0.25, 0.25}));
  EXPECT_THROW(Measure({0.5, 0.25, 0.25, 0.25}), NotADistribution);
  EXPECT_THROW(Measure({1.5, -0.5, 0, 0}), NotADistribution);
}

TEST(PowerStar, ZeroActivationGivesZeroPower) {
  const ModelParams p = default_scenario();
  const auto power = power_star(ControlProfile::class4(0.0, p), Measure({0.1, 0.2, 0.3, 0.4}), p);
  for (double x : power) EXPECT_EQ(x, 0.0);
}

TEST(PowerStar, SingleActiveClass) {
  const ModelParams p = default_scenario();
  const Measure m({0.2, 0.2, 0.2, 0.4});
  const auto power = power_star(ControlProfile::class4(1.0, p), m, p);
  EXPECT_NEAR(power[3], 0.217391304347826087, 1e-15);
  EXPECT_NEAR(mean_field_sinr(3, power, m, p), 0.2, 1e-15);
}

TEST(MeanFieldSinr, Examples) {
  ModelParams p = default_scenario();
  const Measure m({0.25, 0.25, 0.25, 0.25});
  const std::vector<double> zero(4, 0.0);
  EXPECT_EQ(mean_field_sinr(3, zero, m, p), 0.0);

  ModelParams single;
  single.gains = {1.0};
  single.beta = {1.0};
  const std::vector<double> one{1.0, 0.0};
  EXPECT_DOUBLE_EQ(mean_field_sinr(0, one, Measure({1.0, 0.0}), single), 0.5);
}

TEST(FiniteSinr, Examples) {
  const ModelParams p = default_scenario();
  std::vector<double> gains(10, 1.0);
  std::vector<double> power(10, 0.0);
  EXPECT_EQ(finite_sinr(0, gains, power, p), 0.0);
  EXPECT_EQ(rate(0, gains, power, p), 0);

  const double shared = p.theta * p.n0 / (1.0 - p.theta * 2 / 10);
  for (int n = 0; n < 3; ++n) power[static_cast<std::size_t>(n)] = shared;
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_NEAR(finite_sinr(n, gains, power, p), p.theta, 1e-15);
    EXPECT_EQ(rate(n, gains, power, p), 1);
  }
  EXPECT_EQ(rate(5, gains, power, p), 0);

  const std::vector<double> lone_gain{1.0};
  const std::vector<double> lone_power{1.0};
  EXPECT_DOUBLE_EQ(finite_sinr(0, lone_gain, lone_power, p), 1.0);
  EXPECT_EQ(rate(0, lone_gain, lone_power, p), 1);
}

namespace {

struct RandomCase {
  ModelParams params;
  std::vector<double> s;
  Measure m;
};

RandomCase random_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParams p;
  p.gains = {0.0, 0.5 + u(rng), 2.0 + u(rng)};
  p.beta = {0.2, 0.3, 0.5};
  p.q_max = 2;
  p.theta = 0.05 + 0.9 * u(rng);
  p.n0 = 0.1 + u(rng);
  p.p_max = 1e3;
  validate_params(p);
  std::vector<double> m(9);
  double total = 0.0;
  for (double& x : m) total += (x = u(rng));
  for (double& x : m) x /= total;
  std::vector<double> s(9, 0.0);
  for (std::size_t i = 0; i < 9; ++i)
    if (gain_of_state(i, p) > 0.0 && sigma(static_cast<int>(i) + 1, p) > 0) s[i] = u(rng);
  return {p, s, Measure(m)};
}

}  // namespace

TEST(PowerStarProperty, RecoversTargetSinr) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const RandomCase c = random_case(rng);
    const auto power = power_star(ControlProfile(c.s, c.params), c.m, c.params);
    for (std::size_t i = 0; i < c.s.size(); ++i)
      if (gain_of_state(i, c.params) > 0.0) {
        EXPECT_NEAR(mean_field_sinr(i, power, c.m, c.params), c.params.theta * c.s[i], 1e-13);
      }
  }
}

TEST(PowerStarProperty, MonotoneInActivation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomCase c = random_case(rng);
    const auto base = power_star(ControlProfile(c.s, c.params), c.m, c.params);
    for (std::size_t j = 0; j < c.s.size(); ++j) {
      if (c.s[j] == 0.0 && (gain_of_state(j, c.params) == 0.0 || sigma(static_cast<int>(j) + 1, c.params) == 0))
        continue;
      auto bumped = c.s;
      bumped[j] = std::min(1.0, bumped[j] + 1e-3);
      const auto up = power_star(ControlProfile(bumped, c.params), c.m, c.params);
      for (std::size_t i = 0; i < c.s.size(); ++i) EXPECT_GE(up[i], base[i]);
    }
  }
}

TEST(PowerStarProperty, NeverExceedsCap) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    ModelParams p = default_scenario();
    p.p_max = 0.1 + 10 * u(rng);
    p.n0 = 0.1 + u(rng);
    const double reachable = p.p_max / (p.n0 + p.p_max);
    p.theta = reachable * (0.01 + 0.99 * u(rng));
    validate_params(p);
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const double total = a + b + c + d;
    const Measure m({a / total, b / total, c / total, d / total});
    const auto power = power_star(ControlProfile::class4(u(rng), p), m, p);
    EXPECT_LE(power[3], p.p_max * (1 + 1e-12));
  }
}
