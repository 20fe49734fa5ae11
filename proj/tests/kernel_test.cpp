#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "powerctl/kernel.hpp"

using namespace powerctl;

TEST(QueueKernel, ServedPacketAtOne) {
  const auto d = queue_kernel(1, true, 0.1, 1);
  EXPECT_DOUBLE_EQ(d[0], 0.9);
  EXPECT_DOUBLE_EQ(d[1], 0.1);
}

TEST(QueueKernel, EmptyQueueCannotDecrement) {
  const auto d = queue_kernel(0, true, 0.3, 1);
  EXPECT_DOUBLE_EQ(d[0], 0.7);
  EXPECT_DOUBLE_EQ(d[1], 0.3);
}

TEST(QueueKernel, OverflowMergesIntoCap) {
  const auto d = queue_kernel(3, false, 0.4, 3);
  EXPECT_DOUBLE_EQ(d[3], 1.0);
  EXPECT_DOUBLE_EQ(d[0] + d[1] + d[2], 0.0);
  EXPECT_THROW(queue_kernel(4, false, 0.4, 3), OutOfRange);
}

TEST(BuildTables, SuccessRowFromGoodFull) {
  const KernelTables t = build_tables(default_scenario(0.1));
  EXPECT_NEAR(t.gamma1(3, 0), 0.54, 1e-15);
  EXPECT_NEAR(t.gamma1(3, 1), 0.06, 1e-15);
  EXPECT_NEAR(t.gamma1(3, 2), 0.36, 1e-15);
  EXPECT_NEAR(t.gamma1(3, 3), 0.04, 1e-15);
}

TEST(BuildTables, FailureRowFromGoodEmpty) {
  const KernelTables t = build_tables(default_scenario(0.1));
  EXPECT_NEAR(t.gamma0(2, 0), 0.6 * 0.9, 1e-15);
  EXPECT_NEAR(t.gamma0(2, 1), 0.6 * 0.1, 1e-15);
  EXPECT_NEAR(t.gamma0(2, 2), 0.4 * 0.9, 1e-15);
  EXPECT_NEAR(t.gamma0(2, 3), 0.4 * 0.1, 1e-15);
}

TEST(BuildTables, IdentityMarkovKeepsLevel) {
  ModelParams p = default_scenario();
  p.markov = {{1.0, 0.0}, {0.0, 1.0}};
  const KernelTables t = build_tables(p, ChannelModel::Markov);
  for (int a = 0; a <= 1; ++a)
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j)
        if (i / 2 != j / 2) {
          EXPECT_EQ(t.gamma(a)(i, j), 0.0);
        }
  EXPECT_THROW(build_tables(default_scenario(), ChannelModel::Markov), WrongDimensions);
}

TEST(BuildTables, RowsSumToOneOnParameterGrid) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 1; k <= 4; ++k)
    for (int q = 1; q <= 3; ++q) {
      ModelParams p;
      p.gains.clear();
      p.beta.clear();
      p.markov.assign(static_cast<std::size_t>(k), {});
      double total = 0.0;
      for (int l = 0; l < k; ++l) {
        p.gains.push_back(l);
        p.beta.push_back(u(rng));
        total += p.beta.back();
      }
      for (double& b : p.beta) b /= total;
      for (auto& row : p.markov) {
        double rt = 0.0;
        for (int l = 0; l < k; ++l) rt += row.emplace_back(u(rng));
        for (double& x : row) x /= rt;
      }
      p.q_max = q;
      p.rho = u(rng) * 0.9;
      for (ChannelModel model : {ChannelModel::IID, ChannelModel::Markov}) {
        const KernelTables t = build_tables(p, model);
        for (int a = 0; a <= 1; ++a) {
          EXPECT_GE(t.gamma(a).minCoeff(), 0.0);
          for (Eigen::Index i = 0; i < t.size(); ++i) EXPECT_NEAR(t.gamma(a).row(i).sum(), 1.0, 1e-12);
        }
      }
    }
}

TEST(DriftMatrix, ZeroSuccessIgnoresSuccessTable) {
  const ModelParams p = default_scenario(0.2);
  KernelTables t = build_tables(p);
  const std::vector<double> g(4, 0.0);
  const DriftMatrix a = drift_matrix(g, t);
  t.gamma1.setConstant(0.25);
  const DriftMatrix b = drift_matrix(g, t);
  EXPECT_EQ((a.u - b.u).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DriftMatrix, GeneralBuilderMatchesExplicitMatrix) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ModelParams p = default_scenario(0.01 + 0.98 * u(rng));
    const double b1 = 0.01 + 0.98 * u(rng);
    p.beta = {1 - b1, b1};
    const double s4 = u(rng);
    const std::vector<double> g{0, 0, 0, s4};
    const DriftMatrix general = drift_matrix(g, p);
    const DriftMatrix explicit4 = drift_matrix_4state(s4, p);
    EXPECT_LT((general.u - explicit4.u).cwiseAbs().maxCoeff(), 1e-14);
    for (Eigen::Index c = 0; c < 4; ++c) EXPECT_NEAR(explicit4.u.col(c).sum(), 0.0, 1e-12);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) {
        if (i == j) {
          EXPECT_LE(general.u(i, j), 0.0);
          EXPECT_GE(general.u(i, j), -1.0);
        } else {
          EXPECT_GE(general.u(i, j), 0.0);
        }
      }
  }
}

TEST(DriftMatrix, IPlusUIsColumnStochastic) {
  ModelParams p;
  p.gains = {0.0, 0.5, 1.0};
  p.beta = {0.3, 0.3, 0.4};
  p.q_max = 2;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(9);
    for (double& x : g) x = u(rng);
    const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(9, 9) + drift_matrix(g, p).u;
    EXPECT_GE(step.minCoeff(), 0.0);
    for (Eigen::Index c = 0; c < 9; ++c) EXPECT_NEAR(step.col(c).sum(), 1.0, 1e-12);
  }
  const std::vector<double> bad(9, 1.5);
  EXPECT_THROW(drift_matrix(bad, p), DomainError);
  const std::vector<double> short_g(3, 0.0);
  EXPECT_THROW(drift_matrix(short_g, p), WrongDimensions);
}

TEST(DriftMatrix4State, PassiveEquilibriumIsStationary) {
  const ModelParams p = default_scenario(0.1);
  const Eigen::Vector4d m(0.0, 0.6, 0.0, 0.4);
  EXPECT_LT((drift_matrix_4state(0.0, p).u * m).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DriftMatrix4State, ActiveEquilibriumIsStationary) {
  const ModelParams p = default_scenario(0.1);
  const Eigen::Vector4d m(0.216 / 0.46, 0.06 / 0.46, 0.144 / 0.46, 0.04 / 0.46);
  EXPECT_LT((drift_matrix_4state(1.0, p).u * m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DriftMatrix4State, RejectsOtherShapes) {
  ModelParams p = default_scenario();
  p.q_max = 2;
  EXPECT_THROW(drift_matrix_4state(0.5, p), WrongDimensions);
  EXPECT_THROW(drift_vector({0.25, 0.25, 0.25, 0.25}, 1.0, p), WrongDimensions);
}

TEST(DriftVector, Examples) {
  const ModelParams p = default_scenario(0.1);
  for (double x : drift_vector({0.0, 0.6, 0.0, 0.4}, 0.0, p)) EXPECT_NEAR(x, 0.0, 1e-16);
  EXPECT_NEAR(drift_vector({0.25, 0.25, 0.25, 0.25}, 1.0, p)[3], -0.12, 1e-15);
}

TEST(DriftVector, MatchesMatrixAndConservesMass) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ModelParams p = default_scenario(0.01 + 0.98 * u(rng));
    const double b1 = 0.01 + 0.98 * u(rng);
    p.beta = {1 - b1, b1};
    Measure4 m{u(rng), u(rng), u(rng), u(rng)};
    const double total = m[0] + m[1] + m[2] + m[3];
    for (double& x : m) x /= total;
    for (double a : {0.0, 1.0, u(rng)}) {
      const Measure4 d = drift_vector(m, a, p);
      const Eigen::Vector4d prod = drift_matrix_4state(a, p).u * Eigen::Vector4d(m[0], m[1], m[2], m[3]);
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(d[static_cast<std::size_t>(i)], prod(i), 1e-15);
      EXPECT_NEAR(d[0] + d[1] + d[2] + d[3], 0.0, 1e-15);
    }
  }
}
