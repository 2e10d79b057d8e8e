#include "opes/error.hpp"
#include "opes/lqr.hpp"
#include "opes/noise_table.hpp"
#include "opes/parallel.hpp"
#include "opes/rng.hpp"
#include "opes/rollout.hpp"
#include "test_envs.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <stdexcept>

namespace opes {
namespace {

Policy zero_policy(int p) {
  return [p](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(p); };
}

TEST(CounterRngTest, MatchesSplitMix64Reference) {
  // Reference outputs of SplitMix64 seeded with 0.
  CounterRng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next_u64(), 0x06C45D188009454FULL);
}

TEST(CounterRngTest, PositionAddressable) {
  CounterRng rng(1234);
  for (int i = 0; i < 10; ++i) rng.next_u64();
  EXPECT_EQ(rng.next_u64(), counter_u64(1234, 10));
}

TEST(CounterRngTest, UniformInOpenInterval) {
  CounterRng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(NoiseTableTest, SameIndexSameMatrix) {
  NoiseTable table(7, 1000);
  EXPECT_EQ(table.sample_direction(0, 1, 1), table.sample_direction(0, 1, 1));
  EXPECT_EQ(table.sample_direction(17, 3, 4), table.sample_direction(17, 3, 4));
}

TEST(NoiseTableTest, ShiftedIndexSharesEntries) {
  NoiseTable table(7, 1000);
  const Eigen::MatrixXd a = table.sample_direction(10, 2, 3);
  const Eigen::MatrixXd b = table.sample_direction(11, 2, 3);
  // Row-major fill: entry j of b is entry j + 1 of a.
  for (int j = 0; j + 1 < 6; ++j) {
    EXPECT_EQ(b(j / 3, j % 3), a((j + 1) / 3, (j + 1) % 3));
  }
}

TEST(NoiseTableTest, RowMajorFromTable) {
  NoiseTable table(3, 100);
  const Eigen::MatrixXd d = table.sample_direction(5, 2, 3);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(d(r, c), table[5 + r * 3 + c]);
  }
}

TEST(NoiseTableTest, IndexWrapsModuloLength) {
  NoiseTable table(3, 10);
  const Eigen::MatrixXd d = table.sample_direction(8, 1, 4);
  EXPECT_EQ(d(0, 0), table.entries()[8]);
  EXPECT_EQ(d(0, 1), table.entries()[9]);
  EXPECT_EQ(d(0, 2), table.entries()[0]);
  EXPECT_EQ(d(0, 3), table.entries()[1]);
  EXPECT_EQ(table.sample_direction(23, 2, 2), table.sample_direction(3, 2, 2));
}

TEST(NoiseTableTest, BitIdenticalAcrossConstructions) {
  NoiseTable a(99, 5000), b(99, 5000), c(100, 5000);
  EXPECT_EQ(std::memcmp(a.entries().data(), b.entries().data(), 5000 * sizeof(double)), 0);
  EXPECT_NE(std::memcmp(a.entries().data(), c.entries().data(), 5000 * sizeof(double)), 0);
}

TEST(NoiseTableTest, EntriesAreStandardNormal) {
  NoiseTable table(2024, 100'000);
  double mean = 0.0;
  for (double e : table.entries()) mean += e;
  mean /= 1e5;
  double var = 0.0;
  for (double e : table.entries()) var += (e - mean) * (e - mean);
  var /= 1e5;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(NoiseTableTest, RejectsEmptyTable) { EXPECT_THROW(NoiseTable(1, 0), ConfigError); }

TEST(RolloutTest, ZeroPolicyOnNoiselessLqrMatchesHandSimulation) {
  LqrSpec spec = LqrSpec::benchmark();
  spec.process_noise_std = 0.0;
  LqrEnv env(spec);
  const Trajectory traj = rollout(env, zero_policy(3), 3, 11);
  ASSERT_EQ(traj.size(), 3u);
  EXPECT_FALSE(traj.terminated_early);

  // x_{t+1} = A x_t with cost x'Qx = 1e-3 |x|^2.
  LqrEnv fresh(spec);
  Eigen::VectorXd x = fresh.reset(11);
  const double a = 1.01, o = 0.01;
  for (int t = 0; t < 3; ++t) {
    EXPECT_EQ(traj.transitions[t].state, x);
    EXPECT_NEAR(traj.transitions[t].reward, -1e-3 * x.squaredNorm(), 1e-15);
    EXPECT_LT(traj.transitions[t].reward, 0.0);
    Eigen::VectorXd next(3);
    next << a * x[0] + o * x[1], o * x[0] + a * x[1] + o * x[2], o * x[1] + a * x[2];
    EXPECT_NEAR((traj.transitions[t].next_state - next).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    x = next;
  }
}

TEST(RolloutTest, HorizonOneGivesOneTransition) {
  testing::ConstantRewardEnv env(2.5);
  const Trajectory traj = rollout(env, zero_policy(1), 1, 0);
  ASSERT_EQ(traj.size(), 1u);
  EXPECT_EQ(traj.total_reward, 2.5);
}

TEST(RolloutTest, SurvivalOffsetCancelsConstantReward) {
  testing::ConstantRewardEnv env(1.0);
  const Trajectory traj = rollout(env, zero_policy(1), 50, 0, 1.0);
  EXPECT_EQ(traj.size(), 50u);
  EXPECT_EQ(traj.total_reward, 0.0);
  for (const auto& t : traj.transitions) EXPECT_EQ(t.reward, 0.0);
}

TEST(RolloutTest, StopsOnTermination) {
  testing::ConstantRewardEnv env(1.0, 2, 1, /*terminate_after=*/4);
  const Trajectory traj = rollout(env, zero_policy(1), 100, 0);
  EXPECT_EQ(traj.size(), 4u);
  EXPECT_TRUE(traj.terminated_early);
}

TEST(RolloutTest, RespectsHorizonCap) {
  testing::ConstantRewardEnv env(1.0, 2, 1, -1, /*horizon_cap=*/7);
  EXPECT_EQ(rollout(env, zero_policy(1), 100, 0).size(), 7u);
}

TEST(RolloutTest, ActionDimensionMismatchIsConfigError) {
  testing::ConstantRewardEnv env(1.0, 2, 1);
  EXPECT_THROW(rollout(env, zero_policy(3), 5, 0), ConfigError);
  EXPECT_THROW(rollout(env, zero_policy(1), 0, 0), ConfigError);
}

TEST(RolloutTest, ReplayIsBitIdentical) {
  LqrEnv env(LqrSpec::benchmark());
  const Policy policy = [](const Eigen::VectorXd& s) { return Eigen::VectorXd(-0.05 * s); };
  const Trajectory a = rollout(env, policy, 200, 77);
  const Trajectory b = rollout(env, policy, 200, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_EQ(a.transitions[t].state, b.transitions[t].state);
    EXPECT_EQ(a.transitions[t].reward, b.transitions[t].reward);
  }
  EXPECT_EQ(a.total_reward, b.total_reward);
  EXPECT_NE(rollout(env, policy, 200, 78).total_reward, a.total_reward);
}

TEST(RolloutTest, TotalRewardIsLeftToRightSum) {
  LqrEnv env(LqrSpec::benchmark());
  const Trajectory traj = rollout(env, zero_policy(3), 150, 5, 0.25);
  double sum = 0.0;
  for (const auto& t : traj.transitions) sum += t.reward;
  EXPECT_EQ(traj.total_reward, sum);
}

TEST(ParallelForTest, ResultsIndependentOfThreadCount) {
  std::vector<double> one(100), many(100);
  parallel_for(100, 1, [&](std::size_t i) { one[i] = std::sqrt(double(i)) * 3.0; });
  parallel_for(100, 8, [&](std::size_t i) { many[i] = std::sqrt(double(i)) * 3.0; });
  EXPECT_EQ(one, many);
}

TEST(ParallelForTest, PropagatesExceptions) {
  std::atomic<int> ran{0};
  EXPECT_THROW(parallel_for(20, 4,
                            [&](std::size_t i) {
                              ++ran;
                              if (i == 13) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  EXPECT_EQ(ran.load(), 20);
}

}  // namespace
}  // namespace opes
