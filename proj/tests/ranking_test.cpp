#include "fixtures.hpp"
#include "opes/error.hpp"
#include "opes/linear_policy.hpp"
#include "opes/lqr.hpp"
#include "opes/ranking.hpp"
#include "test_envs.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace opes {
namespace {

using testing::make_trajectory;

TEST(KernelWeightTest, Basics) {
  const Eigen::Vector2d a(0.3, -0.4);
  EXPECT_EQ(kernel_weight(a, a, 0.7), 1.0);
  // |a - target| = 0.5 = h
  EXPECT_NEAR(kernel_weight(a, Eigen::Vector2d(0, 0), 0.5), std::exp(-1.0), 1e-16);
  EXPECT_NEAR(kernel_weight(a, Eigen::Vector2d(0, 0), 1e9), 1.0, 1e-9);
  EXPECT_THROW(kernel_weight(a, a, 0.0), ConfigError);
  EXPECT_THROW(kernel_weight(a, a, -1.0), ConfigError);
}

TEST(KernelWeightTest, MonotoneAndScaleInvariant) {
  CounterRng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd a = testing::random_matrix(rng, 3, 1).col(0);
    const Eigen::VectorXd dir = testing::random_matrix(rng, 3, 1).col(0);
    const double h = 0.5 + 2 * rng.uniform();
    const double w1 = kernel_weight(a, a + dir, h);
    const double w2 = kernel_weight(a, a + 1.5 * dir, h);
    ASSERT_GT(w1, 0.0);
    ASSERT_LE(w1, 1.0);
    ASSERT_LE(w2, w1);
    const double c = 0.5 + 3 * rng.uniform();
    ASSERT_NEAR(kernel_weight(c * a, c * (a + dir), c * h), w1, 1e-14);
  }
}

TEST(BehaviorBatchTest, SingleTrajectory) {
  const std::vector<Trajectory> t{make_trajectory({1, 2, 3})};
  const BehaviorBatch b = build_behavior_batch(t, RunningStats(1));
  EXPECT_EQ(b.eta_hat, 2.0);
  ASSERT_EQ(b.q_values.size(), 3);
  EXPECT_EQ(b.q_values[0], 0.0);
  EXPECT_EQ(b.q_values[1], 1.0);
  EXPECT_EQ(b.q_values[2], 1.0);
}

TEST(BehaviorBatchTest, ConstantRewardGivesZeroQ) {
  const std::vector<Trajectory> t{make_trajectory(std::vector<double>(37, -4.25)),
                                  make_trajectory({-4.25, -4.25})};
  const BehaviorBatch b = build_behavior_batch(t, RunningStats(1));
  EXPECT_EQ(b.size(), 39u);
  EXPECT_EQ(b.q_values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BehaviorBatchTest, ReturnsToGoStopAtTrajectoryEnd) {
  const std::vector<Trajectory> t{make_trajectory({1}), make_trajectory({3})};
  const BehaviorBatch b = build_behavior_batch(t, RunningStats(1));
  EXPECT_EQ(b.eta_hat, 2.0);
  EXPECT_EQ(b.q_values[0], -1.0);
  EXPECT_EQ(b.q_values[1], 1.0);
  EXPECT_EQ(b.transitions[1].trajectory_id, 1);
  EXPECT_EQ(b.transitions[1].step_index, 0);
}

TEST(BehaviorBatchTest, StatesAreNormalizedWithSnapshot) {
  RunningStats st(1);
  st.push(Eigen::VectorXd::Constant(1, 1.0));
  st.push(Eigen::VectorXd::Constant(1, 3.0));
  const std::vector<Trajectory> t{make_trajectory({0.5}, 1, 4.0)};
  EXPECT_EQ(build_behavior_batch(t, st).transitions[0].normalized_state[0], 2.0);
}

TEST(BehaviorBatchTest, EmptyIsError) {
  const std::vector<Trajectory> none{Trajectory{}, Trajectory{}};
  EXPECT_THROW(build_behavior_batch(none, RunningStats(1)), ConfigError);
  EXPECT_THROW(build_behavior_batch({}, RunningStats(1)), ConfigError);
}

BehaviorBatch two_transition_fixture() {
  BehaviorBatch b;
  BehaviorTransition t0, t1;
  t0.normalized_state = Eigen::Vector2d(1, 0);
  t1.normalized_state = Eigen::Vector2d(0, 1);
  t0.action = t1.action = Eigen::VectorXd::Zero(1);
  b.transitions = {t0, t1};
  b.q_values = Eigen::Vector2d(2, -1);
  return b;
}

TEST(FitnessScoreTest, HandEvaluatedFixture) {
  Eigen::MatrixXd d(1, 2);
  d << 1, 0;
  const double expected = (std::exp(-1.0) * 2.0 - 1.0) / 2.0;
  EXPECT_NEAR(fitness_score(d, two_transition_fixture(), 1.0, 1.0), expected, 1e-15);
  EXPECT_NEAR(expected, -0.13212, 5e-6);
}

TEST(FitnessScoreTest, ZeroDirectionGivesMeanQ) {
  EXPECT_EQ(fitness_score(Eigen::MatrixXd::Zero(1, 2), two_transition_fixture(), 0.3, 0.1), 0.5);
}

TEST(FitnessScoreTest, SignSymmetricExactly) {
  CounterRng rng(3);
  const auto trajs = testing::random_behavior(rng, 3, 2, 40);
  const BehaviorBatch b = build_behavior_batch(trajs, RunningStats(3));
  for (int i = 0; i < 50; ++i) {
    const Eigen::MatrixXd d = testing::random_matrix(rng, 2, 3);
    ASSERT_EQ(fitness_score(d, b, 0.2, 0.5), fitness_score(-d, b, 0.2, 0.5));
  }
}

TEST(FitnessScoreTest, ShapeMismatchIsConfigError) {
  EXPECT_THROW(fitness_score(Eigen::MatrixXd::Zero(1, 3), two_transition_fixture(), 1, 1),
               ConfigError);
  EXPECT_THROW(fitness_score(Eigen::MatrixXd::Zero(1, 2), two_transition_fixture(), 1, 0),
               ConfigError);
}

TEST(FitnessScoreTest, HugeBandwidthCollapsesScores) {
  CounterRng rng(5);
  const auto trajs = testing::random_behavior(rng, 4, 2, 50);
  const BehaviorBatch b = build_behavior_batch(trajs, RunningStats(4));
  const double mean_q = b.q_values.mean();
  for (int i = 0; i < 20; ++i) {
    ASSERT_NEAR(fitness_score(testing::random_matrix(rng, 2, 4), b, 0.5, 1e9), mean_q, 1e-6);
  }
}

TEST(FitnessScoreTest, LinearInQ) {
  CounterRng rng(6);
  const auto trajs = testing::random_behavior(rng, 3, 1, 30);
  BehaviorBatch b = build_behavior_batch(trajs, RunningStats(3));
  std::vector<Eigen::MatrixXd> dirs;
  for (int i = 0; i < 8; ++i) dirs.push_back(testing::random_matrix(rng, 1, 3));
  const RankedDirections base = rank_directions(dirs, b, 0.3, 0.4);
  b.q_values *= 2.5;
  const RankedDirections scaled = rank_directions(dirs, b, 0.3, 0.4);
  EXPECT_EQ(base.order, scaled.order);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(scaled.scores[i], 2.5 * base.scores[i], 1e-12);
}

TEST(RankTest, SingleDirection) {
  const std::vector<Eigen::MatrixXd> dirs{Eigen::MatrixXd::Ones(1, 2)};
  EXPECT_EQ(rank_directions(dirs, two_transition_fixture(), 1, 1).order, std::vector<int>{0});
}

TEST(RankTest, TiesKeepIndexOrder) {
  const std::vector<Eigen::MatrixXd> dirs(5, Eigen::MatrixXd::Ones(1, 2));
  EXPECT_EQ(rank_directions(dirs, two_transition_fixture(), 1, 1).order,
            (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(rank_by_scores({1, 3, 1, 3, 2}).order, (std::vector<int>{1, 3, 4, 0, 2}));
}

TEST(RankTest, AddingConstantKeepsOrder) {
  const std::vector<double> s{0.3, -1, 2, 0.3, 5};
  std::vector<double> shifted;
  for (double v : s) shifted.push_back(v + 100);
  EXPECT_EQ(rank_by_scores(s).order, rank_by_scores(shifted).order);
}

TEST(RankTest, MatchesBruteForceOracle) {
  CounterRng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);
    const int p = 1 + static_cast<int>(rng.next_u64() % 3);
    const int N = 1 + static_cast<int>(rng.next_u64() % 8);
    const int n_d = 1 + static_cast<int>(rng.next_u64() % 50);
    const auto trajs = testing::random_behavior(rng, n, p, n_d);
    std::vector<Eigen::MatrixXd> dirs;
    for (int k = 0; k < N; ++k) dirs.push_back(testing::random_matrix(rng, p, n));
    const double nu = 0.05 + rng.uniform(), h = 0.1 + 2 * rng.uniform();
    const RankedDirections r = rank_directions(dirs, build_behavior_batch(trajs, RunningStats(n)), nu, h);
    const auto oracle = testing::brute_force_scores(trajs, dirs, nu, h);
    for (int k = 0; k < N; ++k) {
      ASSERT_NEAR(r.scores[k], static_cast<double>(oracle[k]), 1e-10 * (1 + std::fabs(double(oracle[k]))));
    }
    ASSERT_EQ(r.order, testing::brute_force_order(oracle)) << "trial " << trial;
  }
}

RolloutSeeds seeds_for(int n) {
  RolloutSeeds s;
  for (int k = 0; k < n; ++k) s.per_direction.push_back(1000 + k);
  return s;
}

TEST(OnPolicyRankTest, ZeroRewardEnvKeepsIdentityOrder) {
  testing::ConstantRewardEnv env(0.0, 2, 1);
  CounterRng rng(2);
  std::vector<Eigen::MatrixXd> dirs;
  for (int k = 0; k < 4; ++k) dirs.push_back(testing::random_matrix(rng, 1, 2));
  const OnPolicyRanking r = rank_directions_onpolicy(dirs, env, Eigen::MatrixXd::Zero(1, 2), 0.1,
                                                     RunningStats(2), true, 10, seeds_for(4));
  EXPECT_EQ(r.ranked.order, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(r.rollouts.plus.size(), 4u);
  EXPECT_EQ(r.rollouts.minus.size(), 4u);
}

TEST(OnPolicyRankTest, ImprovingDirectionRanksFirst) {
  testing::TargetEnv env(Eigen::Vector2d(1, 1));
  std::vector<Eigen::MatrixXd> dirs(4, Eigen::MatrixXd::Zero(2, 2));
  dirs[2] = Eigen::MatrixXd::Identity(2, 2);
  const OnPolicyRanking r = rank_directions_onpolicy(dirs, env, Eigen::MatrixXd::Zero(2, 2), 0.5,
                                                     RunningStats(2), false, 5, seeds_for(4));
  EXPECT_EQ(r.ranked.order.front(), 2);
}

TEST(OnPolicyRankTest, ReplayOracleOnLqr) {
  const LqrEnv env(LqrSpec::benchmark());
  CounterRng rng(21);
  std::vector<Eigen::MatrixXd> dirs;
  for (int k = 0; k < 6; ++k) dirs.push_back(testing::random_matrix(rng, 3, 3));
  const Eigen::MatrixXd M = -0.02 * Eigen::MatrixXd::Identity(3, 3);
  RunningStats st(3);
  st.push(Eigen::Vector3d(1, 0, -1));
  st.push(Eigen::Vector3d(-1, 2, 1));
  const OnPolicyRanking r =
      rank_directions_onpolicy(dirs, env, M, 0.05, st, true, 50, seeds_for(6), 0.0, 3);

  std::vector<double> scores;
  for (int k = 0; k < 6; ++k) {
    auto e = env.clone();
    const double plus =
        rollout(*e, perturbed_policy(M, dirs[k], 0.05, 1, st).as_callable(), 50, 1000 + k).total_reward;
    const double minus =
        rollout(*e, perturbed_policy(M, dirs[k], 0.05, -1, st).as_callable(), 50, 1000 + k).total_reward;
    EXPECT_EQ(plus, r.rollouts.plus[k].total_reward);
    EXPECT_EQ(minus, r.rollouts.minus[k].total_reward);
    scores.push_back(std::max(plus, minus));
  }
  EXPECT_EQ(r.ranked.scores, scores);
  std::vector<long double> ls(scores.begin(), scores.end());
  EXPECT_EQ(r.ranked.order, testing::brute_force_order(ls));
}

}  // namespace
}  // namespace opes
