#pragma once

#include "opes/ranking.hpp"
#include "opes/rng.hpp"
#include "opes/rollout.hpp"

#include <vector>

namespace opes::testing {

inline Trajectory make_trajectory(const std::vector<double>& rewards, int state_dim = 1,
                                  double state_value = 0.0) {
  Trajectory t;
  for (double r : rewards) {
    Transition tr;
    tr.state = Eigen::VectorXd::Constant(state_dim, state_value);
    tr.action = Eigen::VectorXd::Zero(1);
    tr.reward = r;
    tr.next_state = tr.state;
    t.transitions.push_back(tr);
    t.total_reward += r;
  }
  return t;
}

inline Eigen::MatrixXd random_matrix(CounterRng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Random behavior data with N_d transitions spread over a few trajectories.
inline std::vector<Trajectory> random_behavior(CounterRng& rng, int n, int p, int n_d) {
  std::vector<Trajectory> trajs;
  int left = n_d;
  while (left > 0) {
    const int len = std::min(left, 1 + static_cast<int>(rng.next_u64() % 20));
    Trajectory t;
    for (int k = 0; k < len; ++k) {
      Transition tr;
      tr.state = random_matrix(rng, n, 1).col(0) * 2.0;
      tr.action = Eigen::VectorXd::Zero(p);
      tr.reward = 3.0 * rng.normal();
      tr.next_state = tr.state;
      t.transitions.push_back(tr);
      t.total_reward += tr.reward;
    }
    trajs.push_back(std::move(t));
    left -= len;
  }
  return trajs;
}

// Kernel-weighted fitness written out directly from raw trajectories, in long double.
inline std::vector<long double> brute_force_scores(const std::vector<Trajectory>& trajs,
                                                   const std::vector<Eigen::MatrixXd>& dirs,
                                                   double nu, double h) {
  long double total = 0.0L;
  std::size_t count = 0;
  for (const auto& t : trajs) {
    for (const auto& tr : t.transitions) total += tr.reward;
    count += t.size();
  }
  const long double eta = total / static_cast<long double>(count);
  std::vector<long double> q;
  std::vector<Eigen::VectorXd> states;
  for (const auto& t : trajs) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      long double acc = 0.0L;
      for (std::size_t k = i; k < t.size(); ++k) acc += t.transitions[k].reward - eta;
      q.push_back(acc);
      states.push_back(t.transitions[i].state);
    }
  }
  std::vector<long double> scores;
  for (const auto& d : dirs) {
    long double s = 0.0L;
    for (std::size_t t = 0; t < q.size(); ++t) {
      long double gap2 = 0.0L;
      for (Eigen::Index r = 0; r < d.rows(); ++r) {
        long double a = 0.0L;
        for (Eigen::Index c = 0; c < d.cols(); ++c)
          a += static_cast<long double>(nu) * d(r, c) * states[t][c];
        gap2 += a * a;
      }
      s += std::exp(-gap2 / (static_cast<long double>(h) * h)) * q[t];
    }
    scores.push_back(s / static_cast<long double>(q.size()));
  }
  return scores;
}

// Position of each index when sorting by score descending, lower index first on ties.
inline std::vector<int> brute_force_order(const std::vector<long double>& scores) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    int pos = 0;
    for (int j = 0; j < n; ++j) {
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++pos;
    }
    order[pos] = i;
  }
  return order;
}

}  // namespace opes::testing
