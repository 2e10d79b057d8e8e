#include "opes/lqr.hpp"

#include "opes/error.hpp"
#include "opes/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace opes {
namespace {

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace

void LqrSpec::validate() const {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw ConfigError("LQR: A must be square and non-empty");
  if (B.rows() != n || B.cols() == 0) throw ConfigError("LQR: B must be n x m");
  const auto m = B.cols();
  if (Q.rows() != n || Q.cols() != n) throw ConfigError("LQR: Q must be n x n");
  if (R.rows() != m || R.cols() != m) throw ConfigError("LQR: R must be m x m");
  if (!is_symmetric(Q)) throw ConfigError("LQR: Q must be symmetric");
  if (!is_symmetric(R)) throw ConfigError("LQR: R must be symmetric");
  if (min_eigenvalue(Q) < -1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    throw ConfigError("LQR: Q must be positive semidefinite");
  }
  if (min_eigenvalue(R) <= 0.0) throw ConfigError("LQR: R must be positive definite");
  if (!(process_noise_std >= 0.0) || !(init_state_std >= 0.0)) {
    throw ConfigError("LQR: noise standard deviations must be >= 0");
  }
  if (horizon_cap < 1) throw ConfigError("LQR: horizon_cap must be >= 1");
}

LqrSpec LqrSpec::benchmark() {
  LqrSpec spec;
  spec.A.resize(3, 3);
  spec.A << 1.01, 0.01, 0.0,
            0.01, 1.01, 0.01,
            0.0, 0.01, 1.01;
  spec.B = Eigen::MatrixXd::Identity(3, 3);
  spec.Q = 1e-3 * Eigen::MatrixXd::Identity(3, 3);
  spec.R = Eigen::MatrixXd::Identity(3, 3);
  return spec;
}

LqrEnv::LqrEnv(LqrSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Eigen::VectorXd LqrEnv::reset(std::uint64_t seed) {
  noise_key_ = derive_seed(seed, 0x1A7u);
  noise_counter_ = 0;
  CounterRng init(derive_seed(seed, 0x1B0u));
  Eigen::VectorXd x(state_dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = spec_.init_state_std * init.normal();
  return x;
}

StepResult LqrEnv::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  StepResult res;
  res.reward = -(x.dot(spec_.Q * x) + u.dot(spec_.R * u));
  res.next_state = spec_.A * x + spec_.B * u;
  if (spec_.process_noise_std > 0.0) {
    // One sub-stream per noise coordinate; the sequence depends only on the
    // reset seed and the step count, never on the actions taken.
    for (Eigen::Index i = 0; i < res.next_state.size(); ++i) {
      CounterRng w(counter_u64(noise_key_, noise_counter_++));
      res.next_state[i] += spec_.process_noise_std * w.normal();
    }
  }
  res.terminated = !(res.next_state.cwiseAbs().maxCoeff() <= kDivergenceBound);
  return res;
}

std::unique_ptr<Env> LqrEnv::clone() const { return std::make_unique<LqrEnv>(*this); }

std::unique_ptr<Env> lqr_env(const LqrSpec& spec) { return std::make_unique<LqrEnv>(spec); }

namespace {

// One Riccati map evaluation; also returns the associated gain.
Eigen::MatrixXd riccati_map(const LqrSpec& s, const Eigen::MatrixXd& P,
                            Eigen::MatrixXd* gain) {
  const Eigen::MatrixXd BtP = s.B.transpose() * P;
  const Eigen::MatrixXd K = (s.R + BtP * s.B).ldlt().solve(BtP * s.A);
  if (gain != nullptr) *gain = K;
  Eigen::MatrixXd next = s.Q + s.A.transpose() * P * s.A - s.A.transpose() * BtP.transpose() * K;
  return 0.5 * (next + next.transpose());
}

}  // namespace

RiccatiSolution riccati_optimal(const LqrSpec& spec) {
  spec.validate();
  constexpr int kMaxIterations = 100'000;
  constexpr double kTolerance = 1e-12;

  Eigen::MatrixXd P = spec.Q;
  for (int it = 1; it <= kMaxIterations; ++it) {
    Eigen::MatrixXd next = riccati_map(spec, P, nullptr);
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (!std::isfinite(change)) break;
    if (change < kTolerance) {
      RiccatiSolution sol;
      riccati_map(spec, P, &sol.gain);
      sol.P = P;
      sol.iterations = it;
      sol.optimal_avg_cost =
          spec.process_noise_std * spec.process_noise_std * P.trace();
      return sol;
    }
  }
  throw UnstabilizableError("Riccati iteration did not converge in " +
                            std::to_string(kMaxIterations) + " iterations");
}

double dare_residual(const LqrSpec& spec, const Eigen::MatrixXd& P) {
  return (riccati_map(spec, P, nullptr) - P).cwiseAbs().maxCoeff();
}

StabilityReport stability_check(const LqrSpec& spec, const Eigen::MatrixXd& gain) {
  if (gain.rows() != spec.action_dim() || gain.cols() != spec.state_dim()) {
    throw ConfigError("stability_check: gain must be m x n");
  }
  const Eigen::MatrixXd closed = spec.A - spec.B * gain;
  StabilityReport report;
  report.gain = gain;
  if (!closed.allFinite()) {
    report.spectral_radius = std::numeric_limits<double>::infinity();
    return report;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(closed, false);
  report.spectral_radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  report.stable = report.spectral_radius < 1.0 - 1e-12;
  return report;
}

}  // namespace opes
