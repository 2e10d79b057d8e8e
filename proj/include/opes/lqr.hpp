#pragma once

#include "opes/env.hpp"

#include <Eigen/Core>

#include <memory>

namespace opes {

// Episodes terminate once any state coordinate exceeds this magnitude.
inline constexpr double kDivergenceBound = 1e6;

// x_{t+1} = A x_t + B u_t + w_t with per-step cost x'Qx + u'Ru.
struct LqrSpec {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  double process_noise_std = 1.0;
  double init_state_std = 1.0;
  int horizon_cap = 1000;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int action_dim() const { return static_cast<int>(B.cols()); }

  // Throws ConfigError on inconsistent shapes, asymmetric or indefinite Q,
  // or R that is not positive definite.
  void validate() const;

  // The 3-state benchmark instance: tridiagonal A (1.01 / 0.01), B = I,
  // Q = 1e-3 I, R = I.
  static LqrSpec benchmark();
};

// Reward is the negated quadratic cost, so maximizing return minimizes cost.
class LqrEnv final : public Env {
 public:
  explicit LqrEnv(LqrSpec spec);

  std::string name() const override { return "lqr"; }
  int state_dim() const override { return spec_.state_dim(); }
  int action_dim() const override { return spec_.action_dim(); }
  int horizon_cap() const override { return spec_.horizon_cap; }

  Eigen::VectorXd reset(std::uint64_t seed) override;
  StepResult step(const Eigen::VectorXd& state,
                  const Eigen::VectorXd& action) override;
  std::unique_ptr<Env> clone() const override;

  const LqrSpec& spec() const noexcept { return spec_; }

 private:
  LqrSpec spec_;
  std::uint64_t noise_key_ = 0;
  std::uint64_t noise_counter_ = 0;
};

std::unique_ptr<Env> lqr_env(const LqrSpec& spec);

struct RiccatiSolution {
  Eigen::MatrixXd gain;  // K, control u = -K x
  Eigen::MatrixXd P;
  double optimal_avg_cost = 0.0;  // sigma_w^2 * tr(P)
  int iterations = 0;
};

// Fixed-point iteration on the discrete algebraic Riccati equation until the
// max-norm change drops below 1e-12. Throws UnstabilizableError after 1e5
// iterations without convergence.
RiccatiSolution riccati_optimal(const LqrSpec& spec);

// Max-norm of the DARE residual at P.
double dare_residual(const LqrSpec& spec, const Eigen::MatrixXd& P);

struct StabilityReport {
  Eigen::MatrixXd gain;
  double spectral_radius = 0.0;
  bool stable = false;
};

// Spectral radius of A - B K from a general (real Schur based) eigensolver.
StabilityReport stability_check(const LqrSpec& spec, const Eigen::MatrixXd& gain);

}  // namespace opes
