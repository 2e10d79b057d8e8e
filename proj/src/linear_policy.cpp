#include "opes/linear_policy.hpp"

#include "opes/error.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace opes {

Eigen::VectorXd normalize_state(const RunningStats& stats, const Eigen::VectorXd& s) {
  if (s.size() != stats.dim()) throw ConfigError("normalize_state: dimension mismatch");
  const Eigen::VectorXd sd = stats.stddev().cwiseMax(kStdFloor);
  return (s - stats.mean()).cwiseQuotient(sd);
}

LinearPolicy::LinearPolicy(Eigen::MatrixXd M, const RunningStats& stats, bool normalize)
    : M_(std::move(M)), normalize_(normalize), stats_(stats) {
  if (stats_.dim() != M_.cols()) {
    throw ConfigError("LinearPolicy: statistics dimension does not match M columns");
  }
  inv_std_ = stats_.stddev().cwiseMax(kStdFloor).cwiseInverse();
}

LinearPolicy::LinearPolicy(Eigen::MatrixXd M)
    : LinearPolicy(M, RunningStats(static_cast<int>(M.cols())), false) {}

Eigen::VectorXd LinearPolicy::operator()(const Eigen::VectorXd& s) const {
  if (s.size() != M_.cols()) throw ConfigError("LinearPolicy: state dimension mismatch");
  if (!normalize_) return M_ * s;
  return M_ * (s - stats_.mean()).cwiseProduct(inv_std_);
}

Eigen::MatrixXd LinearPolicy::raw_gain() const {
  if (!normalize_) return M_;
  return M_ * inv_std_.asDiagonal();
}

Eigen::VectorXd LinearPolicy::raw_offset() const {
  if (!normalize_) return Eigen::VectorXd::Zero(M_.rows());
  return -(raw_gain() * stats_.mean());
}

Policy LinearPolicy::as_callable() const {
  return [self = *this](const Eigen::VectorXd& s) { return self(s); };
}

LinearPolicy perturbed_policy(const Eigen::MatrixXd& M, const Eigen::MatrixXd& delta,
                              double nu, int sign, const RunningStats& stats,
                              bool normalize) {
  if (M.rows() != delta.rows() || M.cols() != delta.cols()) {
    throw ConfigError("perturbed_policy: delta shape does not match M");
  }
  if (sign != 1 && sign != -1) throw ConfigError("perturbed_policy: sign must be +1 or -1");
  return LinearPolicy(M + (sign * nu) * delta, stats, normalize);
}

namespace {

constexpr const char* kCheckpointTag = "opes-policy";
constexpr const char* kCheckpointVersion = "v1";

void write_row(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  out << '\n';
}

Eigen::VectorXd read_values(std::istream& in, Eigen::Index count, const char* what) {
  Eigen::VectorXd v(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> v[i])) throw FormatError(std::string("checkpoint: truncated ") + what);
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const LinearPolicy& policy) {
  const auto& M = policy.matrix();
  const auto& stats = policy.stats();
  out.precision(std::numeric_limits<double>::max_digits10);
  out << kCheckpointTag << ' ' << kCheckpointVersion << '\n';
  out << M.rows() << ' ' << M.cols() << ' ' << stats.count() << ' '
      << (policy.normalizes() ? 1 : 0) << '\n';
  for (Eigen::Index r = 0; r < M.rows(); ++r) write_row(out, M.row(r).transpose());
  write_row(out, stats.mean());
  write_row(out, stats.diag_var());
}

LinearPolicy read_checkpoint(std::istream& in) {
  std::string tag, version;
  if (!(in >> tag >> version) || tag != kCheckpointTag) {
    throw FormatError("checkpoint: missing header");
  }
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + version);
  }
  long rows = 0, cols = 0;
  std::uint64_t count = 0;
  int normalize = 0;
  if (!(in >> rows >> cols >> count >> normalize) || rows <= 0 || cols <= 0) {
    throw FormatError("checkpoint: bad dimensions line");
  }
  Eigen::VectorXd flat = read_values(in, rows * cols, "matrix");
  Eigen::MatrixXd M(rows, cols);
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) M(r, c) = flat[r * cols + c];
  }
  Eigen::VectorXd mean = read_values(in, cols, "mean");
  Eigen::VectorXd var = read_values(in, cols, "variance");
  return LinearPolicy(std::move(M), RunningStats::from_moments(count, std::move(mean), var),
                      normalize != 0);
}

void save_checkpoint(const std::string& path, const LinearPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_checkpoint(out, policy);
}

LinearPolicy load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace opes
