// Command line driver: run | sweep | riccati | eval.

#include "opes/error.hpp"
#include "opes/harness.hpp"
#include "opes/linear_policy.hpp"
#include "opes/lqr.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;

std::string output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("OPES_OUTPUT_DIR")) return env;
  return "results";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw opes::ConfigError("cannot open " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw opes::ConfigError(path + ": " + e.what());
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> max_steps;
};

void apply(opes::ExperimentSpec& spec, const Overrides& o) {
  if (o.seed) spec.seeds = {*o.seed};
  if (o.max_steps) spec.max_env_steps = *o.max_steps;
}

int report_error(const char* type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy ranking for ARS/TRES: training, sweeps and LQR oracles"};
  app.require_subcommand(1);

  std::string config_path, grid_path, checkpoint_path, out_flag;
  int threads = 1;
  Overrides overrides;
  double low_pct = 10.0, high_pct = 90.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", overrides.seed, "Run a single seed instead of the configured list");
    cmd->add_option("--max-steps", overrides.max_steps, "Override max_env_steps");
    cmd->add_option("--out", out_flag, "Output directory (default $OPES_OUTPUT_DIR or ./results)");
  };

  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  add_common(run);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a hyperparameter grid");
  sweep_cmd->add_option("--config", config_path, "Base experiment config (JSON)")->required();
  sweep_cmd->add_option("--grid", grid_path, "Grid file: {\"grid\": {key: [values]}}")->required();
  sweep_cmd->add_option("--low", low_pct, "Lower band percentile");
  sweep_cmd->add_option("--high", high_pct, "Upper band percentile");
  add_common(sweep_cmd);

  auto* riccati = app.add_subcommand("riccati", "Print the optimal LQR gain and average cost");
  riccati->add_option("--config", config_path, "Experiment config or bare LQR spec (JSON)");

  auto* eval = app.add_subcommand("eval", "Evaluate a policy checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "Policy checkpoint file")->required();
  eval->add_option("--config", config_path, "Experiment config supplying env and horizon")->required();
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 64);
  }

  try {
    if (*run) {
      auto spec = opes::load_spec(config_path);
      apply(spec, overrides);
      const auto record = opes::run_experiment(spec, threads);
      const auto dir = output_dir(out_flag);
      opes::write_record(record, dir);
      json summary = opes::summary_json(record);
      summary.erase("spec");
      std::cout << summary.dump(2) << '\n';
    } else if (*sweep_cmd) {
      auto spec = opes::load_spec(config_path);
      apply(spec, overrides);
      const auto grid = opes::grid_from_json(read_json(grid_path));
      const auto result = opes::sweep(grid, spec, threads, low_pct, high_pct);
      const auto dir = output_dir(out_flag);
      opes::write_sweep(result, dir);
      for (std::size_t i = 0; i < result.records.size(); ++i) {
        const auto& rec = result.records[i];
        std::cout << result.combinations[i].dump() << " median_crossing="
                  << (rec.median_crossing ? std::to_string(*rec.median_crossing) : "not reached")
                  << " reached=" << rec.reach_count << '/' << rec.runs.size() << '\n';
      }
    } else if (*riccati) {
      opes::LqrSpec lqr = opes::LqrSpec::benchmark();
      if (!config_path.empty()) {
        const json j = read_json(config_path);
        lqr = opes::lqr_spec_from_json(j.contains("env") ? j.at("env") : j);
      }
      const auto sol = opes::riccati_optimal(lqr);
      const auto report = opes::stability_check(lqr, sol.gain);
      std::cout << json{{"gain", matrix_json(sol.gain)},
                        {"P", matrix_json(sol.P)},
                        {"optimal_avg_cost", sol.optimal_avg_cost},
                        {"spectral_radius", report.spectral_radius},
                        {"iterations", sol.iterations},
                        {"dare_residual", opes::dare_residual(lqr, sol.P)}}
                       .dump(2)
                << '\n';
    } else if (*eval) {
      auto spec = opes::load_spec(config_path);
      apply(spec, overrides);
      const auto policy = opes::load_checkpoint(checkpoint_path);
      const auto env = spec.env.make();
      const double reward =
          opes::evaluate_policy(*env, policy, spec.horizon(), spec.eval_trajectories,
                                spec.seeds.front(), spec.eval_per_step, threads);
      json out = {{"eval_reward", reward},
                  {"trajectories", spec.eval_trajectories},
                  {"per_step", spec.eval_per_step}};
      if (spec.env.is_lqr()) {
        const auto report = opes::stability_check(spec.env.lqr, -policy.raw_gain());
        out["spectral_radius"] = report.spectral_radius;
        out["stable"] = report.stable;
      }
      std::cout << out.dump(2) << '\n';
    }
  } catch (const opes::ConfigError& e) {
    return report_error("config", e.what(), 2);
  } catch (const opes::FormatError& e) {
    return report_error("format", e.what(), 3);
  } catch (const opes::UnstabilizableError& e) {
    return report_error("unstabilizable", e.what(), 4);
  } catch (const opes::UnsupportedMetricError& e) {
    return report_error("unsupported", e.what(), 4);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
