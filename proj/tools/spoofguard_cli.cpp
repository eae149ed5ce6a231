#include "spoofguard/config.hpp"
#include "spoofguard/errors.hpp"
#include "spoofguard/sim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

namespace fs = std::filesystem;
using namespace spoofguard;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Domain: return 3;
    case ErrorCategory::Numerical: return 4;
    case ErrorCategory::Singularity: return 5;
    case ErrorCategory::Io: return 6;
  }
  return 1;
}

ScenarioConfig resolve_config(const std::string& config_path, const std::string& preset_name) {
  if (!config_path.empty() && !preset_name.empty())
    throw ConfigError("give --config or --preset, not both");
  if (!config_path.empty()) return load_config(config_path);
  return preset(preset_name.empty() ? "paper-v" : preset_name);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void print_metrics(const RunMetrics& r) {
  std::printf("steps                %ld\n", r.steps);
  std::printf("range_entry          %ld\n", r.range_entry);
  std::printf("detection            %ld\n", r.detection);
  std::printf("detection_latency    %ld\n", r.detection_latency);
  std::printf("k_esc                %d\n", r.k_esc);
  std::printf("exit_step            %ld\n", r.exit_step);
  std::printf("exit_within_deadline %d\n", int(r.exit_within_deadline));
  std::printf("max_error_attack     %.6g\n", r.max_error_attack);
  std::printf("alt_error            %.6g\n", r.alt_error);
  std::printf("goal_reached         %d\n", int(r.goal_reached));
  std::printf("false_alarm_steps    %ld / %ld\n", r.false_alarm_steps, r.clean_steps);
  std::printf("velocity_violations  %ld\n", r.velocity_violations);
  std::printf("input_violations     %ld\n", r.input_violations);
  if (!r.error.empty()) std::printf("error                %s\n", r.error.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPS-spoofing resilient UAV control simulator"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir = "out", trace_path;
  std::uint64_t seed = 1;
  std::uint64_t first_seed = 1;
  int n_seeds = 20;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Simulate one seeded scenario and write its trace");
  run->add_option("--config", config_path, "Scenario config (YAML)");
  run->add_option("--preset", preset_name, "Built-in scenario: paper-v, paper-v-near");
  run->add_option("--seed", seed, "Noise seed");
  run->add_option("--out", out_dir, "Output directory");

  auto* batch = app.add_subcommand("batch", "Monte Carlo over consecutive seeds");
  batch->add_option("--config", config_path, "Scenario config (YAML)");
  batch->add_option("--preset", preset_name, "Built-in scenario");
  batch->add_option("--seeds", n_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  batch->add_option("--first-seed", first_seed, "First seed");
  batch->add_option("--threads", threads, "Worker threads (0 = hardware)");
  batch->add_option("--out", out_dir, "Output directory");

  auto* metrics = app.add_subcommand("metrics", "Summarize a trace CSV");
  metrics->add_option("--trace", trace_path, "Trace CSV")->required();
  metrics->add_option("--config", config_path, "Config used for the run (goal, limits)");
  metrics->add_option("--preset", preset_name, "Preset used for the run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 64;
  }

  try {
    if (*run) {
      const ScenarioConfig cfg = resolve_config(config_path, preset_name);
      ensure_dir(out_dir);
      const ScenarioTrace trace = run_scenario(cfg, seed);
      const fs::path path = fs::path(out_dir) / (cfg.name + "_seed" + std::to_string(seed) + ".csv");
      export_trace(trace, path);
      std::printf("wrote %s (%zu steps)\n", path.string().c_str(), trace.records.size());
      if (!trace.records.empty()) print_metrics(compute_metrics(trace, MetricsParams::from(cfg)));
      if (!trace.error.empty()) {
        std::fprintf(stderr, "error: %s\n", trace.error.c_str());
        return 4;
      }
    } else if (*batch) {
      const ScenarioConfig cfg = resolve_config(config_path, preset_name);
      std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
      std::iota(seeds.begin(), seeds.end(), first_seed);
      const BatchSummary s = run_batch(cfg, seeds, threads);
      export_batch_summary(s, out_dir);
      std::printf("runs %zu failed %d detection %.3f escape %.3f error<=zeta %.3f goal %.3f "
                  "false_alarm/step %.4f\n",
                  s.runs.size(), s.failed_runs, s.detection_rate, s.escape_success_rate,
                  s.error_within_zeta_rate, s.goal_rate, s.false_alarm_rate);
      std::printf("wrote %s\n", (fs::path(out_dir) / "summary.csv").string().c_str());
    } else if (*metrics) {
      const ScenarioConfig cfg = resolve_config(config_path, preset_name);
      print_metrics(compute_metrics(read_trace(trace_path), MetricsParams::from(cfg)));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s error: %s\n", to_string(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
