#pragma once

#include "spoofguard/alt.hpp"
#include "spoofguard/detector.hpp"
#include "spoofguard/escape.hpp"
#include "spoofguard/estimator.hpp"
#include "spoofguard/model.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spoofguard {

struct RobustGains {
  double kp = 0.2;
  double kd = 0.9;
  double v_cruise = 3.5;  // caps the proportional term at kd * v_cruise
  double u_max = 2.0;
};

/// PD-like tracking: clamp(kp * sat(p_goal - p_hat) - kd * v_hat, u_max), where
/// sat limits |kp * (p_goal - p_hat)| to kd * v_cruise.
Vec robust_control(const SystemModel& model, const Vec& x_hat, const Vec& x_goal,
                   const RobustGains& gains);

struct AttackerConfig {
  bool enabled = true;
  Vec position;  // n_pos
  double eta = 200.0;
  Vec d;
  double r_effect = 30.0;
  // Spoofing starts once the true UAV distance first drops below this.
  double activation_distance = std::numeric_limits<double>::infinity();
  // Per-step position offsets; the last entry repeats.
  std::vector<Vec> motion;
};

struct EscapeConfig {
  EscController controller = EscController::Potential;
  double zeta = 3.0;
  double alpha = 0.01;
  double beta = 50000.0;
  double gamma = 0.95;
  int horizon_offset = 40;
  int min_horizon = 20;
  Vec q_diag;
  Vec r_diag;
  double v_max = 5.0;
  double u_max = 2.0;
  int k_esc_override = -1;  // < 0: compute from the covariance recursion
  OptimizerSettings solver;
  OptimizerSettings resolve;  // budget for warm-started receding-horizon re-solves
};

struct ScenarioConfig {
  std::string name = "custom";
  SystemModel model;
  Vec start;
  Vec goal;
  double goal_tolerance = 5.0;
  int steps = 1000;
  std::uint64_t seed = 1;
  AttackerConfig attacker;
  double detector_alpha = 0.01;
  double detector_delta = 0.15;
  double P0_scale = 1.0;
  AltSettings alt;
  EscapeConfig escape;
  RobustGains robust;
  bool stop_after_exit = false;  // end the run a few steps after the first exit

  void validate() const;
};

struct StepRecord {
  long k = 0;
  Vec x;
  Vec x_hat1;
  Vec x_hat2;
  Vec y_G, y_I, y_S;
  Vec d_hat;
  double S = 0.0;
  double threshold = 0.0;
  ControlMode mode = ControlMode::Robust;
  Vec u;
  bool in_range = false;
  Vec attacker_true;  // true spoofer position, n_pos
  Vec attacker_hat;   // [position; power], NaN when not tracking
  Vec attacker_var;
  double trace_P1 = 0.0;
  double trace_P2 = 0.0;
  int solver_iterations = 0;
  double solver_grad = 0.0;
  double solver_violation = 0.0;
  int solver_feasible = -1;  // -1: no solve this step
};

struct Event {
  std::string name;
  long k = 0;
  double value = 0.0;
};

struct ScenarioTrace {
  Index n = 0, m_u = 0, m_G = 0, m_I = 0, m_S = 0, n_pos = 0;
  std::vector<StepRecord> records;
  std::vector<Event> events;
  std::string error;  // non-empty when the run aborted
};

/// Runs the closed loop. Identical (config, seed) gives a bit-identical trace.
/// Numerical failures abort the loop; the partial trace is returned with
/// `error` set.
ScenarioTrace run_scenario(const ScenarioConfig& config, std::uint64_t seed);

struct RunMetrics {
  std::uint64_t seed = 0;
  long steps = 0;
  bool failed = false;
  std::string error;
  long range_entry = -1;
  long detection = -1;
  long detection_latency = -1;
  int k_esc = -1;
  long exit_step = -1;
  bool exit_within_deadline = false;
  double max_error_attack = 0.0;
  bool error_within_zeta = false;
  bool goal_reached = false;
  long false_alarm_steps = 0;  // Emergency steps with no spoofing active
  long clean_steps = 0;        // steps with no spoofing active
  double alt_error = -1.0;  // tracker position error 100 steps after detection (or last update)
  long velocity_violations = 0;
  long input_violations = 0;
};

struct MetricsParams {
  Vec goal;
  double goal_tolerance = 5.0;
  double zeta = 3.0;  // bound on |x - x_hat| over the first attack episode
  double v_max = 5.0;
  double u_max = 2.0;
  std::vector<Index> pos_index{0, 1};
  std::vector<Index> vel_index{2, 3};

  static MetricsParams from(const ScenarioConfig& config);
};

/// Metrics of one run. Throws DomainError on an empty trace.
RunMetrics compute_metrics(const ScenarioTrace& trace, const MetricsParams& params);

struct BatchSummary {
  std::vector<RunMetrics> runs;
  double detection_rate = 0.0;
  double mean_detection_latency = 0.0;
  double escape_success_rate = 0.0;  // exit within deadline, among detected runs
  double error_within_zeta_rate = 0.0;
  double goal_rate = 0.0;
  double false_alarm_rate = 0.0;     // per clean step
  double p50_max_error = 0.0;
  double p90_max_error = 0.0;
  int failed_runs = 0;
};

/// Runs one scenario per seed (in parallel when threads != 1) and aggregates.
BatchSummary run_batch(const ScenarioConfig& config, std::span<const std::uint64_t> seeds,
                       unsigned threads = 0);

/// Writes `path` (per-step CSV) and `<stem>.events.csv` beside it.
void export_trace(const ScenarioTrace& trace, const std::filesystem::path& path);

/// Reads back a trace written by export_trace (events sidecar optional).
ScenarioTrace read_trace(const std::filesystem::path& path);

std::filesystem::path events_path_for(const std::filesystem::path& trace_path);

/// Header line of the trace CSV for the given dimensions.
std::string trace_header(const ScenarioTrace& trace);

/// Writes `runs.csv` (one row per seed) and `summary.csv` (metric,value) into `dir`.
void export_batch_summary(const BatchSummary& summary, const std::filesystem::path& dir);

}  // namespace spoofguard
