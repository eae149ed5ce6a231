#include "spoofguard/sim.hpp"

#include "spoofguard/errors.hpp"
#include "spoofguard/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace spoofguard {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Symmetric square root; valid for PSD covariances (Sigma_w may be singular).
Mat covariance_factor(const Mat& S) {
  if (S.rows() == 0) return S;
  Eigen::SelfAdjointEigenSolver<Mat> eig(S);
  return eig.operatorSqrt();
}

Vec draw(const NoiseSource& src, NoiseStream stream, long k, const Mat& factor) {
  Vec z(factor.cols());
  for (Index i = 0; i < z.size(); ++i)
    z(i) = src.normal(stream, static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(i));
  return factor * z;
}

void add_event(ScenarioTrace& trace, std::string name, long k, double value = 0.0) {
  trace.events.push_back(Event{std::move(name), k, value});
}

EscapeProblem escape_template(const ScenarioConfig& cfg) {
  const auto& e = cfg.escape;
  EscapeProblem p;
  p.Q = e.q_diag.asDiagonal();
  p.R = e.r_diag.asDiagonal();
  p.x_goal = cfg.goal;
  p.r_effect = cfg.attacker.r_effect;
  p.beta = e.beta;
  p.gamma = e.gamma;
  p.v_max = e.v_max;
  p.u_max = e.u_max;
  p.min_horizon = e.min_horizon;
  return p;
}

}  // namespace

Vec robust_control(const SystemModel& model, const Vec& x_hat, const Vec& x_goal,
                   const RobustGains& g) {
  const Vec e = position_of(model, x_goal) - position_of(model, x_hat);
  Vec pull = g.kp * e;
  const double cap = g.kd * g.v_cruise;
  if (pull.norm() > cap) pull *= cap / pull.norm();
  Vec u = pull - g.kd * velocity_of(model, x_hat);
  if (u.norm() > g.u_max) u *= g.u_max / u.norm();
  return u;
}

void ScenarioConfig::validate() const {
  model.validate();
  const Index n = model.n();
  if (model.m_u() != model.n_pos())
    throw ConfigError("scenario: inputs must act on the velocity components (m_u == n_pos)");
  if (start.size() != n || goal.size() != n) throw ConfigError("scenario: start/goal must be n-vectors");
  if (steps < 0) throw ConfigError("scenario: steps must be >= 0");
  if (attacker.position.size() != model.n_pos())
    throw ConfigError("scenario: attacker position needs n_pos entries");
  if (attacker.d.size() != model.m_G()) throw ConfigError("scenario: attacker d needs m_G entries");
  if (!(attacker.eta > 0.0) || !(attacker.r_effect > 0.0))
    throw ConfigError("scenario: attacker eta and r_effect must be positive");
  for (const auto& step : attacker.motion)
    if (step.size() != model.n_pos()) throw ConfigError("scenario: attacker motion entries need n_pos values");
  DetectorState det;
  det.alpha = detector_alpha;
  det.delta = detector_delta;
  det.df = static_cast<int>(model.m_G());
  spoofguard::validate(det);
  if (!(P0_scale > 0.0)) throw ConfigError("scenario: P0_scale must be positive");
  if (alt.window < 1) throw ConfigError("scenario: ALT window must be >= 1");
  if (alt.reuse_steps < 0) throw ConfigError("scenario: ALT reuse_steps must be >= 0");
  if (alt.prior_offset.size() != model.n_pos() || alt.prior_std.size() != model.n_pos() + 1 ||
      alt.process_std.size() != model.n_pos() + 1)
    throw ConfigError("scenario: ALT prior_offset/prior_std/process_std have wrong sizes");
  if (!(alt.prior_power > 0.0)) throw ConfigError("scenario: ALT prior_power must be positive");
  if (escape.q_diag.size() != n || escape.r_diag.size() != model.m_u())
    throw ConfigError("scenario: escape q_diag needs n entries and r_diag m_u entries");
  if (!(escape.zeta > 0.0)) throw ConfigError("scenario: escape zeta must be positive");
  if (!(escape.alpha > 0.0 && escape.alpha < 1.0)) throw ConfigError("scenario: escape alpha must lie in (0, 1)");
  if (escape.horizon_offset < 0) throw ConfigError("scenario: escape horizon_offset must be >= 0");
  EscapeProblem p = escape_template(*this);
  p.N = escape.horizon_offset;
  p.validate();
  if (!(robust.kp > 0.0 && robust.kd > 0.0 && robust.v_cruise > 0.0 && robust.u_max > 0.0))
    throw ConfigError("scenario: robust gains must be positive");
}

ScenarioTrace run_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const SystemModel& m = cfg.model;
  const NoiseSource noise(seed);
  const Mat Lw = covariance_factor(m.Sigma_w);
  const Mat LG = covariance_factor(m.Sigma_G);
  const Mat LI = covariance_factor(m.Sigma_I);
  const Mat LS = covariance_factor(m.Sigma_S);

  ScenarioTrace trace;
  trace.n = m.n();
  trace.m_u = m.m_u();
  trace.m_G = m.m_G();
  trace.m_I = m.m_I();
  trace.m_S = m.m_S();
  trace.n_pos = m.n_pos();
  trace.records.reserve(static_cast<std::size_t>(cfg.steps));

  Attacker attacker;
  attacker.x_a = Vec::Zero(m.n());
  for (Index i = 0; i < m.n_pos(); ++i) attacker.x_a(m.pos_index[i]) = cfg.attacker.position(i);
  attacker.eta = cfg.attacker.eta;
  attacker.d = cfg.attacker.d;
  attacker.r_effect = cfg.attacker.r_effect;
  bool activated = false;

  TrueState x{cfg.start, 0};
  const Mat P0 = cfg.P0_scale * Mat::Identity(m.n(), m.n());
  EstimatorState est1{cfg.start, P0, EstimatorMode::GpsImu};
  EstimatorState est2 = est1;

  DetectorState det;
  det.alpha = cfg.detector_alpha;
  det.delta = cfg.detector_delta;
  det.df = static_cast<int>(m.m_G());
  const double thr = threshold(det);

  EscapeProblem prob = escape_template(cfg);
  std::optional<AttackerEstimate> tracker;
  std::optional<ControlPlan> plan;
  Vec u = Vec::Zero(m.m_u());
  bool prev_in_range = false;
  bool goal_logged = false;
  long first_entry = -1;
  long first_detection = -1;  // first detection at or after the first range entry
  long last_tracked = 0;
  long stop_at = -1;

  try {
    for (long k = 1; k <= cfg.steps; ++k) {
      if (!cfg.attacker.motion.empty()) {
        const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k - 1), cfg.attacker.motion.size() - 1);
        for (Index i = 0; i < m.n_pos(); ++i) attacker.x_a(m.pos_index[i]) += cfg.attacker.motion[idx](i);
      }

      const Vec w = draw(noise, NoiseStream::Process, k, Lw);
      const TrueState x_next = step_dynamics(m, x, u, w);
      const double dist = position_distance(m, attacker.x_a, x_next.x);
      if (cfg.attacker.enabled && dist <= cfg.attacker.activation_distance) activated = true;
      const bool spoofed = cfg.attacker.enabled && activated && in_range(m, x_next.x, attacker);

      const MeasurementNoise v{draw(noise, NoiseStream::Gps, k, LG), draw(noise, NoiseStream::Imu, k, LI),
                               draw(noise, NoiseStream::Rssi, k, LS)};
      const SensorBundle y = measure(m, x_next, x, attacker, spoofed, v);

      if (spoofed && !prev_in_range) {
        add_event(trace, "range_entry", k);
        if (first_entry < 0) first_entry = k;
      }
      if (!spoofed && prev_in_range) add_event(trace, "range_exit", k);
      prev_in_range = spoofed;

      // Detection always runs on Est. 1's previous estimate.
      const Vec d_hat = estimate_attack(y.y_G, est1.x_hat, u, m);
      const Mat P_d = innovation_covariance(est1.P, m);
      const ControlMode prev_mode = det.mode;
      det = apply_decision(cusum_step(det, d_hat, P_d), k);

      StepRecord rec;
      rec.k = k;
      Vec u_next;
      if (det.mode == ControlMode::Emergency) {
        const bool onset = prev_mode == ControlMode::Robust;
        if (onset) {
          prob.k_a = k;
          prob.k_esc = cfg.escape.k_esc_override >= 0
                           ? cfg.escape.k_esc_override
                           : escape_time(est2.P, cfg.escape.zeta, cfg.escape.alpha, m);
          prob.N = prob.k_esc + cfg.escape.horizon_offset;
          plan.reset();
          add_event(trace, "detection", k);
          add_event(trace, "k_esc", k, prob.k_esc);
          add_event(trace, "deadline", prob.k_a + prob.k_esc);
          if (first_detection < 0 && first_entry >= 0) first_detection = k;
        }
        est1.mode = EstimatorMode::ImuOnly;
        est1 = update(est1, u, y.y_G, y.y_I, m);
        est2.mode = EstimatorMode::ImuOnly;
        est2 = update(est2, u, y.y_G, y.y_I, m);

        const Vec uav_pos = position_of(m, est2.x_hat);
        if (!tracker || (onset && k - last_tracked > cfg.alt.reuse_steps))
          tracker = initial_attacker_estimate(uav_pos, cfg.alt);
        else if (onset)
          tracker->window.clear();
        last_tracked = k;
        tracker = track(*tracker, y.y_S, uav_pos, m);

        const OptimizerSettings& solver = plan ? cfg.escape.resolve : cfg.escape.solver;
        const ControlPlan* warm = plan ? &*plan : nullptr;
        ControlPlan next_plan;
        switch (cfg.escape.controller) {
          case EscController::Potential:
            next_plan = solve_escape_potential(est2, *tracker, prob, k, m, solver, warm);
            break;
          case EscController::Tube:
            next_plan = solve_escape_tube(est2, *tracker, prob, k, m, solver, warm);
            break;
          case EscController::TubeWithFallback:
            next_plan = solve_escape_tube(est2, *tracker, prob, k, m, solver, warm);
            if (!next_plan.feasible)
              next_plan = solve_escape_potential(est2, *tracker, prob, k, m, solver, warm);
            break;
        }
        plan = std::move(next_plan);
        u_next = plan->u_seq.front();
        rec.solver_iterations = plan->stats.iterations;
        rec.solver_grad = plan->stats.grad_norm;
        rec.solver_violation = plan->stats.violation;
        rec.solver_feasible = plan->feasible ? 1 : 0;
      } else {
        if (prev_mode == ControlMode::Emergency) add_event(trace, "mode_return", k);
        est1.mode = EstimatorMode::GpsImu;
        est1 = update(est1, u, y.y_G, y.y_I, m);
        est2 = est1;
        plan.reset();
        u_next = robust_control(m, est1.x_hat, cfg.goal, cfg.robust);
      }

      rec.x = x_next.x;
      rec.x_hat1 = est1.x_hat;
      rec.x_hat2 = est2.x_hat;
      rec.y_G = y.y_G;
      rec.y_I = y.y_I;
      rec.y_S = y.y_S;
      rec.d_hat = d_hat;
      rec.S = det.S;
      rec.threshold = thr;
      rec.mode = det.mode;
      rec.u = u_next;
      rec.in_range = spoofed;
      rec.attacker_true = position_of(m, attacker.x_a);
      if (tracker) {
        rec.attacker_hat = tracker->z_hat;
        rec.attacker_var = tracker->P_a.diagonal();
      } else {
        rec.attacker_hat = Vec::Constant(m.n_pos() + 1, kNaN);
        rec.attacker_var = Vec::Constant(m.n_pos() + 1, kNaN);
      }
      rec.trace_P1 = est1.P.trace();
      rec.trace_P2 = est2.P.trace();
      trace.records.push_back(std::move(rec));

      if (!goal_logged &&
          position_distance(m, x_next.x, cfg.goal) <= cfg.goal_tolerance) {
        add_event(trace, "goal_reached", k);
        goal_logged = true;
      }

      x = x_next;
      u = u_next;

      if (cfg.stop_after_exit) {
        if (stop_at < 0 && first_detection >= 0 && !spoofed && k > first_detection) stop_at = k + 5;
        if (stop_at > 0 && k >= stop_at) break;
      }
    }
  } catch (const Error& e) {
    trace.error = std::string(to_string(e.category())) + ": " + e.what();
  }
  return trace;
}

MetricsParams MetricsParams::from(const ScenarioConfig& cfg) {
  MetricsParams p;
  p.goal = cfg.goal;
  p.goal_tolerance = cfg.goal_tolerance;
  p.zeta = cfg.escape.zeta;
  p.v_max = cfg.escape.v_max;
  p.u_max = std::max(cfg.escape.u_max, cfg.robust.u_max);
  p.pos_index = cfg.model.pos_index;
  p.vel_index = cfg.model.vel_index;
  return p;
}

RunMetrics compute_metrics(const ScenarioTrace& trace, const MetricsParams& params) {
  if (trace.records.empty()) throw DomainError("compute_metrics: trace has no simulated steps");
  RunMetrics r;
  r.steps = static_cast<long>(trace.records.size());
  r.failed = !trace.error.empty();
  r.error = trace.error;

  std::size_t entry_idx = trace.records.size();
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    if (trace.records[i].in_range) {
      entry_idx = i;
      r.range_entry = trace.records[i].k;
      break;
    }
  }
  // First Robust -> Emergency switch at or after range entry.
  std::size_t det_idx = trace.records.size();
  for (std::size_t i = entry_idx; i < trace.records.size(); ++i) {
    const bool prev_emergency = i > 0 && trace.records[i - 1].mode == ControlMode::Emergency;
    if (trace.records[i].mode == ControlMode::Emergency && (!prev_emergency || i == entry_idx)) {
      det_idx = i;
      r.detection = trace.records[i].k;
      r.detection_latency = r.detection - r.range_entry;
      break;
    }
  }
  if (r.detection >= 0) {
    for (const auto& e : trace.events)
      if (e.name == "k_esc" && e.k <= r.detection) r.k_esc = static_cast<int>(std::lround(e.value));
    const long k_attack = [&] {
      long k_a = r.detection;
      for (const auto& e : trace.events)
        if (e.name == "detection" && e.k <= r.detection) k_a = e.k;
      return k_a;
    }();
    std::size_t exit_idx = trace.records.size();
    for (std::size_t i = det_idx + 1; i < trace.records.size(); ++i) {
      if (!trace.records[i].in_range) {
        exit_idx = i;
        r.exit_step = trace.records[i].k;
        break;
      }
    }
    r.exit_within_deadline = r.exit_step >= 0 && r.k_esc >= 0 && r.exit_step <= k_attack + r.k_esc;
    const std::size_t end = std::min(exit_idx, trace.records.size() - 1);
    for (std::size_t i = det_idx; i <= end; ++i) {
      const auto& rec = trace.records[i];
      r.max_error_attack = std::max(r.max_error_attack, (rec.x - rec.x_hat2).norm());
    }
    r.error_within_zeta = r.max_error_attack <= params.zeta;

    const long alt_end = r.detection + 100;
    for (std::size_t i = det_idx; i < trace.records.size() && trace.records[i].k <= alt_end; ++i) {
      const auto& rec = trace.records[i];
      if (rec.mode != ControlMode::Emergency || !rec.attacker_hat.allFinite()) continue;
      r.alt_error = (rec.attacker_hat.head(trace.n_pos) - rec.attacker_true).norm();
    }
  }

  for (const auto& rec : trace.records) {
    if (!rec.in_range) {
      ++r.clean_steps;
      if (rec.mode == ControlMode::Emergency) ++r.false_alarm_steps;
    }
    const Vec vel = select(rec.x, params.vel_index);
    if (vel.norm() > params.v_max + 1e-6) ++r.velocity_violations;
    if (rec.u.norm() > params.u_max + 1e-6) ++r.input_violations;
    if (params.goal.size() == rec.x.size() &&
        (select(rec.x, params.pos_index) - select(params.goal, params.pos_index)).norm() <=
            params.goal_tolerance)
      r.goal_reached = true;
  }
  return r;
}

BatchSummary run_batch(const ScenarioConfig& config, std::span<const std::uint64_t> seeds,
                       unsigned threads) {
  if (seeds.empty()) throw DomainError("run_batch: at least one seed is required");
  config.validate();
  const MetricsParams params = MetricsParams::from(config);
  BatchSummary summary;
  summary.runs.resize(seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      RunMetrics r;
      try {
        r = compute_metrics(run_scenario(config, seeds[i]), params);
      } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
      }
      r.seed = seeds[i];
      summary.runs[i] = std::move(r);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::vector<double> errors;
  long detected = 0, escaped = 0, within = 0, goal = 0, alarms = 0, clean = 0;
  double latency = 0.0;
  for (const auto& r : summary.runs) {
    if (r.failed) ++summary.failed_runs;
    alarms += r.false_alarm_steps;
    clean += r.clean_steps;
    if (r.goal_reached) ++goal;
    if (r.detection < 0) continue;
    ++detected;
    latency += static_cast<double>(r.detection_latency);
    if (r.exit_within_deadline) ++escaped;
    if (r.error_within_zeta) ++within;
    errors.push_back(r.max_error_attack);
  }
  const double total = static_cast<double>(summary.runs.size());
  summary.detection_rate = static_cast<double>(detected) / total;
  summary.goal_rate = static_cast<double>(goal) / total;
  summary.false_alarm_rate = clean > 0 ? static_cast<double>(alarms) / static_cast<double>(clean) : 0.0;
  if (detected > 0) {
    summary.mean_detection_latency = latency / static_cast<double>(detected);
    summary.escape_success_rate = static_cast<double>(escaped) / static_cast<double>(detected);
    summary.error_within_zeta_rate = static_cast<double>(within) / static_cast<double>(detected);
    std::sort(errors.begin(), errors.end());
    auto pct = [&](double q) {
      const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(errors.size()))) - 1;
      return errors[std::min(idx, errors.size() - 1)];
    };
    summary.p50_max_error = pct(0.5);
    summary.p90_max_error = pct(0.9);
  }
  return summary;
}

}  // namespace spoofguard
