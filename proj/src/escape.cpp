#include "spoofguard/escape.hpp"

#include "spoofguard/errors.hpp"
#include "spoofguard/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spoofguard {

const char* to_string(EscController c) {
  switch (c) {
    case EscController::Tube: return "tube";
    case EscController::Potential: return "potential";
    case EscController::TubeWithFallback: return "tube_with_fallback";
  }
  return "unknown";
}

void EscapeProblem::validate() const {
  if (k_esc < 0 || N < k_esc) throw ConfigError("escape problem: need N >= k_esc >= 0");
  if (!(beta > 0.0)) throw ConfigError("escape problem: beta must be positive");
  if (!(gamma > 0.5 && gamma < 1.0)) throw ConfigError("escape problem: gamma must lie in (0.5, 1)");
  if (!(r_effect > 0.0)) throw ConfigError("escape problem: r_effect must be positive");
  if (!(u_max > 0.0) || !(v_max > 0.0)) throw ConfigError("escape problem: bounds must be positive");
  if (min_horizon < 1) throw ConfigError("escape problem: min_horizon must be >= 1");
  for (const Mat* w : {&Q, &R}) {
    if (w->rows() != w->cols() || w->rows() == 0)
      throw ConfigError("escape problem: Q and R must be square");
    Eigen::LLT<Mat> llt(*w);
    if (llt.info() != Eigen::Success) throw ConfigError("escape problem: Q and R must be PD");
  }
}

int escape_time(const Mat& P_at_attack, double zeta_mag, double alpha, const SystemModel& model,
                int max_steps) {
  if (!(zeta_mag > 0.0)) throw DomainError("escape_time: zeta must be positive");
  const double limit = zeta_mag * zeta_mag / stats::chi2_quantile(static_cast<int>(model.n()), alpha);
  auto lambda_max = [](const Mat& P) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(P, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
  };
  Mat P = P_at_attack;
  for (int j = 0; j <= max_steps; ++j) {
    if (lambda_max(P) > limit) return j;
    P = propagate_covariance(P, gain(P, model, EstimatorMode::ImuOnly), model);
  }
  throw DomainError("escape_time: tolerance not exceeded within " + std::to_string(max_steps) +
                    " steps (GPS-denied covariance appears bounded)");
}

double tube_backoff(const Mat& P_uav_pos, const Mat& P_att_pos, const Vec& uav_pos,
                    const Vec& att_pos, double gamma) {
  if (!(gamma > 0.5 && gamma < 1.0))
    throw DomainError("tube_backoff: gamma must lie in (0.5, 1), got " + std::to_string(gamma));
  const Vec diff = uav_pos - att_pos;
  const double dist = diff.norm();
  if (!(dist >= kMinDistance)) throw SingularityError("tube_backoff: UAV and attacker coincide");
  const Vec g = diff / dist;
  const double var = g.dot((P_uav_pos + P_att_pos) * g);
  return stats::normal_quantile(gamma) * std::sqrt(std::max(var, 0.0));
}

double repulsive_potential(double D, double r_effect, double beta) {
  if (!(D > kMinDistance))
    throw SingularityError("repulsive_potential: distance " + std::to_string(D) +
                           " below the 1e-6 m guard");
  if (D > r_effect) return 0.0;
  const double s = 1.0 / D - 1.0 / r_effect;
  return 0.5 * beta * s * s;
}

double repulsive_potential_slope(double D, double r_effect, double beta) {
  if (!(D > kMinDistance)) throw SingularityError("repulsive_potential_slope: distance too small");
  if (D > r_effect) return 0.0;
  return -beta * (1.0 / D - 1.0 / r_effect) / (D * D);
}

TrajectoryProblem make_trajectory_problem(const EstimatorState& est, const EscapeProblem& prob,
                                          long k_now, const SystemModel& model) {
  TrajectoryProblem tp;
  tp.A = model.A;
  tp.B = model.B;
  tp.pos_index = model.pos_index;
  tp.vel_index = model.vel_index;
  tp.x0 = est.x_hat;
  tp.horizon = static_cast<int>(std::max<long>(prob.k_a + prob.N - k_now, prob.min_horizon));
  tp.Q = prob.Q;
  tp.R = prob.R;
  tp.x_goal = prob.x_goal;
  tp.u_max = prob.u_max;
  tp.v_max = prob.v_max;
  return tp;
}

namespace {

// Steps from k_now to the pinned deadline, clamped into [1, horizon].
int deadline_step(const EscapeProblem& prob, long k_now, int horizon) {
  const long j = prob.k_a + prob.k_esc - k_now;
  return static_cast<int>(std::clamp<long>(j, 1, horizon));
}

// Largest change of |pos - center| per step under the velocity bound.
double max_radial_step(const SystemModel& model, double v_max) {
  Mat coupling(model.n_pos(), model.n_pos());
  for (Index i = 0; i < model.n_pos(); ++i)
    for (Index j = 0; j < model.n_pos(); ++j)
      coupling(i, j) = model.A(model.pos_index[i], model.vel_index[j]);
  Eigen::JacobiSVD<Mat> svd(coupling);
  return svd.singularValues()(0) * v_max;
}

// Previous plan advanced by one step, padded with zero input.
Mat shifted_warm_start(const ControlPlan& warm, Index m_u, int horizon) {
  Mat U = Mat::Zero(m_u, horizon);
  for (int j = 0; j < horizon; ++j) {
    const std::size_t src = static_cast<std::size_t>(j) + 1;
    if (src < warm.u_seq.size() && warm.u_seq[src].size() == m_u) U.col(j) = warm.u_seq[src];
  }
  return U;
}

// Goal-seeking PD rollout with an outward push while inside the exclusion radius.
Mat heuristic_warm_start(const TrajectoryProblem& tp, const Vec& center, double radius,
                         bool radial_push) {
  const Index mu = tp.B.cols();
  Mat U(mu, tp.horizon);
  Vec x = tp.x0;
  const Index np = static_cast<Index>(tp.pos_index.size());
  for (int j = 0; j < tp.horizon; ++j) {
    Vec pos(np), vel(np), goal(np);
    for (Index i = 0; i < np; ++i) {
      pos(i) = x(tp.pos_index[i]);
      vel(i) = x(tp.vel_index[i]);
      goal(i) = tp.x_goal(tp.pos_index[i]);
    }
    Vec e = goal - pos;
    if (e.norm() > 4.0 / 0.2) e *= (4.0 / 0.2) / e.norm();
    Vec a = 0.2 * e - 0.9 * vel;
    if (radial_push) {
      const Vec out = pos - center;
      const double D = out.norm();
      if (D < radius * 1.1 && D > kMinDistance) a = 0.3 * a + tp.u_max * out / D;
    }
    if (a.norm() > tp.u_max) a *= tp.u_max / a.norm();
    // Inputs are accelerations when m_u == n_pos; otherwise start from rest.
    U.col(j) = mu == np ? a : Vec::Zero(mu);
    x = tp.A * x + tp.B * U.col(j);
  }
  return U;
}

double warm_start_score(const TrajectoryProblem& tp, const Mat& U) {
  const Mat X = rollout(tp, U);
  const double viol = constraint_violation(tp, X);
  return objective(tp, U) + 1e6 * viol * viol;
}

ControlPlan to_plan(const OptimizerResult& r, bool feasible, double margin) {
  ControlPlan plan;
  plan.u_seq.reserve(static_cast<std::size_t>(r.U.cols()));
  for (Index j = 0; j < r.U.cols(); ++j) plan.u_seq.push_back(r.U.col(j));
  plan.x_seq.reserve(static_cast<std::size_t>(r.X.cols()));
  for (Index j = 0; j < r.X.cols(); ++j) plan.x_seq.push_back(r.X.col(j));
  plan.feasible = feasible;
  plan.stats = SolverStats{r.iterations, r.outer_iterations, r.grad_norm, r.violation,
                           r.objective,  r.potential_cost,   margin};
  return plan;
}

Mat best_warm_start(const TrajectoryProblem& tp, const Vec& center, double radius,
                    bool radial_push, const ControlPlan* warm) {
  Mat best = heuristic_warm_start(tp, center, radius, radial_push);
  double best_score = warm_start_score(tp, best);
  if (radial_push) {
    Mat plain = heuristic_warm_start(tp, center, radius, false);
    const double s = warm_start_score(tp, plain);
    if (s < best_score) {
      best = std::move(plain);
      best_score = s;
    }
  }
  if (warm && !warm->u_seq.empty()) {
    Mat shifted = shifted_warm_start(*warm, tp.B.cols(), tp.horizon);
    const double s = warm_start_score(tp, shifted);
    if (s < best_score) best = std::move(shifted);
  }
  return best;
}

}  // namespace

ControlPlan solve_escape_exit(const EstimatorState& est, const Vec& attacker_pos,
                              const EscapeProblem& prob, long k_now, double margin,
                              const SystemModel& model, const OptimizerSettings& settings,
                              const ControlPlan* warm) {
  prob.validate();
  TrajectoryProblem tp = make_trajectory_problem(est, prob, k_now, model);
  const int j_d = deadline_step(prob, k_now, tp.horizon);
  const double radius = prob.r_effect + margin;
  tp.exit = TrajectoryProblem::Exit{attacker_pos, radius, j_d};

  // Reachability certificate: the distance can grow by at most one velocity
  // step per sample, so some exits are impossible regardless of the inputs.
  const double start_dist = (position_of(model, est.x_hat) - attacker_pos).norm();
  const double reach = max_radial_step(model, prob.v_max) * j_d;
  if (start_dist + reach < radius - settings.feasibility_tolerance) {
    Mat U = heuristic_warm_start(tp, attacker_pos, radius, true);
    OptimizerResult r;
    r.U = project_inputs(U, tp.u_max);
    r.X = rollout(tp, r.U);
    r.objective = objective(tp, r.U);
    r.violation = constraint_violation(tp, r.X);
    return to_plan(r, false, margin);
  }

  const Mat U0 = best_warm_start(tp, attacker_pos, radius, true, warm);
  const OptimizerResult r = optimize(tp, U0, settings);
  return to_plan(r, r.violation <= settings.feasibility_tolerance, margin);
}

ControlPlan solve_escape_tube(const EstimatorState& est, const AttackerEstimate& attacker,
                              const EscapeProblem& prob, long k_now, const SystemModel& model,
                              const OptimizerSettings& settings, const ControlPlan* warm) {
  const long ahead = std::max<long>(prob.k_a + prob.k_esc - k_now, 0);
  Mat P_deadline = est.P;
  if (ahead > 0) P_deadline = predict_covariance_gps_denied(est.P, static_cast<int>(ahead), model).back();

  // Margin evaluated along the current attacker-to-UAV direction.
  const Vec uav_pos = position_of(model, est.x_hat);
  const Vec att_pos = attacker.position();
  double margin = 0.0;
  const Vec diff = uav_pos - att_pos;
  const Mat P_att = attacker.P_a.topLeftCorner(attacker.n_pos(), attacker.n_pos());
  const Mat P_uav = select(P_deadline, model.pos_index);
  if (diff.norm() >= kMinDistance) {
    margin = tube_backoff(P_uav, P_att, uav_pos, att_pos, prob.gamma);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> eig(P_uav + P_att, Eigen::EigenvaluesOnly);
    margin = stats::normal_quantile(prob.gamma) * std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
  }
  return solve_escape_exit(est, att_pos, prob, k_now, margin, model, settings, warm);
}

ControlPlan solve_escape_potential(const EstimatorState& est, const AttackerEstimate& attacker,
                                   const EscapeProblem& prob, long k_now,
                                   const SystemModel& model, const OptimizerSettings& settings,
                                   const ControlPlan* warm) {
  prob.validate();
  TrajectoryProblem tp = make_trajectory_problem(est, prob, k_now, model);
  const long first = prob.k_a + prob.k_esc - k_now;
  tp.potential = TrajectoryProblem::Potential{attacker.position(), prob.r_effect, prob.beta,
                                              static_cast<int>(std::max<long>(first, 1))};
  const Mat U0 = best_warm_start(tp, attacker.position(), prob.r_effect, true, warm);
  const OptimizerResult r = optimize(tp, U0, settings);
  return to_plan(r, true, 0.0);
}

}  // namespace spoofguard
