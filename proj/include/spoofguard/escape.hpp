#pragma once

#include "spoofguard/alt.hpp"
#include "spoofguard/estimator.hpp"
#include "spoofguard/trajectory_optimizer.hpp"

namespace spoofguard {

enum class EscController { Tube, Potential, TubeWithFallback };

const char* to_string(EscController c);

struct EscapeProblem {
  long k_a = 0;    // attack (detection) step
  int k_esc = 0;   // escape time, steps after k_a
  int N = 40;      // horizon end stays at k_a + N
  Mat Q;
  Mat R;
  Vec x_goal;
  double r_effect = 30.0;
  double beta = 50000.0;
  double gamma = 0.95;
  double v_max = 5.0;
  double u_max = 2.0;
  int min_horizon = 20;  // used once k_a + N has been reached

  void validate() const;
};

struct SolverStats {
  int iterations = 0;
  int outer_iterations = 0;
  double grad_norm = 0.0;
  double violation = 0.0;
  double objective = 0.0;
  double potential_cost = 0.0;
  double margin = 0.0;
};

struct ControlPlan {
  std::vector<Vec> u_seq;
  std::vector<Vec> x_seq;  // x_seq[0] is the starting estimate
  bool feasible = false;
  SolverStats stats;
};

/// Steps after the attack until zeta^T P^{-1} zeta < chi2_n(alpha) first holds,
/// with zeta = zeta_mag times the top eigenvector of P; equivalently the first
/// j with lambda_max(P_{k_a + j}) > zeta_mag^2 / chi2_n(alpha). P_{k_a} is
/// P_at_attack and later covariances follow the GPS-denied recursion.
/// Returns 0 if the criterion already holds at the attack step.
int escape_time(const Mat& P_at_attack, double zeta_mag, double alpha, const SystemModel& model,
                int max_steps = 100000);

/// First-order chance-constraint margin z_gamma * sqrt(g^T (P_uav + P_att) g),
/// g the unit vector from attacker to UAV. Covariances are position blocks.
double tube_backoff(const Mat& P_uav_pos, const Mat& P_att_pos, const Vec& uav_pos,
                    const Vec& att_pos, double gamma);

/// 0.5 beta (1/D - 1/r)^2 inside the range, zero outside.
double repulsive_potential(double D, double r_effect, double beta);

/// dU_rep/dD.
double repulsive_potential_slope(double D, double r_effect, double beta);

/// Builds the single-shooting problem seen at step k_now (shared by both programs).
TrajectoryProblem make_trajectory_problem(const EstimatorState& est, const EscapeProblem& prob,
                                          long k_now, const SystemModel& model);

/// Hard exit-distance program: dist - r_effect >= margin at step k_a + k_esc.
/// margin = 0 is the plain constrained program.
ControlPlan solve_escape_exit(const EstimatorState& est, const Vec& attacker_pos,
                              const EscapeProblem& prob, long k_now, double margin,
                              const SystemModel& model, const OptimizerSettings& settings = {},
                              const ControlPlan* warm = nullptr);

/// Exit program with the margin from tube_backoff at the escape deadline.
ControlPlan solve_escape_tube(const EstimatorState& est, const AttackerEstimate& attacker,
                              const EscapeProblem& prob, long k_now, const SystemModel& model,
                              const OptimizerSettings& settings = {},
                              const ControlPlan* warm = nullptr);

/// Soft version: U_rep added on every step from k_a + k_esc to the horizon end.
ControlPlan solve_escape_potential(const EstimatorState& est, const AttackerEstimate& attacker,
                                   const EscapeProblem& prob, long k_now,
                                   const SystemModel& model,
                                   const OptimizerSettings& settings = {},
                                   const ControlPlan* warm = nullptr);

}  // namespace spoofguard
