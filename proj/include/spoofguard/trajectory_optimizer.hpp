#pragma once

// Single-shooting trajectory optimizer for linear dynamics.
//
// States are eliminated through the rollout x_{j+1} = A x_j + B u_j, so the
// decision variable is the input sequence U (m_u x L, column j = u_j). The
// input-norm ball is enforced by projection; the velocity-norm bound and the
// optional exit-distance constraint go through an augmented Lagrangian outer
// loop. Inner iterations are projected gradient steps with a Barzilai-Borwein
// trial step and Armijo backtracking, so the merit value never increases
// within one outer iteration.

#include "spoofguard/types.hpp"

#include <optional>
#include <vector>

namespace spoofguard {

struct TrajectoryProblem {
  Mat A;
  Mat B;
  std::vector<Index> pos_index;
  std::vector<Index> vel_index;
  Vec x0;
  int horizon = 1;  // L
  Mat Q;            // weights (x_j - x_goal), j = 1..L
  Mat R;            // weights u_j, j = 0..L-1
  Vec x_goal;
  double u_max = 2.0;
  double v_max = 5.0;  // infinity disables the velocity constraint

  /// sum_{j >= first_step} U_rep(|pos(x_j) - center|)
  struct Potential {
    Vec center;
    double r_effect = 0.0;
    double beta = 0.0;
    int first_step = 1;
  };
  std::optional<Potential> potential;

  /// |pos(x_step) - center| >= radius
  struct Exit {
    Vec center;
    double radius = 0.0;
    int step = 1;
  };
  std::optional<Exit> exit;
};

struct OptimizerSettings {
  int max_iterations = 500;  // inner iterations summed over all outer iterations
  double tolerance = 1e-4;   // projected-gradient norm
  double feasibility_tolerance = 1e-3;
  double initial_penalty = 100.0;
  double penalty_growth = 10.0;
  int max_inner_iterations = 150;
  bool record_history = false;
};

struct OptimizerResult {
  Mat U;
  Mat X;  // n x (L + 1), column 0 = x0
  double objective = 0.0;       // tracking + potential, constraints excluded
  double potential_cost = 0.0;
  double violation = 0.0;       // max constraint violation (velocity, exit)
  double grad_norm = 0.0;       // projected gradient of the final merit
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  std::vector<double> merit_history;  // accepted merit values, when recorded
  std::vector<int> history_outer;     // outer index of each history entry
};

Mat rollout(const TrajectoryProblem& p, const Mat& U);

/// Tracking plus potential cost (no constraint terms).
double objective(const TrajectoryProblem& p, const Mat& U);

/// Adjoint gradient of objective() with respect to U.
Mat objective_gradient(const TrajectoryProblem& p, const Mat& U);

/// Potential part of the cost only, evaluated on a rollout.
double potential_cost(const TrajectoryProblem& p, const Mat& X);

/// Largest violation of the velocity and exit constraints along X.
double constraint_violation(const TrajectoryProblem& p, const Mat& X);

/// Columnwise projection onto the ball |u| <= u_max.
Mat project_inputs(const Mat& U, double u_max);

OptimizerResult optimize(const TrajectoryProblem& p, const Mat& U0,
                         const OptimizerSettings& settings = {});

}  // namespace spoofguard
