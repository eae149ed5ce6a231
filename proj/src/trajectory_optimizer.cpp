#include "spoofguard/trajectory_optimizer.hpp"

#include "spoofguard/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spoofguard {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kMaxPenalty = 1e9;

double u_rep(double D, double r, double beta) {
  if (D > r) return 0.0;
  const double s = 1.0 / D - 1.0 / r;
  return 0.5 * beta * s * s;
}

double u_rep_slope(double D, double r, double beta) {
  if (D > r) return 0.0;
  return -beta * (1.0 / D - 1.0 / r) / (D * D);
}

bool has_velocity_constraint(const TrajectoryProblem& p) { return std::isfinite(p.v_max); }

// Augmented-Lagrangian state for inequality constraints g <= 0.
struct Multipliers {
  Vec velocity;  // one per step j = 1..L
  double exit = 0.0;
  double mu = 1.0;
};

// psi(g) = (max(0, lambda + mu g)^2 - lambda^2) / (2 mu); returns value, slope via out.
double al_term(double g, double lambda, double mu, double& slope) {
  const double a = std::max(0.0, lambda + mu * g);
  slope = a;
  return (a * a - lambda * lambda) / (2.0 * mu);
}

struct Evaluation {
  double merit = 0.0;
  double objective = 0.0;
  double potential = 0.0;
};

// Merit value and (optionally) its gradient. With al == nullptr only the
// tracking + potential objective is evaluated.
Evaluation evaluate(const TrajectoryProblem& p, const Mat& U, const Multipliers* al, Mat* grad,
                    Mat& X, Mat& dX) {
  const Index L = p.horizon;
  X = rollout(p, U);
  Evaluation ev;
  if (grad) dX.setZero(p.A.rows(), L + 1);

  for (Index j = 1; j <= L; ++j) {
    const Vec e = X.col(j) - p.x_goal;
    const Vec Qe = p.Q * e;
    ev.objective += e.dot(Qe);
    if (grad) dX.col(j) += 2.0 * Qe;
  }
  for (Index j = 0; j < L; ++j) ev.objective += U.col(j).dot(p.R * U.col(j));

  if (p.potential) {
    const auto& pot = *p.potential;
    for (Index j = std::max<Index>(pot.first_step, 1); j <= L; ++j) {
      Vec diff(static_cast<Index>(p.pos_index.size()));
      for (std::size_t i = 0; i < p.pos_index.size(); ++i)
        diff(static_cast<Index>(i)) = X(p.pos_index[i], j) - pot.center(static_cast<Index>(i));
      const double D = diff.norm();
      if (D <= kMinDistance) return Evaluation{kInf, kInf, kInf};
      const double val = u_rep(D, pot.r_effect, pot.beta);
      ev.potential += val;
      if (grad && val > 0.0) {
        const double slope = u_rep_slope(D, pot.r_effect, pot.beta);
        for (std::size_t i = 0; i < p.pos_index.size(); ++i)
          dX(p.pos_index[i], j) += slope * diff(static_cast<Index>(i)) / D;
      }
    }
  }
  ev.objective += ev.potential;
  ev.merit = ev.objective;

  if (al) {
    if (has_velocity_constraint(p)) {
      const double v2 = p.v_max * p.v_max;
      for (Index j = 1; j <= L; ++j) {
        double s2 = 0.0;
        for (Index i : p.vel_index) s2 += X(i, j) * X(i, j);
        const double g = (s2 - v2) / v2;
        double slope = 0.0;
        ev.merit += al_term(g, al->velocity(j - 1), al->mu, slope);
        if (grad && slope > 0.0)
          for (Index i : p.vel_index) dX(i, j) += slope * 2.0 * X(i, j) / v2;
      }
    }
    if (p.exit) {
      const auto& ex = *p.exit;
      Vec diff(static_cast<Index>(p.pos_index.size()));
      for (std::size_t i = 0; i < p.pos_index.size(); ++i)
        diff(static_cast<Index>(i)) = X(p.pos_index[i], ex.step) - ex.center(static_cast<Index>(i));
      const double D = std::max(diff.norm(), kMinDistance);
      const double g = ex.radius - D;
      double slope = 0.0;
      ev.merit += al_term(g, al->exit, al->mu, slope);
      if (grad && slope > 0.0)
        for (std::size_t i = 0; i < p.pos_index.size(); ++i)
          dX(p.pos_index[i], ex.step) -= slope * diff(static_cast<Index>(i)) / D;
    }
  }

  if (grad) {
    // Adjoint sweep: lambda_j = dl/dx_j + A^T lambda_{j+1}; dJ/du_{j-1} = 2 R u_{j-1} + B^T lambda_j.
    grad->resize(U.rows(), L);
    Vec lambda = Vec::Zero(p.A.rows());
    for (Index j = L; j >= 1; --j) {
      lambda = dX.col(j) + p.A.transpose() * lambda;
      grad->col(j - 1) = 2.0 * (p.R * U.col(j - 1)) + p.B.transpose() * lambda;
    }
  }
  return ev;
}

double projected_gradient_norm(const Mat& U, const Mat& G, double u_max) {
  return (U - project_inputs(U - G, u_max)).norm();
}

}  // namespace

Mat rollout(const TrajectoryProblem& p, const Mat& U) {
  if (U.cols() != p.horizon || U.rows() != p.B.cols())
    throw ConfigError("rollout: input sequence has wrong shape");
  Mat X(p.A.rows(), p.horizon + 1);
  X.col(0) = p.x0;
  for (Index j = 0; j < p.horizon; ++j)
    X.col(j + 1).noalias() = p.A * X.col(j) + p.B * U.col(j);
  return X;
}

double objective(const TrajectoryProblem& p, const Mat& U) {
  Mat X, dX;
  return evaluate(p, U, nullptr, nullptr, X, dX).objective;
}

Mat objective_gradient(const TrajectoryProblem& p, const Mat& U) {
  Mat X, dX, G;
  evaluate(p, U, nullptr, &G, X, dX);
  return G;
}

double potential_cost(const TrajectoryProblem& p, const Mat& X) {
  if (!p.potential) return 0.0;
  const auto& pot = *p.potential;
  double total = 0.0;
  for (Index j = std::max(pot.first_step, 1); j < X.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.pos_index.size(); ++i) {
      const double d = X(p.pos_index[i], j) - pot.center(static_cast<Index>(i));
      s += d * d;
    }
    total += u_rep(std::max(std::sqrt(s), kMinDistance), pot.r_effect, pot.beta);
  }
  return total;
}

double constraint_violation(const TrajectoryProblem& p, const Mat& X) {
  double worst = 0.0;
  if (has_velocity_constraint(p)) {
    for (Index j = 1; j < X.cols(); ++j) {
      double s2 = 0.0;
      for (Index i : p.vel_index) s2 += X(i, j) * X(i, j);
      worst = std::max(worst, std::sqrt(s2) - p.v_max);
    }
  }
  if (p.exit) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.pos_index.size(); ++i) {
      const double d = X(p.pos_index[i], p.exit->step) - p.exit->center(static_cast<Index>(i));
      s += d * d;
    }
    worst = std::max(worst, p.exit->radius - std::sqrt(s));
  }
  return worst;
}

Mat project_inputs(const Mat& U, double u_max) {
  Mat out = U;
  for (Index j = 0; j < out.cols(); ++j) {
    const double nrm = out.col(j).norm();
    if (nrm > u_max) out.col(j) *= u_max / nrm;
  }
  return out;
}

OptimizerResult optimize(const TrajectoryProblem& p, const Mat& U0,
                         const OptimizerSettings& settings) {
  if (p.horizon < 1) throw ConfigError("optimize: horizon must be >= 1");
  if (p.exit && (p.exit->step < 1 || p.exit->step > p.horizon))
    throw ConfigError("optimize: exit step outside the horizon");

  const bool constrained = has_velocity_constraint(p) || p.exit.has_value();
  Multipliers al;
  al.velocity = Vec::Zero(p.horizon);
  al.mu = settings.initial_penalty;

  OptimizerResult res;
  Mat U = project_inputs(U0, p.u_max);
  Mat X, dX, G, Xn, dXn, Gn;
  double prev_violation = kInf;
  int remaining = settings.max_iterations;
  double t = -1.0;

  for (int outer = 0;; ++outer) {
    res.outer_iterations = outer + 1;
    Evaluation ev = evaluate(p, U, &al, &G, X, dX);
    if (settings.record_history) {
      res.merit_history.push_back(ev.merit);
      res.history_outer.push_back(outer);
    }
    double pg = projected_gradient_norm(U, G, p.u_max);
    int inner = 0;
    while (pg > settings.tolerance && remaining > 0 && inner < settings.max_inner_iterations) {
      if (!(t > 0.0)) t = 1.0 / std::max(G.norm(), 1e-12);
      bool accepted = false;
      Mat Un;
      Evaluation evn;
      for (int halving = 0; halving < 60; ++halving) {
        Un = project_inputs(U - t * G, p.u_max);
        evn = evaluate(p, Un, &al, &Gn, Xn, dXn);
        if (evn.merit <= ev.merit + kArmijo * (G.array() * (Un - U).array()).sum()) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      // Barzilai-Borwein step for the next trial.
      const Mat s = Un - U;
      const double sy = (s.array() * (Gn - G).array()).sum();
      t = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * t;
      t = std::clamp(t, 1e-12, 1e12);
      U = std::move(Un);
      G = Gn;
      X = Xn;
      ev = evn;
      pg = projected_gradient_norm(U, G, p.u_max);
      ++inner;
      --remaining;
      if (settings.record_history) {
        res.merit_history.push_back(ev.merit);
        res.history_outer.push_back(outer);
      }
    }
    res.iterations += inner;
    res.grad_norm = pg;
    // A failed first line search still spends budget, so the outer loop ends.
    if (inner == 0) --remaining;

    const double violation = constraint_violation(p, X);
    res.violation = violation;
    if (!constrained) break;
    if (violation <= settings.feasibility_tolerance && pg <= settings.tolerance) break;
    if (remaining <= 0) break;
    if (inner == 0 && violation <= settings.feasibility_tolerance) break;

    // Multiplier and penalty update on the normalized constraints.
    if (has_velocity_constraint(p)) {
      const double v2 = p.v_max * p.v_max;
      for (Index j = 1; j <= p.horizon; ++j) {
        double s2 = 0.0;
        for (Index i : p.vel_index) s2 += X(i, j) * X(i, j);
        al.velocity(j - 1) = std::max(0.0, al.velocity(j - 1) + al.mu * (s2 - v2) / v2);
      }
    }
    if (p.exit) {
      double s = 0.0;
      for (std::size_t i = 0; i < p.pos_index.size(); ++i) {
        const double d = X(p.pos_index[i], p.exit->step) - p.exit->center(static_cast<Index>(i));
        s += d * d;
      }
      al.exit = std::max(0.0, al.exit + al.mu * (p.exit->radius - std::sqrt(s)));
    }
    if (violation > 0.25 * prev_violation) al.mu = std::min(al.mu * settings.penalty_growth, kMaxPenalty);
    prev_violation = violation;
    t = -1.0;
  }

  res.U = U;
  res.X = rollout(p, U);
  Mat Xtmp, dXtmp;
  const Evaluation final_ev = evaluate(p, U, nullptr, nullptr, Xtmp, dXtmp);
  res.objective = final_ev.objective;
  res.potential_cost = final_ev.potential;
  res.violation = constraint_violation(p, res.X);
  res.converged = res.grad_norm <= settings.tolerance &&
                  (!constrained || res.violation <= settings.feasibility_tolerance);
  return res;
}

}  // namespace spoofguard
