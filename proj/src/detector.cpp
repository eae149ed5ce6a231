#include "spoofguard/detector.hpp"

#include "linalg.hpp"
#include "spoofguard/stats.hpp"

namespace spoofguard {

Vec estimate_attack(const Vec& y_G, const Vec& x_hat_prev, const Vec& u_prev,
                    const SystemModel& model) {
  return y_G - model.C_G * (model.A * x_hat_prev + model.B * u_prev);
}

Mat innovation_covariance(const Mat& P_prev, const SystemModel& model) {
  const Mat P_pred = model.A * P_prev * model.A.transpose() + model.Sigma_w;
  return symmetrized(model.C_G * P_pred * model.C_G.transpose() + model.Sigma_G);
}

double normalized_statistic(const Vec& d_hat, const Mat& P_d) {
  return d_hat.dot(detail::solve_spd(P_d, d_hat, "attack statistic"));
}

DetectorState cusum_step(const DetectorState& det, const Vec& d_hat, const Mat& P_d) {
  DetectorState next = det;
  next.S = det.delta * det.S + normalized_statistic(d_hat, P_d);
  return next;
}

double threshold(const DetectorState& det) {
  return stats::chi2_quantile(det.df, det.alpha) / (1.0 - det.delta);
}

// S equal to the threshold stays Robust.
ControlMode decide(const DetectorState& det) {
  return det.S > threshold(det) ? ControlMode::Emergency : ControlMode::Robust;
}

DetectorState apply_decision(const DetectorState& det, long k) {
  DetectorState next = det;
  next.mode = decide(det);
  if (det.mode == ControlMode::Robust && next.mode == ControlMode::Emergency) next.k_attack = k;
  return next;
}

void validate(const DetectorState& det) {
  if (!(det.delta > 0.0 && det.delta < 1.0))
    throw ConfigError("detector: delta must lie in (0, 1)");
  if (!(det.alpha > 0.0 && det.alpha < 1.0))
    throw ConfigError("detector: alpha must lie in (0, 1)");
  if (det.df < 1) throw ConfigError("detector: df must be >= 1");
  if (!(det.S >= 0.0)) throw ConfigError("detector: S must be non-negative");
}

}  // namespace spoofguard
