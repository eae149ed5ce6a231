#pragma once

#include "spoofguard/model.hpp"

#include <optional>

namespace spoofguard {

/// Discounted chi-square CUSUM over the GPS residual.
struct DetectorState {
  double S = 0.0;
  double delta = 0.15;
  double alpha = 0.01;
  int df = 2;
  ControlMode mode = ControlMode::Robust;
  std::optional<long> k_attack;
};

/// d_hat = y_G - C_G (A x_hat_prev + B u_prev). Uses the previous estimate only.
Vec estimate_attack(const Vec& y_G, const Vec& x_hat_prev, const Vec& u_prev,
                    const SystemModel& model);

/// Covariance of d - d_hat: C_G (A P A^T + Sigma_w) C_G^T + Sigma_G.
Mat innovation_covariance(const Mat& P_prev, const SystemModel& model);

/// d_hat^T P_d^{-1} d_hat. Throws NumericalError on a singular P_d.
double normalized_statistic(const Vec& d_hat, const Mat& P_d);

/// S_k = delta S_{k-1} + d_hat^T P_d^{-1} d_hat.
DetectorState cusum_step(const DetectorState& det, const Vec& d_hat, const Mat& P_d);

/// chi2_df(alpha) / (1 - delta).
double threshold(const DetectorState& det);

/// Emergency iff S strictly exceeds the threshold.
ControlMode decide(const DetectorState& det);

/// Applies decide() and stamps k_attack on a Robust -> Emergency transition.
DetectorState apply_decision(const DetectorState& det, long k);

void validate(const DetectorState& det);

}  // namespace spoofguard
