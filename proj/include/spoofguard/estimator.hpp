#pragma once

#include "spoofguard/model.hpp"

#include <vector>

namespace spoofguard {

enum class EstimatorMode { GpsImu, ImuOnly };

struct EstimatorState {
  Vec x_hat;
  Mat P;
  EstimatorMode mode = EstimatorMode::GpsImu;
};

/// Trace-optimal gain K = [K_G K_I] (n x (m_G + m_I)). In ImuOnly mode the GPS
/// block is zero and K_I minimizes the trace over the IMU block alone.
/// Throws NumericalError if the innovation covariance is ill-conditioned.
Mat gain(const Mat& P_prev, const SystemModel& model,
         EstimatorMode mode = EstimatorMode::GpsImu);

/// Three-term error covariance for an arbitrary stacked gain K:
/// (A - KCA + KDC) P (.)^T + (I - KC) Sigma_w (.)^T + K Sigma_y K^T.
Mat propagate_covariance(const Mat& P_prev, const Mat& K, const SystemModel& model);

/// One estimator step. The IMU innovation is y_I - C_I (A x_hat + B u - x_hat).
/// y_G is ignored in ImuOnly mode.
EstimatorState update(const EstimatorState& est, const Vec& u, const Vec& y_G, const Vec& y_I,
                      const SystemModel& model);

/// Covariances P_1 .. P_horizon of the IMU-only recursion started from P0.
std::vector<Mat> predict_covariance_gps_denied(const Mat& P0, int horizon,
                                               const SystemModel& model);

/// Fixed point of the covariance recursion in the given mode (GpsImu converges).
Mat steady_state_covariance(const SystemModel& model, EstimatorMode mode = EstimatorMode::GpsImu,
                            double tol = 1e-12, int max_iter = 100000);

}  // namespace spoofguard
