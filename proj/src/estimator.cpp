#include "spoofguard/estimator.hpp"

#include "linalg.hpp"

namespace spoofguard {

namespace {

// C = [C_G; C_I], D = blockdiag(0, I), Sigma_y = blockdiag(Sigma_G, Sigma_I).
struct StackedModel {
  Mat C;
  Mat D;
  Mat Sigma_y;

  explicit StackedModel(const SystemModel& m) {
    const Index mg = m.m_G(), mi = m.m_I(), n = m.n();
    C.resize(mg + mi, n);
    C << m.C_G, m.C_I;
    D = Mat::Zero(mg + mi, mg + mi);
    D.bottomRightCorner(mi, mi).setIdentity();
    Sigma_y = Mat::Zero(mg + mi, mg + mi);
    Sigma_y.topLeftCorner(mg, mg) = m.Sigma_G;
    Sigma_y.bottomRightCorner(mi, mi) = m.Sigma_I;
  }
};

Mat optimal_gain(const Mat& P, const Mat& A, const Mat& Sigma_w, const Mat& C, const Mat& D,
                 const Mat& Sigma_y) {
  const Mat M = C * A - D * C;
  const Mat num = A * P * M.transpose() + Sigma_w * C.transpose();
  const Mat innov = M * P * M.transpose() + C * Sigma_w * C.transpose() + Sigma_y;
  return detail::right_solve_spd(num, symmetrized(innov), "estimator gain");
}

}  // namespace

Mat gain(const Mat& P_prev, const SystemModel& model, EstimatorMode mode) {
  const Index mg = model.m_G(), mi = model.m_I();
  if (mode == EstimatorMode::GpsImu) {
    const StackedModel s(model);
    return optimal_gain(P_prev, model.A, model.Sigma_w, s.C, s.D, s.Sigma_y);
  }
  // K_G = 0; with only the IMU rows, D reduces to the identity.
  Mat K = Mat::Zero(model.n(), mg + mi);
  K.rightCols(mi) = optimal_gain(P_prev, model.A, model.Sigma_w, model.C_I,
                                 Mat::Identity(mi, mi), model.Sigma_I);
  return K;
}

Mat propagate_covariance(const Mat& P_prev, const Mat& K, const SystemModel& model) {
  const StackedModel s(model);
  const Index n = model.n();
  const Mat KC = K * s.C;
  const Mat F = model.A - KC * model.A + K * s.D * s.C;
  const Mat G = Mat::Identity(n, n) - KC;
  Mat P = F * P_prev * F.transpose() + G * model.Sigma_w * G.transpose() +
          K * s.Sigma_y * K.transpose();
  return symmetrized(P);
}

EstimatorState update(const EstimatorState& est, const Vec& u, const Vec& y_G, const Vec& y_I,
                      const SystemModel& model) {
  const Index mg = model.m_G(), mi = model.m_I();
  if (est.x_hat.size() != model.n() || u.size() != model.m_u() || y_I.size() != mi ||
      (est.mode == EstimatorMode::GpsImu && y_G.size() != mg))
    throw ConfigError("estimator update: dimension mismatch");

  const Mat K = gain(est.P, model, est.mode);
  const Vec x_pred = model.A * est.x_hat + model.B * u;

  EstimatorState next;
  next.mode = est.mode;
  next.x_hat = x_pred + K.rightCols(mi) * (y_I - model.C_I * (x_pred - est.x_hat));
  if (est.mode == EstimatorMode::GpsImu) next.x_hat += K.leftCols(mg) * (y_G - model.C_G * x_pred);
  next.P = propagate_covariance(est.P, K, model);
  return next;
}

std::vector<Mat> predict_covariance_gps_denied(const Mat& P0, int horizon,
                                               const SystemModel& model) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
  Mat P = P0;
  for (int k = 0; k < horizon; ++k) {
    P = propagate_covariance(P, gain(P, model, EstimatorMode::ImuOnly), model);
    out.push_back(P);
  }
  return out;
}

Mat steady_state_covariance(const SystemModel& model, EstimatorMode mode, double tol,
                            int max_iter) {
  Mat P = Mat::Identity(model.n(), model.n());
  for (int k = 0; k < max_iter; ++k) {
    Mat next = propagate_covariance(P, gain(P, model, mode), model);
    const double change = (next - P).norm();
    P = std::move(next);
    if (change < tol * std::max(1.0, P.norm())) return P;
  }
  throw NumericalError("steady_state_covariance: recursion did not converge");
}

}  // namespace spoofguard
