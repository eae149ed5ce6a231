#include "spoofguard/alt.hpp"

#include "linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace spoofguard {

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("sliding window: capacity must be >= 1");
}

void SlidingWindow::push(WindowSample s) {
  samples_.push_front(std::move(s));
  if (samples_.size() > capacity_) samples_.pop_back();
}

Vec SlidingWindow::stacked_outputs() const {
  if (samples_.empty()) return Vec{};
  const Index ms = samples_.front().y_S.size();
  Vec y(ms * static_cast<Index>(samples_.size()));
  for (std::size_t j = 0; j < samples_.size(); ++j)
    y.segment(static_cast<Index>(j) * ms, ms) = samples_[j].y_S;
  return y;
}

std::vector<Vec> SlidingWindow::positions() const {
  std::vector<Vec> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.uav_pos);
  return out;
}

AttackerEstimate predict(const AttackerEstimate& est) {
  AttackerEstimate next = est;
  next.P_a = symmetrized(est.P_a + est.Sigma_wa);
  return next;
}

Mat sigma_points(const Vec& z_hat, const Mat& P_a) {
  const Index n = z_hat.size();
  if (P_a.rows() != n || P_a.cols() != n) throw ConfigError("sigma_points: dimension mismatch");
  const Mat scaled = static_cast<double>(n) * symmetrized(P_a);
  constexpr std::array<double, 5> jitters{0.0, 1e-12, 1e-11, 1e-10, 1e-9};
  for (double jitter : jitters) {
    Eigen::LLT<Mat> llt(scaled + jitter * Mat::Identity(n, n));
    if (llt.info() != Eigen::Success) continue;
    const Mat L = llt.matrixL();
    if (!L.allFinite()) continue;
    Mat pts(n, 2 * n);
    for (Index i = 0; i < n; ++i) {
      pts.col(i) = z_hat + L.col(i);
      pts.col(n + i) = z_hat - L.col(i);
    }
    return pts;
  }
  throw NumericalError("sigma_points: attacker covariance is not positive semidefinite");
}

Vec window_outputs(const Vec& point, std::span<const Vec> uav_positions,
                   const SystemModel& model) {
  const Index np = point.size() - 1;
  const Index ms = model.m_S();
  const double eta = point(np);
  Vec y(ms * static_cast<Index>(uav_positions.size()));
  for (std::size_t j = 0; j < uav_positions.size(); ++j) {
    const double dist = (point.head(np) - uav_positions[j]).norm();
    y.segment(static_cast<Index>(j) * ms, ms) = received_power(model.C_S, eta, dist);
  }
  return y;
}

AttackerEstimate ukf_update(const AttackerEstimate& est, const Vec& y_window,
                            std::span<const Vec> uav_positions, const SystemModel& model) {
  const Index n = est.z_hat.size();
  const Index ms = model.m_S();
  const auto M = static_cast<Index>(uav_positions.size());
  if (y_window.size() != M * ms) throw ConfigError("ukf_update: window size mismatch");

  const Mat X = sigma_points(est.z_hat, est.P_a);
  const Index npts = X.cols();
  const double w = 1.0 / static_cast<double>(npts);

  Mat Y(M * ms, npts);
  for (Index i = 0; i < npts; ++i) Y.col(i) = window_outputs(X.col(i), uav_positions, model);
  const Vec y_bar = Y.rowwise().mean();
  const Mat dY = Y.colwise() - y_bar;
  const Mat dX = X.colwise() - est.z_hat;

  Mat Py = w * dY * dY.transpose();
  for (Index j = 0; j < M; ++j) Py.block(j * ms, j * ms, ms, ms) += model.Sigma_S;
  const Mat Pxy = w * dX * dY.transpose();
  const Mat K = detail::right_solve_spd(Pxy, symmetrized(Py), "ukf_update");

  AttackerEstimate next = est;
  next.z_hat = est.z_hat + K * (y_window - y_bar);
  next.P_a = symmetrized(est.P_a - K * Py * K.transpose());
  next.z_hat(n - 1) = std::max(next.z_hat(n - 1), kMinPower);
  return next;
}

AttackerEstimate track(const AttackerEstimate& est, const Vec& y_S, const Vec& uav_pos,
                       const SystemModel& model) {
  AttackerEstimate next = predict(est);
  next.window.push(WindowSample{y_S, uav_pos});
  if (!next.window.full()) return next;
  const auto positions = next.window.positions();
  return ukf_update(next, next.window.stacked_outputs(), positions, model);
}

AttackerEstimate initial_attacker_estimate(const Vec& uav_pos, const AltSettings& s) {
  const Index np = uav_pos.size();
  if (s.prior_offset.size() != np || s.prior_std.size() != np + 1 ||
      s.process_std.size() != np + 1)
    throw ConfigError("ALT settings: prior_offset needs n_pos entries, prior_std and "
                      "process_std need n_pos + 1");
  AttackerEstimate est{Vec(np + 1), Mat{}, Mat{}, SlidingWindow(s.window)};
  est.z_hat << uav_pos + s.prior_offset, s.prior_power;
  est.P_a = s.prior_std.array().square().matrix().asDiagonal();
  est.Sigma_wa = s.process_std.array().square().matrix().asDiagonal();
  return est;
}

}  // namespace spoofguard
