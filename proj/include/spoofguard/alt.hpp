#pragma once

// Attacker location tracking: an unscented Kalman filter over the augmented
// attacker state z = [attacker position; spoofer power], driven by the last M
// signal-strength readings and the UAV positions at which they were taken.
//
// A single RSSI sample only constrains eta / d^2, so the attacker is not
// observable from one reading. Stacking M readings taken at different UAV
// positions restores observability (the trilateration argument).

#include "spoofguard/model.hpp"

#include <deque>
#include <span>
#include <vector>

namespace spoofguard {

struct WindowSample {
  Vec y_S;      // m_S
  Vec uav_pos;  // n_pos
};

/// Fixed-capacity window, newest sample first.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity = 5);

  void push(WindowSample s);
  void clear() { samples_.clear(); }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return samples_.size(); }
  bool full() const { return samples_.size() == capacity_; }
  const WindowSample& operator[](std::size_t i) const { return samples_[i]; }

  /// [y_k; y_{k-1}; ...] stacked, M * m_S entries.
  Vec stacked_outputs() const;
  std::vector<Vec> positions() const;

 private:
  std::size_t capacity_;
  std::deque<WindowSample> samples_;
};

struct AttackerEstimate {
  Vec z_hat;     // [position (n_pos); eta]
  Mat P_a;
  Mat Sigma_wa;  // random-walk process noise
  SlidingWindow window;

  Index n_pos() const { return z_hat.size() - 1; }
  Vec position() const { return z_hat.head(n_pos()); }
  double power() const { return z_hat(n_pos()); }
};

/// Power estimates are clamped to at least this value after each update.
inline constexpr double kMinPower = 1e-3;

/// Random-walk time update: mean unchanged, P_a += Sigma_wa.
AttackerEstimate predict(const AttackerEstimate& est);

/// 2n symmetric points z_hat +/- row_i(R), R^T R = n P_a, as columns of an
/// n x 2n matrix. Cholesky with diagonal jitter up to 1e-9; throws
/// NumericalError if P_a is not PSD within that tolerance.
Mat sigma_points(const Vec& z_hat, const Mat& P_a);

/// Predicted window [f(z, p_k); f(z, p_{k-1}); ...] with f = C_S eta / d^2.
/// The attacker transition is the identity, so back-propagating the point
/// leaves it unchanged; only the UAV position differs per entry.
Vec window_outputs(const Vec& point, std::span<const Vec> uav_positions,
                   const SystemModel& model);

/// Measurement update with equal weights 1/(2n) over the symmetric points.
AttackerEstimate ukf_update(const AttackerEstimate& est, const Vec& y_window,
                            std::span<const Vec> uav_positions, const SystemModel& model);

/// Push a sample, predict, and update once the window is full.
AttackerEstimate track(const AttackerEstimate& est, const Vec& y_S, const Vec& uav_pos,
                       const SystemModel& model);

struct AltSettings {
  std::size_t window = 5;
  Vec prior_offset;           // added to the UAV position at detection
  double prior_power = 100.0;
  Vec prior_std;              // [position std...; power std]
  Vec process_std;            // random-walk std per component
  long reuse_steps = 100;     // a new episode keeps the old estimate if it ended this recently
};

AttackerEstimate initial_attacker_estimate(const Vec& uav_pos, const AltSettings& settings);

}  // namespace spoofguard
