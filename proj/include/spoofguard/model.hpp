#pragma once

#include "spoofguard/types.hpp"

#include <vector>

namespace spoofguard {

/// Linear plant with three sensor channels: GPS position (spoofable),
/// relative IMU increments, and received GPS signal strength.
struct SystemModel {
  Mat A;        // n x n
  Mat B;        // n x m_u
  Mat C_G;      // m_G x n
  Mat C_I;      // m_I x n
  Vec C_S;      // m_S, receiver gain * (wavelength / 4 pi)^2 per channel
  Mat Sigma_w;  // process noise
  Mat Sigma_G;
  Mat Sigma_I;
  Mat Sigma_S;
  Vec eta_S;    // genuine GPS signal strength, m_S
  std::vector<Index> pos_index;
  std::vector<Index> vel_index;

  Index n() const { return A.rows(); }
  Index m_u() const { return B.cols(); }
  Index m_G() const { return C_G.rows(); }
  Index m_I() const { return C_I.rows(); }
  Index m_S() const { return C_S.size(); }
  Index n_pos() const { return static_cast<Index>(pos_index.size()); }

  /// Throws ConfigError if any dimension, symmetry or positivity invariant fails.
  void validate() const;
};

/// Planar double integrator sampled at 0.1 s with the published noise levels.
/// `eta_S` is the genuine signal strength (scalar channel).
SystemModel double_integrator_model(double eta_S);

struct TrueState {
  Vec x;
  long k = 0;
};

struct Attacker {
  Vec x_a;  // n-vector; only the position components are used
  double eta = 0.0;
  Vec d;    // injected GPS offset, m_G
  double r_effect = 0.0;
};

struct SensorBundle {
  Vec y_G;
  Vec y_I;
  Vec y_S;
};

struct MeasurementNoise {
  Vec v_G;
  Vec v_I;
  Vec v_S;
};

Vec position_of(const SystemModel& model, const Vec& x);
Vec velocity_of(const SystemModel& model, const Vec& x);

/// Euclidean distance over the position components of two n-vectors.
double position_distance(const SystemModel& model, const Vec& a, const Vec& b);

/// x_{k+1} = A x_k + B u_k + w_k.
TrueState step_dynamics(const SystemModel& model, const TrueState& x, const Vec& u, const Vec& w);

/// Sensor outputs at x given the previous state, with externally drawn noise.
/// Throws SingularityError when the UAV sits on the spoofer while in range.
SensorBundle measure(const SystemModel& model, const TrueState& x, const TrueState& x_prev,
                     const Attacker& attacker, bool in_range, const MeasurementNoise& noise);

/// Mean received spoofer power C_S * eta / dist^2 for every channel.
Vec received_power(const Vec& C_S, double eta, double dist);

/// Largest radius at which C_S * eta / r^2 still exceeds eta_S.
double effective_range(double eta, double C_S, double eta_S);

/// Genuine signal strength that makes `r_effect` the boundary for (eta, C_S).
double genuine_strength_for_range(double eta, double C_S, double r_effect);

/// Closed boundary: dist == r_effect counts as inside.
bool in_range(const SystemModel& model, const Vec& x, const Attacker& attacker);

}  // namespace spoofguard
