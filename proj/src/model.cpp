#include "spoofguard/model.hpp"

#include "spoofguard/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace spoofguard {

namespace {

std::string dims(const Mat& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("system model: " + msg);
}

void require_symmetric(const Mat& m, const char* name) {
  const double scale = std::max(1.0, m.norm());
  require(m.rows() == m.cols(), std::string(name) + " must be square, got " + dims(m));
  require((m - m.transpose()).norm() <= 1e-9 * scale, std::string(name) + " must be symmetric");
}

void require_psd(const Mat& m, const char* name, bool strict) {
  require_symmetric(m, name);
  if (m.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Mat> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (strict)
    require(lo > 0.0, std::string(name) + " must be positive definite");
  else
    require(lo >= -1e-9 * std::max(1.0, m.norm()), std::string(name) + " must be PSD");
}

void require_indices(const std::vector<Index>& idx, Index n, const char* name) {
  for (Index i : idx)
    require(i >= 0 && i < n, std::string(name) + " entry out of range: " + std::to_string(i));
}

}  // namespace

void SystemModel::validate() const {
  const Index nx = n();
  require(nx > 0, "A must be non-empty");
  require(A.cols() == nx, "A must be square, got " + dims(A));
  require(B.rows() == nx, "B must have n rows, got " + dims(B));
  require(C_G.cols() == nx, "C_G must have n columns, got " + dims(C_G));
  require(C_I.cols() == nx, "C_I must have n columns, got " + dims(C_I));
  require(Sigma_w.rows() == nx && Sigma_w.cols() == nx, "Sigma_w must be n x n");
  require(Sigma_G.rows() == m_G() && Sigma_G.cols() == m_G(), "Sigma_G must be m_G x m_G");
  require(Sigma_I.rows() == m_I() && Sigma_I.cols() == m_I(), "Sigma_I must be m_I x m_I");
  require(Sigma_S.rows() == m_S() && Sigma_S.cols() == m_S(), "Sigma_S must be m_S x m_S");
  require(eta_S.size() == m_S(), "eta_S must have m_S entries");
  require(m_S() >= 1, "at least one signal-strength channel is required");
  require_psd(Sigma_w, "Sigma_w", false);
  require_psd(Sigma_G, "Sigma_G", true);
  require_psd(Sigma_I, "Sigma_I", true);
  require_psd(Sigma_S, "Sigma_S", true);
  require((eta_S.array() > 0.0).all(), "eta_S must be positive");
  require((C_S.array() > 0.0).all(), "C_S entries must be positive");
  require(!pos_index.empty(), "pos_index must not be empty");
  require(vel_index.size() == pos_index.size(), "vel_index must match pos_index in size");
  require_indices(pos_index, nx, "pos_index");
  require_indices(vel_index, nx, "vel_index");
  require(A.allFinite() && B.allFinite() && C_G.allFinite() && C_I.allFinite(),
          "matrices must be finite");
}

SystemModel double_integrator_model(double eta_S) {
  constexpr double dt = 0.1;
  SystemModel m;
  m.A = Mat::Identity(4, 4);
  m.A(0, 2) = dt;
  m.A(1, 3) = dt;
  m.B = Mat::Zero(4, 2);
  m.B(2, 0) = dt;
  m.B(3, 1) = dt;
  m.C_G = Mat::Zero(2, 4);
  m.C_G(0, 0) = 1.0;
  m.C_G(1, 1) = 1.0;
  m.C_I = Mat::Zero(2, 4);
  m.C_I(0, 2) = 1.0;
  m.C_I(1, 3) = 1.0;
  m.C_S = Vec::Ones(1);
  m.Sigma_w = 0.1 * Mat::Identity(4, 4);
  m.Sigma_G = Mat::Identity(2, 2);
  m.Sigma_I = 0.01 * Mat::Identity(2, 2);
  m.Sigma_S = Mat::Identity(1, 1);
  m.eta_S = Vec::Constant(1, eta_S);
  m.pos_index = {0, 1};
  m.vel_index = {2, 3};
  return m;
}

Vec position_of(const SystemModel& model, const Vec& x) { return select(x, model.pos_index); }

Vec velocity_of(const SystemModel& model, const Vec& x) { return select(x, model.vel_index); }

double position_distance(const SystemModel& model, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (Index i : model.pos_index) {
    const double d = a(i) - b(i);
    s += d * d;
  }
  return std::sqrt(s);
}

TrueState step_dynamics(const SystemModel& model, const TrueState& x, const Vec& u, const Vec& w) {
  if (x.x.size() != model.n() || u.size() != model.m_u() || w.size() != model.n())
    throw ConfigError("step_dynamics: dimension mismatch (x " + std::to_string(x.x.size()) +
                      ", u " + std::to_string(u.size()) + ", w " + std::to_string(w.size()) + ")");
  return TrueState{model.A * x.x + model.B * u + w, x.k + 1};
}

Vec received_power(const Vec& C_S, double eta, double dist) {
  if (!(dist >= kMinDistance))
    throw SingularityError("signal strength evaluated at distance " + std::to_string(dist) +
                           " m, below the 1e-6 m guard");
  return C_S * (eta / (dist * dist));
}

SensorBundle measure(const SystemModel& model, const TrueState& x, const TrueState& x_prev,
                     const Attacker& attacker, bool in_range, const MeasurementNoise& noise) {
  if (noise.v_G.size() != model.m_G() || noise.v_I.size() != model.m_I() ||
      noise.v_S.size() != model.m_S())
    throw ConfigError("measure: noise dimension mismatch");
  SensorBundle y;
  y.y_G = model.C_G * x.x + noise.v_G;
  if (in_range) y.y_G += attacker.d;
  y.y_I = model.C_I * (x.x - x_prev.x) + noise.v_I;
  if (in_range) {
    const double dist = position_distance(model, attacker.x_a, x.x);
    y.y_S = received_power(model.C_S, attacker.eta, dist) + noise.v_S;
  } else {
    y.y_S = model.eta_S + noise.v_S;
  }
  return y;
}

double effective_range(double eta, double C_S, double eta_S) {
  if (!(eta > 0.0 && C_S > 0.0 && eta_S > 0.0))
    throw DomainError("effective_range: eta, C_S and eta_S must be positive");
  return std::sqrt(C_S * eta / eta_S);
}

double genuine_strength_for_range(double eta, double C_S, double r_effect) {
  if (!(eta > 0.0 && C_S > 0.0 && r_effect > 0.0))
    throw DomainError("genuine_strength_for_range: inputs must be positive");
  return C_S * eta / (r_effect * r_effect);
}

bool in_range(const SystemModel& model, const Vec& x, const Attacker& attacker) {
  return position_distance(model, attacker.x_a, x) <= attacker.r_effect;
}

}  // namespace spoofguard
