#pragma once

#include "spoofguard/model.hpp"

#include <random>

namespace testutil {

using spoofguard::Mat;
using spoofguard::Vec;

inline Mat random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(gen);
  return m;
}

inline Vec random_vector(std::mt19937_64& gen, Eigen::Index n, double scale = 1.0) {
  return random_matrix(gen, n, 1, scale);
}

inline Mat random_spd(std::mt19937_64& gen, Eigen::Index n, double floor = 0.1) {
  const Mat G = random_matrix(gen, n, n);
  return G * G.transpose() + floor * Mat::Identity(n, n);
}

// One-state plant with a GPS-like channel and no relative channel.
inline spoofguard::SystemModel scalar_model(double a, double sigma_w2, double sigma_g2) {
  spoofguard::SystemModel m;
  m.A = Mat::Constant(1, 1, a);
  m.B = Mat::Constant(1, 1, 1.0);
  m.C_G = Mat::Constant(1, 1, 1.0);
  m.C_I = Mat::Zero(0, 1);
  m.C_S = Vec::Ones(1);
  m.Sigma_w = Mat::Constant(1, 1, sigma_w2);
  m.Sigma_G = Mat::Constant(1, 1, sigma_g2);
  m.Sigma_I = Mat::Zero(0, 0);
  m.Sigma_S = Mat::Identity(1, 1);
  m.eta_S = Vec::Ones(1);
  m.pos_index = {0};
  m.vel_index = {0};
  return m;
}

inline double min_eig(const Mat& P) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(P, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline double max_eig(const Mat& P) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(P, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace testutil
