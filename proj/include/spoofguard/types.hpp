#pragma once

#include <Eigen/Dense>

#include <vector>

namespace spoofguard {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Mode of the supervisory switch: nominal tracking or attack response.
enum class ControlMode { Robust, Emergency };

inline const char* to_string(ControlMode m) {
  return m == ControlMode::Robust ? "ROBUST" : "EMERGENCY";
}

// Euclidean distances below this are treated as a singular evaluation of 1/d^2.
inline constexpr double kMinDistance = 1e-6;

/// Select the entries listed in `idx` from `v`.
inline Vec select(const Vec& v, const std::vector<Index>& idx) {
  Vec out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

inline Mat select(const Mat& m, const std::vector<Index>& idx) {
  const auto k = static_cast<Index>(idx.size());
  Mat out(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace spoofguard
