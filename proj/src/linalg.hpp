#pragma once

// Internal helpers shared by the filters.

#include "spoofguard/errors.hpp"
#include "spoofguard/types.hpp"

#include <string>

namespace spoofguard::detail {

/// Reciprocal-condition floor for innovation covariances.
inline constexpr double kMinRcond = 1e-12;

/// Returns N S^{-1} for symmetric positive definite S.
inline Mat right_solve_spd(const Mat& N, const Mat& S, const char* what) {
  if (S.rows() == 0) return Mat::Zero(N.rows(), 0);
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond))
    throw NumericalError(std::string(what) + ": innovation covariance is singular or "
                         "ill-conditioned (rcond " + std::to_string(llt.rcond()) + ")");
  return llt.solve(N.transpose()).transpose();
}

inline Vec solve_spd(const Mat& S, const Vec& b, const char* what) {
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kMinRcond))
    throw NumericalError(std::string(what) + ": matrix is singular or ill-conditioned");
  return llt.solve(b);
}

}  // namespace spoofguard::detail
