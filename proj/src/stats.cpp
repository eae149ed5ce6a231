#include "spoofguard/stats.hpp"

#include "spoofguard/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <string>

namespace spoofguard::stats {

double chi2_quantile(int df, double alpha) {
  if (df < 1) throw DomainError("chi2_quantile: df must be >= 1, got " + std::to_string(df));
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("chi2_quantile: alpha must lie in (0, 1), got " + std::to_string(alpha));
  // Q(df/2, x/2) = alpha  <=>  x = 2 * Q^{-1}(df/2, alpha)
  return 2.0 * boost::math::gamma_q_inv(0.5 * df, alpha);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("normal_quantile: p must lie in (0, 1), got " + std::to_string(p));
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw DomainError("regularized_gamma_p: need a > 0, x >= 0");
  return boost::math::gamma_p(a, x);
}

}  // namespace spoofguard::stats
