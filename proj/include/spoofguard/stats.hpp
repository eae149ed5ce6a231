#pragma once

namespace spoofguard::stats {

/// Upper-tail chi-square critical value: P[X > q] = alpha for X ~ chi2(df).
/// Matches the usual table convention, e.g. chi2_quantile(2, 0.01) = 9.2103.
double chi2_quantile(int df, double alpha);

/// Standard normal quantile z with Phi(z) = p.
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

}  // namespace spoofguard::stats
