#pragma once

#include <span>

#include <Eigen/Core>

#include "wassbound/common.hpp"

namespace wassbound {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct JackknifeResult {
  double variance = 0.0;  ///< (n-1)/n * sum_i (F_i - mean)^2
  Index n = 0;
  double mean_loo = 0.0;
};

/// Jackknife variance from leave-one-out replicates F_1..F_n (n >= 2, finite).
JackknifeResult jackknife_variance(std::span<const double> loo_values);
JackknifeResult jackknife_variance(const Eigen::VectorXd& loo_values);

/// Standard normal quantile, Acklam's rational approximation
/// (absolute error below 1.2e-8 on (0, 1)).
double normal_quantile(double p);

/// estimate -/+ sd * z_{1 - alpha/2}. Not meaningful for the upper bound when
/// the two distributions coincide (the limiting variance vanishes there).
Interval gaussian_ci(double estimate, const JackknifeResult& jk, double alpha);

/// estimate -/+ sd / sqrt(alpha): conservative, distribution free.
Interval chebyshev_ci(double estimate, const JackknifeResult& jk, double alpha);

/// Maps both endpoints through x -> sign(x) x^2, which is monotone, so the
/// coverage of the input interval carries over.
Interval signed_square_ci(const Interval& ci);

inline double signed_square(double x) { return x < 0.0 ? -x * x : x * x; }

}  // namespace wassbound
