#include "wassbound/jackknife.hpp"

#include <cmath>
#include <stdexcept>

namespace wassbound {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("confidence level alpha must lie in (0, 1)");
}

}  // namespace

JackknifeResult jackknife_variance(std::span<const double> loo_values) {
  const std::size_t n = loo_values.size();
  if (n < 2) throw std::invalid_argument("jackknife: need at least two replicates");
  double sum = 0.0;
  for (const double f : loo_values) {
    if (!std::isfinite(f)) throw std::invalid_argument("jackknife: replicates must be finite");
    sum += f;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const double f : loo_values) ss += (f - mean) * (f - mean);
  return {static_cast<double>(n - 1) / static_cast<double>(n) * ss, static_cast<Index>(n), mean};
}

JackknifeResult jackknife_variance(const Eigen::VectorXd& loo_values) {
  return jackknife_variance(std::span<const double>(loo_values.data(), static_cast<std::size_t>(loo_values.size())));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

Interval gaussian_ci(double estimate, const JackknifeResult& jk, double alpha) {
  check_alpha(alpha);
  const double half = std::sqrt(jk.variance) * normal_quantile(1.0 - alpha / 2.0);
  return {estimate - half, estimate + half};
}

Interval chebyshev_ci(double estimate, const JackknifeResult& jk, double alpha) {
  check_alpha(alpha);
  const double half = std::sqrt(jk.variance / alpha);
  return {estimate - half, estimate + half};
}

Interval signed_square_ci(const Interval& ci) { return {signed_square(ci.low), signed_square(ci.high)}; }

}  // namespace wassbound
