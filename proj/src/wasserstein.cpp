#include "wassbound/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wassbound {
namespace {

void check_same_shape(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) throw std::invalid_argument("wasserstein: sample sizes differ");
  if (a.dim() != b.dim()) throw std::invalid_argument("wasserstein: dimensions differ");
}

BoundEstimate make_estimate(BoundKind kind, double value, Eigen::VectorXd loo) {
  BoundEstimate est;
  est.kind = kind;
  est.value = value;
  est.jackknife_variance = jackknife_variance(loo).variance;
  est.loo_values = std::move(loo);
  return est;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(RowMatrix points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw std::invalid_argument("empirical measure: need at least one point");
  if (points_.cols() < 1) throw std::invalid_argument("empirical measure: dimension must be at least 1");
  if (!points_.allFinite()) throw std::invalid_argument("empirical measure: coordinates must be finite");
}

EmpiricalMeasure EmpiricalMeasure::without(Index i) const {
  if (size() < 2) throw std::invalid_argument("empirical measure: cannot delete the only point");
  if (i < 0 || i >= size()) throw std::invalid_argument("empirical measure: index out of range");
  RowMatrix kept(size() - 1, dim());
  kept.topRows(i) = points_.topRows(i);
  kept.bottomRows(size() - 1 - i) = points_.bottomRows(size() - 1 - i);
  return EmpiricalMeasure(std::move(kept));
}

CostMatrix squared_distance_costs(const EmpiricalMeasure& from, const EmpiricalMeasure& to) {
  check_same_shape(from, to);
  const Index n = from.size();
  RowMatrix c(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto xi = from.point(i);
    for (Index j = 0; j < n; ++j) c(i, j) = (xi - to.point(j)).squaredNorm();
  }
  return CostMatrix(std::move(c));
}

TransportResult w2_squared(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  AssignmentSolution solution = solve_assignment(squared_distance_costs(a, b));
  const double cost = solution.objective;
  return {cost, std::move(solution)};
}

double w2_squared_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  check_same_shape(a, b);
  if (a.dim() != 1) throw std::invalid_argument("w2_squared_1d: samples must be one-dimensional");
  std::vector<double> xs(a.points().data(), a.points().data() + a.size());
  std::vector<double> ys(b.points().data(), b.points().data() + b.size());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += (xs[i] - ys[i]) * (xs[i] - ys[i]);
  return total / static_cast<double>(xs.size());
}

BoundSet combine_bounds(const LeaveOneOutCosts& primary, std::span<const LeaveOneOutCosts> baselines) {
  if (baselines.empty()) throw std::invalid_argument("combine_bounds: need at least one baseline");
  const Index n = primary.loo_costs.size();
  for (const auto& b : baselines) {
    if (b.loo_costs.size() != n) throw std::invalid_argument("combine_bounds: replicate counts differ");
  }
  const double count = static_cast<double>(baselines.size());

  double base_sq = 0.0;
  double base_root = 0.0;
  Eigen::VectorXd base_sq_loo = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd base_root_loo = Eigen::VectorXd::Zero(n);
  for (const auto& b : baselines) {
    base_sq += b.full_cost;
    base_root += std::sqrt(b.full_cost);
    base_sq_loo += b.loo_costs;
    base_root_loo += b.loo_costs.cwiseSqrt();
  }
  base_sq /= count;
  base_root /= count;
  base_sq_loo /= count;
  base_root_loo /= count;

  const double upper = primary.full_cost - base_sq;
  const double lower = std::sqrt(primary.full_cost) - base_root;
  Eigen::VectorXd upper_loo = primary.loo_costs - base_sq_loo;
  Eigen::VectorXd lower_loo = primary.loo_costs.cwiseSqrt() - base_root_loo;
  Eigen::VectorXd lower_sq_loo = lower_loo.unaryExpr([](double x) { return signed_square(x); });

  return {make_estimate(BoundKind::UpperSquared, upper, std::move(upper_loo)),
          make_estimate(BoundKind::LowerUnsquared, lower, std::move(lower_loo)),
          make_estimate(BoundKind::LowerSquaredSigned, signed_square(lower), std::move(lower_sq_loo))};
}

BoundSet estimate_bounds(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime,
                         std::size_t workers) {
  check_same_shape(nu, mu);
  check_same_shape(mu_prime, mu);
  if (nu.size() < 2) throw std::invalid_argument("estimate_bounds: leave-one-out replicates need n >= 2");
  const LeaveOneOutCosts primary = flapjack(squared_distance_costs(nu, mu), workers);
  const LeaveOneOutCosts baseline = flapjack(squared_distance_costs(mu_prime, mu), workers);
  return combine_bounds(primary, std::span<const LeaveOneOutCosts>(&baseline, 1));
}

BoundEstimate estimate_upper(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime) {
  return estimate_bounds(nu, mu, mu_prime).upper;
}

BoundEstimate estimate_lower(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime) {
  return estimate_bounds(nu, mu, mu_prime).lower;
}

BoundEstimate estimate_lower_squared(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu,
                                     const EmpiricalMeasure& mu_prime) {
  return estimate_bounds(nu, mu, mu_prime).lower_squared;
}

void attach_intervals(BoundSet& bounds, double alpha) {
  bounds.upper.ci = gaussian_ci(bounds.upper.value, jackknife_variance(bounds.upper.loo_values), alpha);
  const Interval lower_ci = chebyshev_ci(bounds.lower.value, jackknife_variance(bounds.lower.loo_values), alpha);
  bounds.lower.ci = lower_ci;
  bounds.lower_squared.ci = signed_square_ci(lower_ci);
}

double decay_constant(const EmpiricalMeasure& mu_samples, const EmpiricalMeasure& nu_samples) {
  const double mu_second = mu_samples.points().rowwise().squaredNorm().mean();
  const double nu_second = nu_samples.points().rowwise().squaredNorm().mean();
  return 3.0 * std::sqrt(mu_second) + std::sqrt(nu_second);
}

}  // namespace wassbound
