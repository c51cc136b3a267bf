#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "wassbound/assignment.hpp"
#include "wassbound/common.hpp"
#include "wassbound/jackknife.hpp"

namespace wassbound {

/// n equally weighted points in R^d, one point per row.
class EmpiricalMeasure {
 public:
  /// Throws std::invalid_argument unless n >= 1, d >= 1 and all coordinates are finite.
  explicit EmpiricalMeasure(RowMatrix points);

  Index size() const noexcept { return points_.rows(); }
  Index dim() const noexcept { return points_.cols(); }
  const RowMatrix& points() const noexcept { return points_; }
  auto point(Index i) const { return points_.row(i); }

  /// The measure with point i removed (requires n >= 2).
  EmpiricalMeasure without(Index i) const;

 private:
  RowMatrix points_;
};

/// c_ij = ||from_i - to_j||^2.
CostMatrix squared_distance_costs(const EmpiricalMeasure& from, const EmpiricalMeasure& to);

struct TransportResult {
  double cost = 0.0;  ///< squared 2-Wasserstein distance between the empirical measures
  AssignmentSolution solution;
};

/// Empirical W2^2 via the assignment solver. Requires equal n and d.
TransportResult w2_squared(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Empirical W2^2 in one dimension by pairing order statistics, O(n log n).
double w2_squared_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

enum class BoundKind { UpperSquared, LowerUnsquared, LowerSquaredSigned };

struct BoundEstimate {
  BoundKind kind = BoundKind::UpperSquared;
  double value = 0.0;
  Eigen::VectorXd loo_values;  ///< one replicate per deleted index (paired deletion)
  double jackknife_variance = 0.0;
  std::optional<Interval> ci;  ///< set by attach_intervals
};

/// U, L and L_sq computed from one set of assignment solves.
struct BoundSet {
  BoundEstimate upper;
  BoundEstimate lower;
  BoundEstimate lower_squared;
};

/// Combines leave-one-out transport costs into the three bounds.
///
/// `primary` holds W2^2(nu, mu) and its replicates; each entry of
/// `baselines` holds W2^2(mu', mu) for one debiasing measure mu'. The upper
/// bound subtracts the mean baseline cost, the lower bound the mean baseline
/// root cost; replicates are combined index by index.
BoundSet combine_bounds(const LeaveOneOutCosts& primary, std::span<const LeaveOneOutCosts> baselines);

/// U, L, L_sq for samples nu (the measure being assessed), mu (reference)
/// and mu_prime (independent copy of mu). mu must be independent of nu and
/// mu_prime; the estimators are invariant to dependence between nu and
/// mu_prime. Replicates delete index i from all three samples jointly.
/// Two Flapjack runs are shared by the three bounds.
BoundSet estimate_bounds(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime,
                         std::size_t workers = 1);

BoundEstimate estimate_upper(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime);
BoundEstimate estimate_lower(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu, const EmpiricalMeasure& mu_prime);
BoundEstimate estimate_lower_squared(const EmpiricalMeasure& nu, const EmpiricalMeasure& mu,
                                     const EmpiricalMeasure& mu_prime);

/// Gaussian interval for the upper bound, Chebyshev interval for the lower
/// bound, and the signed square of the latter for the squared lower bound.
void attach_intervals(BoundSet& bounds, double alpha);

/// Plug-in K = 3 (mean ||X||^2)^(1/2) + (mean ||Y||^2)^(1/2), X from mu, Y from nu.
double decay_constant(const EmpiricalMeasure& mu_samples, const EmpiricalMeasure& nu_samples);

}  // namespace wassbound
