#pragma once

#include <vector>

#include <Eigen/Core>

#include "wassbound/common.hpp"

namespace wassbound {

/// Square matrix of finite assignment costs, stored row-major.
class CostMatrix {
 public:
  /// Throws std::invalid_argument for empty, non-square or non-finite input.
  explicit CostMatrix(RowMatrix entries);

  Index size() const noexcept { return entries_.rows(); }
  double operator()(Index row, Index col) const noexcept { return entries_(row, col); }
  const RowMatrix& entries() const noexcept { return entries_; }

  double min_entry() const { return entries_.minCoeff(); }
  double max_entry() const { return entries_.maxCoeff(); }

 private:
  RowMatrix entries_;
};

/// Optimal primal/dual pair for the balanced assignment problem.
///
/// Row i is matched to column row_to_col[i]. The duals satisfy
/// u_i + v_j <= c_ij everywhere, with equality on matched pairs, so
/// (sum u + sum v) / n equals the objective.
struct AssignmentSolution {
  std::vector<Index> row_to_col;
  Eigen::VectorXd row_duals;
  Eigen::VectorXd col_duals;
  double objective = 0.0;  ///< mean matched cost, sum_i c_{i, sigma(i)} / n

  Index size() const noexcept { return static_cast<Index>(row_to_col.size()); }
  std::vector<Index> col_to_row() const;
};

/// Exact solver: Jonker-Volgenant successive shortest augmenting paths,
/// started from zero column duals (no pre-solve heuristics). O(n^3).
AssignmentSolution solve_assignment(const CostMatrix& costs);

/// Re-optimises `previous` after a single entry change.
///
/// `changed` must differ from the matrix `previous` was optimal for only at
/// (row, col). The column's matched edge is dropped, its dual reset to
/// min_i (c_i,col - u_i) and one shortest augmenting path restores
/// optimality in O(n^2).
AssignmentSolution repair_after_entry_change(const AssignmentSolution& previous, const CostMatrix& changed,
                                             Index row, Index col);

/// Full objective plus the n paired leave-one-out objectives: loo_costs[j]
/// is the optimal mean cost once row j and column j are deleted.
struct LeaveOneOutCosts {
  double full_cost = 0.0;
  Eigen::VectorXd loo_costs;
};

/// Flapjack: all n leave-one-out assignment costs in O(n^3) total by
/// repairing the size-n optimum once per deleted index. Each repair starts
/// from its own copy of the optimum, so results do not depend on `workers`.
/// Requires n >= 2.
LeaveOneOutCosts flapjack(const CostMatrix& costs, std::size_t workers = 1);

/// Same, reusing an already computed optimum for `costs`.
LeaveOneOutCosts flapjack(const CostMatrix& costs, const AssignmentSolution& optimum, std::size_t workers = 1);

/// Sentinel used by flapjack to force a diagonal assignment:
/// 2 min(c) - max(c) - 1 - |max(c)|, strictly below 2 min(c) - max(c).
double forcing_cost(const CostMatrix& costs);

/// Largest violation of u_i + v_j <= c_ij (0 when dual feasible).
double max_dual_infeasibility(const AssignmentSolution& solution, const CostMatrix& costs);
/// Largest |c_{i,sigma(i)} - u_i - v_{sigma(i)}| over matched pairs.
double max_slackness_gap(const AssignmentSolution& solution, const CostMatrix& costs);

}  // namespace wassbound
