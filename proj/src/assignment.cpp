#include "wassbound/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wassbound {
namespace {

constexpr Index kFree = -1;

// Partial matching plus column duals. Row duals are implied by
// u_i = c_{i, sigma(i)} - v_{sigma(i)} for matched rows.
struct MatchingState {
  std::vector<Index> row_to_col;
  std::vector<Index> col_to_row;
  Eigen::VectorXd v;

  explicit MatchingState(Index n) : row_to_col(n, kFree), col_to_row(n, kFree), v(Eigen::VectorXd::Zero(n)) {}
  MatchingState(const AssignmentSolution& s) : row_to_col(s.row_to_col), col_to_row(s.col_to_row()), v(s.col_duals) {}
};

struct Workspace {
  std::vector<double> dist;
  std::vector<Index> pred;
  std::vector<Index> cols;

  explicit Workspace(Index n) : dist(n), pred(n), cols(n) {}
};

// Reads a cost matrix with one overridden entry.
struct OverriddenCost {
  const CostMatrix& base;
  Index row;
  Index col;
  double value;

  double operator()(Index i, Index j) const noexcept { return (i == row && j == col) ? value : base(i, j); }
};

struct PlainCost {
  const CostMatrix& base;
  double operator()(Index i, Index j) const noexcept { return base(i, j); }
};

// One Dijkstra-style shortest augmenting path from `free_row` to the nearest
// free column, in reduced costs c_ij - v_j - u_i. Column duals of settled
// columns are shifted so that dual feasibility and complementary slackness
// hold on the enlarged matching. Comparisons are exact.
template <class Cost>
void augment(const Cost& cost, Index free_row, MatchingState& s, Workspace& ws) {
  const Index n = static_cast<Index>(s.row_to_col.size());
  auto& dist = ws.dist;
  auto& pred = ws.pred;
  auto& cols = ws.cols;
  for (Index j = 0; j < n; ++j) {
    dist[j] = cost(free_row, j) - s.v[j];
    pred[j] = free_row;
    cols[j] = j;
  }

  // cols[0, low): settled; cols[low, up): at the current minimum, waiting to
  // be scanned; cols[up, n): not yet reached at the minimum.
  Index low = 0;
  Index up = 0;
  double min_dist = 0.0;
  Index sink = kFree;
  while (sink == kFree) {
    if (low == up) {
      min_dist = std::numeric_limits<double>::infinity();
      for (Index k = up; k < n; ++k) {
        const Index j = cols[k];
        const double dj = dist[j];
        if (dj <= min_dist) {
          if (dj < min_dist) {
            up = low;
            min_dist = dj;
          }
          cols[k] = cols[up];
          cols[up++] = j;
        }
      }
      if (!std::isfinite(min_dist)) throw NumericalError("assignment: shortest path search lost all columns");
      // Lowest-index free column among the tied minima wins.
      for (Index k = low; k < up; ++k) {
        const Index j = cols[k];
        if (s.col_to_row[j] == kFree && (sink == kFree || j < sink)) sink = j;
      }
      if (sink != kFree) break;
    }

    const Index scanned = cols[low++];
    const Index row = s.col_to_row[scanned];
    const double offset = cost(row, scanned) - s.v[scanned] - min_dist;
    for (Index k = up; k < n; ++k) {
      const Index j = cols[k];
      const double h = cost(row, j) - s.v[j] - offset;
      if (h < dist[j]) {
        dist[j] = h;
        pred[j] = row;
        if (h == min_dist) {
          if (s.col_to_row[j] == kFree) {
            sink = j;
            break;
          }
          cols[k] = cols[up];
          cols[up++] = j;
        }
      }
    }
  }

  for (Index k = 0; k < low; ++k) {
    const Index j = cols[k];
    s.v[j] += dist[j] - min_dist;
  }

  Index j = sink;
  for (;;) {
    const Index i = pred[j];
    s.col_to_row[j] = i;
    const Index previous = s.row_to_col[i];
    s.row_to_col[i] = j;
    if (i == free_row) break;
    j = previous;
  }
}

template <class Cost>
AssignmentSolution finish(const Cost& cost, MatchingState&& s) {
  const Index n = static_cast<Index>(s.row_to_col.size());
  AssignmentSolution out;
  out.row_duals.resize(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Index j = s.row_to_col[i];
    const double c = cost(i, j);
    total += c;
    out.row_duals[i] = c - s.v[j];
  }
  out.row_to_col = std::move(s.row_to_col);
  out.col_duals = std::move(s.v);
  out.objective = total / static_cast<double>(n);
  return out;
}

void check_compatible(const AssignmentSolution& solution, const CostMatrix& costs) {
  if (solution.size() != costs.size() || solution.row_duals.size() != costs.size() ||
      solution.col_duals.size() != costs.size()) {
    throw std::invalid_argument("assignment: solution and cost matrix sizes differ");
  }
}

}  // namespace

CostMatrix::CostMatrix(RowMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0) throw std::invalid_argument("cost matrix: n must be at least 1");
  if (entries_.rows() != entries_.cols()) throw std::invalid_argument("cost matrix: must be square");
  if (!entries_.allFinite()) throw std::invalid_argument("cost matrix: entries must be finite");
}

std::vector<Index> AssignmentSolution::col_to_row() const {
  std::vector<Index> inverse(row_to_col.size(), kFree);
  for (std::size_t i = 0; i < row_to_col.size(); ++i) inverse[row_to_col[i]] = static_cast<Index>(i);
  return inverse;
}

AssignmentSolution solve_assignment(const CostMatrix& costs) {
  const Index n = costs.size();
  MatchingState state(n);
  Workspace ws(n);
  const PlainCost cost{costs};
  for (Index i = 0; i < n; ++i) augment(cost, i, state, ws);
  return finish(cost, std::move(state));
}

AssignmentSolution repair_after_entry_change(const AssignmentSolution& previous, const CostMatrix& changed,
                                             Index row, Index col) {
  check_compatible(previous, changed);
  const Index n = changed.size();
  if (row < 0 || row >= n || col < 0 || col >= n) throw std::invalid_argument("repair: index out of range");

  MatchingState state(previous);
  const Index freed_row = state.col_to_row[col];
  state.row_to_col[freed_row] = kFree;
  state.col_to_row[col] = kFree;

  double v_col = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) v_col = std::min(v_col, changed(i, col) - previous.row_duals[i]);
  state.v[col] = v_col;

  Workspace ws(n);
  const PlainCost cost{changed};
  augment(cost, freed_row, state, ws);
  return finish(cost, std::move(state));
}

double forcing_cost(const CostMatrix& costs) {
  const double lo = costs.min_entry();
  const double hi = costs.max_entry();
  return 2.0 * lo - hi - 1.0 - std::abs(hi);
}

LeaveOneOutCosts flapjack(const CostMatrix& costs, std::size_t workers) {
  if (costs.size() < 2) throw std::invalid_argument("flapjack: leave-one-out needs n >= 2");
  return flapjack(costs, solve_assignment(costs), workers);
}

LeaveOneOutCosts flapjack(const CostMatrix& costs, const AssignmentSolution& optimum, std::size_t workers) {
  check_compatible(optimum, costs);
  const Index n = costs.size();
  if (n < 2) throw std::invalid_argument("flapjack: leave-one-out needs n >= 2");

  const double forced = forcing_cost(costs);
  const std::vector<Index> optimum_col_to_row = optimum.col_to_row();

  LeaveOneOutCosts out;
  out.full_cost = optimum.objective;
  out.loo_costs.resize(n);

  workers = std::max<std::size_t>(1, std::min<std::size_t>(workers, static_cast<std::size_t>(n)));
  std::vector<MatchingState> states(workers, MatchingState(n));
  std::vector<Workspace> spaces(workers, Workspace(n));

  const std::size_t chunk = (static_cast<std::size_t>(n) + workers - 1) / workers;
  parallel_for(workers, workers, [&](std::size_t w) {
    MatchingState& state = states[w];
    Workspace& ws = spaces[w];
    const Index begin = static_cast<Index>(w * chunk);
    const Index end = std::min<Index>(n, static_cast<Index>((w + 1) * chunk));
    for (Index j = begin; j < end; ++j) {
      // Restore the size-n optimum.
      state.row_to_col = optimum.row_to_col;
      state.col_to_row = optimum_col_to_row;
      state.v = optimum.col_duals;

      const Index matched_row = state.col_to_row[j];
      state.row_to_col[matched_row] = kFree;
      state.col_to_row[j] = kFree;

      const OverriddenCost cost{costs, j, j, forced};
      double v_j = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n; ++i) v_j = std::min(v_j, cost(i, j) - optimum.row_duals[i]);
      state.v[j] = v_j;

      augment(cost, matched_row, state, ws);
      if (state.row_to_col[j] != j) {
        throw NumericalError("flapjack: forced diagonal assignment lost at index " + std::to_string(j));
      }
      double total = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (i != j) total += costs(i, state.row_to_col[i]);
      }
      out.loo_costs[j] = total / static_cast<double>(n - 1);
    }
  });
  return out;
}

double max_dual_infeasibility(const AssignmentSolution& solution, const CostMatrix& costs) {
  check_compatible(solution, costs);
  double worst = 0.0;
  for (Index i = 0; i < costs.size(); ++i) {
    for (Index j = 0; j < costs.size(); ++j) {
      worst = std::max(worst, solution.row_duals[i] + solution.col_duals[j] - costs(i, j));
    }
  }
  return worst;
}

double max_slackness_gap(const AssignmentSolution& solution, const CostMatrix& costs) {
  check_compatible(solution, costs);
  double worst = 0.0;
  for (Index i = 0; i < costs.size(); ++i) {
    const Index j = solution.row_to_col[i];
    worst = std::max(worst, std::abs(costs(i, j) - solution.row_duals[i] - solution.col_duals[j]));
  }
  return worst;
}

}  // namespace wassbound
