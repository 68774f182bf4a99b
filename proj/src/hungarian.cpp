#include "mcalign/hungarian.hpp"

#include "mcalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mcalign {

AssignmentProblem AssignmentProblem::from_rows(const Matrix& source, const Matrix& target) {
  if (source.rows() != target.rows() || source.cols() != target.cols()) {
    throw DimensionError("assignment: source and target row sets differ in shape");
  }
  const auto n = source.rows();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = (target.row(i) - source.row(j)).squaredNorm();
  return {std::move(cost)};
}

namespace {

// Finds an augmenting path for `row` in the tight-edge graph, never touching
// rows marked as locked.
bool augment(int row, const std::vector<std::vector<int>>& tight, std::vector<int>& row_of_col,
             std::vector<int>& col_of_row, std::vector<char>& visited,
             const std::vector<char>& locked) {
  for (int j : tight[row]) {
    if (visited[j]) continue;
    visited[j] = 1;
    const int owner = row_of_col[j];
    if (owner == -1 ||
        (!locked[owner] && augment(owner, tight, row_of_col, col_of_row, visited, locked))) {
      row_of_col[j] = row;
      col_of_row[row] = j;
      return true;
    }
  }
  return false;
}

}  // namespace

AssignmentSolution solve_assignment(const AssignmentProblem& problem) {
  const Matrix& a = problem.cost;
  if (a.rows() != a.cols()) throw DimensionError("hungarian: cost matrix must be square");
  if (!a.allFinite()) throw ValidationError("hungarian: cost matrix has non-finite entries");
  const int n = static_cast<int>(a.rows());
  if (n == 0) return {PermutationMap(std::vector<int>{}), 0.0};

  // Shortest augmenting path Hungarian method, 1-indexed with a virtual
  // column 0. Invariant: u[i] + v[j] <= a(i,j), with equality on matches.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  // Tight-edge graph under the optimal potentials. Every optimal assignment
  // is a perfect matching of this graph (complementary slackness).
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale;
  std::vector<std::vector<int>> tight(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (a(i, j) - u[i + 1] - v[j + 1] <= tol) tight[i].push_back(j);

  std::vector<int> col_of_row(n, -1), row_of_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    col_of_row[p[j] - 1] = j - 1;
    row_of_col[j - 1] = p[j] - 1;
  }

  // Lexicographic minimisation: fix rows in order, each to the smallest
  // tight column that still admits a perfect matching of the rest.
  std::vector<char> locked(n, 0), visited(n);
  for (int i = 0; i < n; ++i) {
    for (int j : tight[i]) {
      if (j == col_of_row[i]) break;
      const int owner = row_of_col[j];
      if (locked[owner]) continue;
      // Tentatively hand column j to row i and re-match the displaced owner,
      // which may take the column row i releases.
      auto trial_col_of_row = col_of_row;
      auto trial_row_of_col = row_of_col;
      const int released = col_of_row[i];
      trial_row_of_col[released] = -1;
      trial_row_of_col[j] = i;
      trial_col_of_row[i] = j;
      trial_col_of_row[owner] = -1;
      std::fill(visited.begin(), visited.end(), 0);
      visited[j] = 1;
      locked[i] = 1;
      const bool ok = augment(owner, tight, trial_row_of_col, trial_col_of_row, visited, locked);
      locked[i] = 0;
      if (ok) {
        col_of_row = std::move(trial_col_of_row);
        row_of_col = std::move(trial_row_of_col);
        break;
      }
    }
    locked[i] = 1;
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i) total += a(i, col_of_row[i]);
  return {PermutationMap(col_of_row), total};
}

}  // namespace mcalign
