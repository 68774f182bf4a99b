#pragma once

#include "mcalign/tabular_mdp.hpp"

namespace mcalign {

/// Square linear assignment problem; rows are target (hatted) states and
/// columns source states, so an assignment row i -> column j reads pi(i) = j.
struct AssignmentProblem {
  Matrix cost;

  /// cost(i, j) = || target.row(i) - source.row(j) ||_2^2
  static AssignmentProblem from_rows(const Matrix& source, const Matrix& target);
};

struct AssignmentSolution {
  PermutationMap assignment;
  double cost = 0.0;
};

/// Minimum-cost perfect assignment in O(n^3) (shortest augmenting paths with
/// potentials). Among all optimal assignments the lexicographically smallest
/// one is returned, where optimality of an edge is judged by its reduced cost
/// under the final potentials (tolerance 1e-9 relative to max |cost|).
AssignmentSolution solve_assignment(const AssignmentProblem& problem);

inline PermutationMap hungarian(const AssignmentProblem& problem) {
  return solve_assignment(problem).assignment;
}

}  // namespace mcalign
