#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace lcf {

enum class AssignSense { Minimize, Maximize };

/// A cost at or beyond this magnitude marks a pair as forbidden: the solver
/// never selects it unless no complete matching exists otherwise, and pairs
/// that end up on a forbidden entry are dropped from the result.
inline constexpr double kForbiddenCost = 1e30;

/// Solution of a rectangular linear sum assignment problem.
struct AssignmentResult {
  /// (row, column) pairs, sorted by row; each row/column appears at most
  /// once. Size is min(rows, cols) minus any forbidden pairs dropped.
  std::vector<std::pair<int, int>> pairs;
  /// Sum of the cost entries over the reported pairs.
  double objective = 0.0;
};

/// Solves the linear sum assignment problem with the Jonker-Volgenant
/// shortest-augmenting-path algorithm (O(n^2 m) for n <= m; the matrix is
/// transposed internally otherwise).
///
/// Finite entries must stay well below kForbiddenCost in magnitude; entries
/// at kForbiddenCost or above (or below its negation) are treated as
/// forbidden. Ties between optimal matchings are broken toward the lowest
/// (row, column) lexicographic order via pairwise exchange.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost,
                                  AssignSense sense);

}  // namespace lcf
