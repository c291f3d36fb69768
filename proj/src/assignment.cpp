#include "lcfusion/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool forbidden(double c) { return !(std::abs(c) < kForbiddenCost); }

// Shortest-augmenting-path solver for the square/rectangular minimization
// problem with nr <= nc and finite entries. Fills col4row (size nr) and
// row4col (size nc, -1 where unassigned).
void solve_min(const Eigen::MatrixXd& cost, std::vector<int>& col4row,
               std::vector<int>& row4col) {
  const int nr = static_cast<int>(cost.rows());
  const int nc = static_cast<int>(cost.cols());
  col4row.assign(static_cast<std::size_t>(nr), -1);
  row4col.assign(static_cast<std::size_t>(nc), -1);

  std::vector<double> u(static_cast<std::size_t>(nr), 0.0);
  std::vector<double> v(static_cast<std::size_t>(nc), 0.0);
  std::vector<double> shortest(static_cast<std::size_t>(nc));
  std::vector<int> path(static_cast<std::size_t>(nc), -1);
  std::vector<int> remaining(static_cast<std::size_t>(nc));
  std::vector<char> in_tree_row(static_cast<std::size_t>(nr));
  std::vector<char> in_tree_col(static_cast<std::size_t>(nc));

  for (int cur_row = 0; cur_row < nr; ++cur_row) {
    double min_val = 0.0;
    int i = cur_row;
    int num_remaining = nc;
    for (int j = 0; j < nc; ++j) remaining[static_cast<std::size_t>(j)] = j;
    std::fill(in_tree_row.begin(), in_tree_row.end(), 0);
    std::fill(in_tree_col.begin(), in_tree_col.end(), 0);
    std::fill(shortest.begin(), shortest.end(), kInf);

    int sink = -1;
    while (sink == -1) {
      if (num_remaining == 0) {
        throw std::logic_error("solve_assignment: augmentation exhausted");
      }
      in_tree_row[static_cast<std::size_t>(i)] = 1;
      int index = -1;
      double lowest = kInf;
      for (int it = 0; it < num_remaining; ++it) {
        const int j = remaining[static_cast<std::size_t>(it)];
        const double r = min_val + cost(i, j) -
                         u[static_cast<std::size_t>(i)] -
                         v[static_cast<std::size_t>(j)];
        if (r < shortest[static_cast<std::size_t>(j)]) {
          path[static_cast<std::size_t>(j)] = i;
          shortest[static_cast<std::size_t>(j)] = r;
        }
        const double sj = shortest[static_cast<std::size_t>(j)];
        if (sj < lowest ||
            (sj == lowest && row4col[static_cast<std::size_t>(j)] == -1)) {
          lowest = sj;
          index = it;
        }
      }
      min_val = lowest;
      if (!(min_val < kInf)) {
        throw std::logic_error("solve_assignment: infeasible cost matrix");
      }
      const int j = remaining[static_cast<std::size_t>(index)];
      if (row4col[static_cast<std::size_t>(j)] == -1) {
        sink = j;
      } else {
        i = row4col[static_cast<std::size_t>(j)];
      }
      in_tree_col[static_cast<std::size_t>(j)] = 1;
      remaining[static_cast<std::size_t>(index)] =
          remaining[static_cast<std::size_t>(--num_remaining)];
    }

    u[static_cast<std::size_t>(cur_row)] += min_val;
    for (int ip = 0; ip < nr; ++ip) {
      if (in_tree_row[static_cast<std::size_t>(ip)] && ip != cur_row) {
        u[static_cast<std::size_t>(ip)] +=
            min_val -
            shortest[static_cast<std::size_t>(
                col4row[static_cast<std::size_t>(ip)])];
      }
    }
    for (int jp = 0; jp < nc; ++jp) {
      if (in_tree_col[static_cast<std::size_t>(jp)]) {
        v[static_cast<std::size_t>(jp)] -=
            min_val - shortest[static_cast<std::size_t>(jp)];
      }
    }

    int j = sink;
    while (true) {
      const int ip = path[static_cast<std::size_t>(j)];
      row4col[static_cast<std::size_t>(j)] = ip;
      std::swap(col4row[static_cast<std::size_t>(ip)], j);
      if (ip == cur_row) break;
    }
  }
}

}  // namespace

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost,
                                  AssignSense sense) {
  AssignmentResult result;
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n == 0 || m == 0) return result;

  const bool transposed = n > m;
  const int nr = transposed ? m : n;
  const int nc = transposed ? n : m;

  // Internal stand-in for forbidden entries: a power of two comfortably
  // above any achievable |sum of finite costs|, so it dominates the choice
  // of matching and, being a power of two, keeps the dual arithmetic exact
  // whenever the finite costs live on a bounded dyadic grid.
  double max_abs = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = cost(i, j);
      if (!forbidden(c)) max_abs = std::max(max_abs, std::abs(c));
    }
  }
  const double big =
      std::exp2(std::ceil(std::log2(max_abs * nr + 1.0)) + 4.0);
  Eigen::MatrixXd work(nr, nc);
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nc; ++j) {
      const double c = transposed ? cost(j, i) : cost(i, j);
      if (forbidden(c)) {
        work(i, j) = big;
      } else {
        work(i, j) = sense == AssignSense::Maximize ? -c : c;
      }
    }
  }

  std::vector<int> col4row, row4col;
  solve_min(work, col4row, row4col);

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(nr));
  for (int i = 0; i < nr; ++i) {
    const int j = col4row[static_cast<std::size_t>(i)];
    const int row = transposed ? j : i;
    const int col = transposed ? i : j;
    if (forbidden(cost(row, col))) continue;  // forced onto a forbidden entry
    pairs.emplace_back(row, col);
  }
  std::sort(pairs.begin(), pairs.end());

  // Canonicalize ties: among equally optimal matchings prefer the lowest
  // (row, col) lexicographic order, realized by pairwise exchanges that
  // keep the objective exactly unchanged.
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (std::size_t a = 0; a + 1 < pairs.size(); ++a) {
      for (std::size_t b = a + 1; b < pairs.size(); ++b) {
        const auto [i1, j1] = pairs[a];
        const auto [i2, j2] = pairs[b];
        if (j2 >= j1) continue;
        const double c11 = cost(i1, j1), c22 = cost(i2, j2);
        const double c12 = cost(i1, j2), c21 = cost(i2, j1);
        if (forbidden(c12) || forbidden(c21)) continue;
        if (c11 + c22 == c12 + c21) {
          pairs[a].second = j2;
          pairs[b].second = j1;
          swapped = true;
        }
      }
    }
  }

  double objective = 0.0;
  for (const auto& [i, j] : pairs) objective += cost(i, j);
  result.pairs = std::move(pairs);
  result.objective = objective;
  return result;
}

}  // namespace lcf
