#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace mkbary {

/// Standard-form LP: minimize cost . x subject to A x = rhs, x >= 0.
/// A is stored by columns, each a list of (row, value) pairs.
struct LinearProgram {
  using Column = std::vector<std::pair<std::size_t, double>>;

  std::size_t rows = 0;
  std::vector<double> rhs;
  std::vector<double> cost;
  std::vector<Column> columns;

  /// Appends a column and returns its index.
  std::size_t add_column(double c, Column entries);
};

struct LpOptions {
  /// Variables whose values define "different" optima for alternate search.
  std::vector<std::size_t> watched;
  bool search_alternate = false;
  std::size_t refactor_period = 50;
};

struct LpSolution {
  std::vector<double> x;
  /// Row duals y with cost_j - y . A_j >= 0 at optimality.
  std::vector<double> duals;
  double objective = 0.0;
  /// cost . x - rhs . y.
  double gap = 0.0;
  /// Largest negative reduced cost over all columns (0 when dual feasible).
  double dual_violation = 0.0;
  std::size_t iterations = 0;
  /// A second optimal vertex differing in a watched variable, if found.
  std::optional<std::vector<double>> alternate;
};

/// Two-phase revised simplex with an explicit basis inverse, Dantzig pricing
/// and a permanent switch to Bland's rule after a long degenerate run.
/// Redundant equality rows are tolerated. Throws NumericalFailure when the
/// problem is infeasible, unbounded, or the iteration cap is reached.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace mkbary
