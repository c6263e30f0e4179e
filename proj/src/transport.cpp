#include "mkbary/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mkbary/error.hpp"

namespace mkbary {

namespace {

struct Cell {
  std::size_t i;
  std::size_t j;
};

void validate_transport_input(std::span<const double> supply, std::span<const double> demand,
                              const Matrix& cost) {
  if (supply.empty() || demand.empty()) throw Error(ErrorCode::InvalidArgument, "empty marginal");
  if (cost.rows() != supply.size() || cost.cols() != demand.size())
    throw Error(ErrorCode::InvalidArgument, "cost matrix shape does not match the marginals");
  double sa = 0.0, sb = 0.0;
  for (double a : supply) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "supply must be nonnegative");
    sa += a;
  }
  for (double b : demand) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "demand must be nonnegative");
    sb += b;
  }
  if (std::abs(sa - sb) > 1e-9 * (1.0 + sa))
    throw Error(ErrorCode::MarginalMismatch, "supply and demand totals differ");
  for (double c : cost.data())
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "cost entries must be finite");
}

// Spanning-tree basis of the bipartite row/column graph. Nodes 0..m-1 are
// rows and m..m+n-1 are columns.
class TreeBasis {
 public:
  TreeBasis(std::size_t m, std::size_t n) : m_(m), n_(n) {}

  std::vector<Cell>& cells() { return cells_; }
  const std::vector<Cell>& cells() const { return cells_; }

  void rebuild_adjacency() {
    adjacency_.assign(m_ + n_, {});
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      adjacency_[cells_[c].i].push_back(c);
      adjacency_[m_ + cells_[c].j].push_back(c);
    }
  }

  std::size_t other_end(std::size_t cell, std::size_t node) const {
    return node < m_ ? m_ + cells_[cell].j : cells_[cell].i;
  }

  /// Basic solution of the tree by leaf peeling.
  std::vector<double> flows(std::span<const double> supply, std::span<const double> demand) const {
    std::vector<double> remaining(m_ + n_);
    for (std::size_t i = 0; i < m_; ++i) remaining[i] = supply[i];
    for (std::size_t j = 0; j < n_; ++j) remaining[m_ + j] = demand[j];
    std::vector<std::size_t> degree(m_ + n_);
    for (std::size_t v = 0; v < m_ + n_; ++v) degree[v] = adjacency_[v].size();
    std::vector<char> used(cells_.size(), 0);
    std::vector<double> flow(cells_.size(), 0.0);
    std::vector<std::size_t> leaves;
    for (std::size_t v = 0; v < m_ + n_; ++v)
      if (degree[v] == 1) leaves.push_back(v);
    std::size_t assigned = 0;
    while (!leaves.empty() && assigned < cells_.size()) {
      const std::size_t leaf = leaves.back();
      leaves.pop_back();
      if (degree[leaf] != 1) continue;
      std::size_t cell = cells_.size();
      for (std::size_t c : adjacency_[leaf])
        if (!used[c]) {
          cell = c;
          break;
        }
      used[cell] = 1;
      ++assigned;
      flow[cell] = remaining[leaf];
      const std::size_t other = other_end(cell, leaf);
      remaining[other] -= remaining[leaf];
      remaining[leaf] = 0.0;
      degree[leaf] = 0;
      if (--degree[other] == 1) leaves.push_back(other);
    }
    return flow;
  }

  /// Potentials with u_0 = 0 and u_i + v_j = c_ij on every basic cell.
  void potentials(const Matrix& cost, std::vector<double>& u, std::vector<double>& v) const {
    u.assign(m_, 0.0);
    v.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t c : adjacency_[node]) {
        const std::size_t other = other_end(c, node);
        if (seen[other]) continue;
        seen[other] = 1;
        const Cell& cell = cells_[c];
        if (other < m_)
          u[cell.i] = cost(cell.i, cell.j) - v[cell.j];
        else
          v[cell.j] = cost(cell.i, cell.j) - u[cell.i];
        stack.push_back(other);
      }
    }
  }

  /// Basic cells on the tree path from row `i` to column `j`, in order.
  std::vector<std::size_t> path(std::size_t i, std::size_t j) const {
    const std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> parent_cell(m_ + n_, none);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> queue{i};
    seen[i] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      if (node == m_ + j) break;
      for (std::size_t c : adjacency_[node]) {
        const std::size_t other = other_end(c, node);
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = c;
        queue.push_back(other);
      }
    }
    std::vector<std::size_t> cells;
    for (std::size_t node = m_ + j; node != i;) {
      const std::size_t c = parent_cell[node];
      if (c == none) throw Error(ErrorCode::NumericalFailure, "basis is not a spanning tree");
      cells.push_back(c);
      node = other_end(c, node);
    }
    std::reverse(cells.begin(), cells.end());
    return cells;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

// North-west corner rule; always yields m + n - 1 cells forming a staircase tree.
std::vector<Cell> north_west_corner(std::span<const double> supply, std::span<const double> demand) {
  const std::size_t m = supply.size(), n = demand.size();
  std::vector<Cell> cells;
  std::size_t i = 0, j = 0;
  double ra = supply[0], rb = demand[0];
  while (true) {
    const double f = std::min(ra, rb);
    cells.push_back({i, j});
    ra -= f;
    rb -= f;
    if (i == m - 1 && j == n - 1) break;
    const bool move_row = i == m - 1 ? false : (j == n - 1 ? true : ra <= rb);
    if (move_row) {
      ++i;
      ra = supply[i];
    } else {
      ++j;
      rb = demand[j];
    }
  }
  return cells;
}

TransportSolution forced_solution(std::span<const double> supply, std::span<const double> demand,
                                  const Matrix& cost) {
  const std::size_t m = supply.size(), n = demand.size();
  TransportSolution s;
  s.coupling = Matrix(m, n);
  s.duals.u.assign(m, 0.0);
  s.duals.v.assign(n, 0.0);
  if (m == 1) {
    for (std::size_t j = 0; j < n; ++j) {
      s.coupling(0, j) = demand[j];
      s.duals.v[j] = cost(0, j);
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      s.coupling(i, 0) = supply[i];
      s.duals.u[i] = cost(i, 0);
    }
  }
  s.objective = plan_cost(s.coupling, cost);
  double dual = 0.0;
  for (std::size_t i = 0; i < m; ++i) dual += supply[i] * s.duals.u[i];
  for (std::size_t j = 0; j < n; ++j) dual += demand[j] * s.duals.v[j];
  s.gap = std::max(0.0, s.objective - dual);
  return s;
}

}  // namespace

double plan_cost(const Matrix& coupling, const Matrix& cost) {
  if (coupling.rows() != cost.rows() || coupling.cols() != cost.cols())
    throw Error(ErrorCode::InvalidArgument, "plan and cost shapes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < cost.rows(); ++i)
    for (std::size_t j = 0; j < cost.cols(); ++j) s += coupling(i, j) * cost(i, j);
  return s;
}

TransportSolution solve_transport_lp(std::span<const double> supply, std::span<const double> demand,
                                     const Matrix& cost) {
  validate_transport_input(supply, demand, cost);
  const std::size_t m = supply.size(), n = demand.size();
  if (m == 1 || n == 1) return forced_solution(supply, demand, cost);

  const double total = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double price_tol = 1e-12 * (1.0 + cost.max_abs());
  const double tie_tol = 1e-14 * (1.0 + total);
  const std::size_t max_iterations = 10000 + 50 * (m + n) * (m + n);
  const std::size_t degenerate_limit = m + n;

  TreeBasis basis(m, n);
  basis.cells() = north_west_corner(supply, demand);
  basis.rebuild_adjacency();
  std::vector<char> in_basis(m * n, 0);
  for (const Cell& c : basis.cells()) in_basis[c.i * n + c.j] = 1;

  std::vector<double> u, v;
  bool bland = false;
  std::size_t degenerate_run = 0;
  std::size_t iterations = 0;
  for (;; ++iterations) {
    if (iterations >= max_iterations)
      throw Error(ErrorCode::NumericalFailure, "transportation simplex hit the iteration cap");
    basis.potentials(cost, u, v);

    std::size_t enter_i = m, enter_j = n;
    double best = -price_tol;
    for (std::size_t i = 0; i < m && !(bland && enter_i < m); ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (in_basis[i * n + j]) continue;
        const double reduced = cost(i, j) - u[i] - v[j];
        if (reduced < best) {
          enter_i = i;
          enter_j = j;
          if (bland) break;
          best = reduced;
        }
      }
    if (enter_i == m) break;

    const std::vector<double> flow = basis.flows(supply, demand);
    const std::vector<std::size_t> cycle = basis.path(enter_i, enter_j);
    // Cells on the path alternate -, +, -, ...; the entering cell is +.
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cycle.size(); k += 2) theta = std::min(theta, std::max(0.0, flow[cycle[k]]));
    std::size_t leave = cycle.size();
    std::size_t leave_index = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const Cell& c = basis.cells()[cycle[k]];
      if (std::max(0.0, flow[cycle[k]]) <= theta + tie_tol && c.i * n + c.j < leave_index) {
        leave = cycle[k];
        leave_index = c.i * n + c.j;
      }
    }

    if (theta <= tie_tol) {
      if (++degenerate_run > degenerate_limit) bland = true;
    } else {
      degenerate_run = 0;
    }

    in_basis[leave_index] = 0;
    in_basis[enter_i * n + enter_j] = 1;
    basis.cells()[leave] = {enter_i, enter_j};
    basis.rebuild_adjacency();
  }

  std::vector<double> flow = basis.flows(supply, demand);
  TransportSolution s;
  s.coupling = Matrix(m, n);
  for (std::size_t c = 0; c < basis.cells().size(); ++c) {
    double f = flow[c];
    if (f < 0.0) {
      if (f < -1e-12 * (1.0 + total))
        throw Error(ErrorCode::NumericalFailure, "optimal basis has a negative flow");
      f = 0.0;
    }
    s.coupling(basis.cells()[c].i, basis.cells()[c].j) = f;
  }
  basis.potentials(cost, u, v);
  s.duals = {u, v};
  s.objective = plan_cost(s.coupling, cost);
  double dual = 0.0;
  for (std::size_t i = 0; i < m; ++i) dual += supply[i] * u[i];
  for (std::size_t j = 0; j < n; ++j) dual += demand[j] * v[j];
  s.gap = std::max(0.0, s.objective - dual);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) s.dual_violation = std::max(s.dual_violation, u[i] + v[j] - cost(i, j));
  s.iterations = iterations;
  if (s.gap > 1e-9 * (1.0 + std::abs(s.objective)))
    throw Error(ErrorCode::NumericalFailure, "duality gap " + std::to_string(s.gap) + " not closed");
  return s;
}

TransportPlan solve_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
  const Matrix c = cost_matrix(cost, mu, nu);
  TransportSolution s = solve_transport_lp(mu.weights(), nu.weights(), c);
  return TransportPlan{mu, nu, std::move(s.coupling), s.objective, std::move(s.duals), s.gap};
}

double transport_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
  if (mu.size() == 1 || nu.size() == 1) {
    if (!(mu.space() == nu.space())) throw Error(ErrorCode::SpaceMismatch, "measures live on different spaces");
    // Forced plan: every pair carries weight(i) * weight(j).
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j)
        s += mu.weight(i) * nu.weight(j) * evaluate(cost, mu.space(), mu.atom(i), nu.atom(j));
    return s;
  }
  return solve_transport(mu, nu, cost).objective;
}

// --- oracle ---------------------------------------------------------------

namespace {

// Union-find over the bipartite nodes, used to recognise spanning trees.
struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
  std::vector<std::size_t> parent;
};

// Cost of the vertex defined by a spanning-tree basis, or +inf if infeasible.
double tree_vertex_cost(const std::vector<Cell>& cells, std::span<const double> supply,
                        std::span<const double> demand, const Matrix& cost) {
  TreeBasis basis(supply.size(), demand.size());
  basis.cells() = cells;
  basis.rebuild_adjacency();
  const std::vector<double> flow = basis.flows(supply, demand);
  double total = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (flow[c] < -1e-12) return std::numeric_limits<double>::infinity();
    total += std::max(0.0, flow[c]) * cost(cells[c].i, cells[c].j);
  }
  return total;
}

}  // namespace

double north_west_corner_minimum(std::span<const double> supply, std::span<const double> demand,
                                 const Matrix& cost) {
  validate_transport_input(supply, demand, cost);
  const std::size_t m = supply.size(), n = demand.size();
  std::vector<std::size_t> rows(m), cols(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    do {
      std::vector<double> a(m), b(n);
      Matrix c(m, n);
      for (std::size_t i = 0; i < m; ++i) a[i] = supply[rows[i]];
      for (std::size_t j = 0; j < n; ++j) b[j] = demand[cols[j]];
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c(i, j) = cost(rows[i], cols[j]);
      best = std::min(best, tree_vertex_cost(north_west_corner(a, b), a, b, c));
    } while (std::next_permutation(cols.begin(), cols.end()));
  } while (std::next_permutation(rows.begin(), rows.end()));
  return best;
}

double brute_force_transport_lp(std::span<const double> supply, std::span<const double> demand,
                                const Matrix& cost) {
  validate_transport_input(supply, demand, cost);
  const std::size_t m = supply.size(), n = demand.size();
  if (m > 4 || n > 4) throw Error(ErrorCode::TooLarge, "brute force supports at most 4 x 4");

  double best = north_west_corner_minimum(supply, demand, cost);

  // Every basic feasible solution is the flow of some spanning tree of the
  // complete bipartite graph; enumerate all (m + n - 1)-subsets of cells.
  const std::size_t cells = m * n, basis_size = m + n - 1;
  std::vector<char> pick(cells, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(basis_size), 1);
  do {
    std::vector<Cell> chosen;
    DisjointSets sets(m + n);
    bool tree = true;
    for (std::size_t c = 0; c < cells && tree; ++c) {
      if (!pick[c]) continue;
      const Cell cell{c / n, c % n};
      tree = sets.unite(cell.i, m + cell.j);
      chosen.push_back(cell);
    }
    if (tree) best = std::min(best, tree_vertex_cost(chosen, supply, demand, cost));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

double brute_force_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost) {
  if (mu.size() > 4 || nu.size() > 4) throw Error(ErrorCode::TooLarge, "brute force supports at most 4 x 4");
  return brute_force_transport_lp(mu.weights(), nu.weights(), cost_matrix(cost, mu, nu));
}

// --- plan algebra -----------------------------------------------------------

TransportPlan transpose(const TransportPlan& plan) {
  TransportPlan t{plan.target, plan.source, plan.coupling.transposed(), plan.objective, std::nullopt, plan.gap};
  if (plan.duals) t.duals = Duals{plan.duals->v, plan.duals->u};
  return t;
}

ThreeCoupling::ThreeCoupling(DiscreteMeasure x, DiscreteMeasure y, DiscreteMeasure z, std::vector<double> mass)
    : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)), mass_(std::move(mass)) {
  if (mass_.size() != x_.size() * y_.size() * z_.size())
    throw Error(ErrorCode::InvalidArgument, "three-coupling tensor has the wrong size");
}

Matrix ThreeCoupling::marginal_xy() const {
  Matrix out(x_.size(), y_.size());
  for (std::size_t i = 0; i < x_.size(); ++i)
    for (std::size_t j = 0; j < y_.size(); ++j)
      for (std::size_t k = 0; k < z_.size(); ++k) out(i, j) += (*this)(i, j, k);
  return out;
}

Matrix ThreeCoupling::marginal_xz() const {
  Matrix out(x_.size(), z_.size());
  for (std::size_t i = 0; i < x_.size(); ++i)
    for (std::size_t j = 0; j < y_.size(); ++j)
      for (std::size_t k = 0; k < z_.size(); ++k) out(i, k) += (*this)(i, j, k);
  return out;
}

Matrix ThreeCoupling::marginal_yz() const {
  Matrix out(y_.size(), z_.size());
  for (std::size_t i = 0; i < x_.size(); ++i)
    for (std::size_t j = 0; j < y_.size(); ++j)
      for (std::size_t k = 0; k < z_.size(); ++k) out(j, k) += (*this)(i, j, k);
  return out;
}

ThreeCoupling glue(const TransportPlan& gamma1, const TransportPlan& gamma2) {
  if (!approx_equal(gamma1.target, gamma2.target, 1e-9))
    throw Error(ErrorCode::MarginalMismatch, "plans do not share their target measure");
  const DiscreteMeasure& lambda = gamma1.target;
  const std::size_t nx = gamma1.source.size(), ny = gamma2.source.size(), nz = lambda.size();
  std::vector<double> mass(nx * ny * nz, 0.0);
  for (std::size_t k = 0; k < nz; ++k) {
    const double lk = lambda.weight(k);
    for (std::size_t i = 0; i < nx; ++i) {
      const double a = gamma1.coupling(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < ny; ++j) mass[(i * ny + j) * nz + k] = a * gamma2.coupling(j, k) / lk;
    }
  }
  return ThreeCoupling(gamma1.source, gamma2.source, lambda, std::move(mass));
}

InterpolationBound interpolation_cost(const DiscreteMeasure& mu0, const DiscreteMeasure& mu1, double t,
                                      double t_prime, const CostSpec& cost) {
  if (!(0.0 <= t && t <= t_prime && t_prime <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "need 0 <= t <= t' <= 1");
  InterpolationBound out;
  out.bound = (t_prime - t) * transport_cost(mu0, mu1, cost);
  out.cost = t == t_prime ? 0.0 : transport_cost(mixture(mu0, mu1, t), mixture(mu0, mu1, t_prime), cost);
  return out;
}

}  // namespace mkbary
